#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "frt/error.hpp"
#include "frt/statistics.hpp"
#include "test_util.hpp"

using namespace frt;
using testutil::rows;
using testutil::vec;

namespace {

GroupSummaries summarize(const oracle::Sample& s) { return group_summaries(testutil::to_dataset(s)); }

oracle::Sample moment_sample(const std::vector<double>& mean, const std::vector<double>& var, int n) {
  oracle::Sample s;
  s.arms = static_cast<int>(mean.size());
  for (int j = 0; j < s.arms; ++j) {
    const auto a = testutil::arm_with_moments(n, mean[j], var[j]);
    s.y.insert(s.y.end(), a.begin(), a.end());
    s.w.insert(s.w.end(), n, j);
  }
  return s;
}

Eigen::MatrixXd random_contrast(std::mt19937_64& rng, int m, int J) {
  std::normal_distribution<double> n;
  Eigen::MatrixXd C(m, J);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < J; ++j) C(i, j) = n(rng);
    C.row(i).array() -= C.row(i).mean();
  }
  return C;
}

}  // namespace

TEST_SUITE("statistics") {
  TEST_CASE("statistics vanish at the plug-in target") {
    std::mt19937_64 rng(41);
    const auto smp = oracle::random_sample(rng, {4, 5, 3});
    const GroupSummaries s = summarize(smp);
    const Eigen::MatrixXd C = anova_contrast(3);
    const Hypothesis h = make_hypothesis(C, C * s.mean_vector());
    CHECK(x2(s, h) == doctest::Approx(0.0).scale(1.0));
    CHECK(x2_hw(s, h) == doctest::Approx(0.0).scale(1.0));
    const Hypothesis h1 = make_hypothesis(C.topRows(1), C.topRows(1) * s.mean_vector());
    CHECK(t_stat(s, h1) == doctest::Approx(0.0).scale(1.0));
    CHECK(t_plus(s, h1) == 0.0);
  }

  TEST_CASE("two summary arms give X2 near 0.512") {
    const auto smp = moment_sample({-0.029, 0.054}, {0.152, 0.386}, 40);
    const Hypothesis h = make_hypothesis(rows({{1, -1}}), vec({0}));
    const double v = x2(summarize(smp), h);
    // 0.083^2 / (0.152/40 + 0.386/40)
    CHECK(v == doctest::Approx(0.083 * 0.083 / (0.538 / 40)).epsilon(1e-12));
    CHECK(v == doctest::Approx(0.512).epsilon(1e-3));
  }

  TEST_CASE("three summary arms give F near 7.87") {
    const auto smp = moment_sample({-0.029, 0.054, 0.640}, {0.152, 0.386, 1.489}, 40);
    const GroupSummaries s = summarize(smp);
    const Hypothesis h = make_hypothesis(anova_contrast(3), vec({0, 0}));
    CHECK(f_stat(s, h) == doctest::Approx(oracle::f_ols(smp, anova_contrast(3), vec({0, 0}))).epsilon(1e-12));
    CHECK(f_stat(s, h) == doctest::Approx(7.87).epsilon(2e-3));
  }

  TEST_CASE("property: statistics agree with the dense oracles") {
    std::mt19937_64 rng(42);
    for (int rep = 0; rep < 100; ++rep) {
      const int J = 2 + rep % 4;
      std::vector<int> sizes;
      for (int j = 0; j < J; ++j) sizes.push_back(2 + static_cast<int>(rng() % 6));
      const auto smp = oracle::random_sample(rng, sizes);
      const GroupSummaries s = summarize(smp);
      const int m = 1 + static_cast<int>(rng() % (J - 1));
      const Eigen::MatrixXd C = random_contrast(rng, m, J);
      Eigen::VectorXd x = Eigen::VectorXd::Random(m);
      const Hypothesis h = make_hypothesis(C, x);
      const Hypothesis h0 = make_hypothesis(C, Eigen::VectorXd::Zero(m));
      CHECK(x2(s, h) == doctest::Approx(oracle::x2(smp, C, x)).epsilon(1e-10));
      CHECK(x2_hw(s, h) == doctest::Approx(oracle::x2_hw(smp, C, x)).epsilon(1e-10));
      CHECK(f_stat(s, h) == doctest::Approx(oracle::f_ols(smp, C, x)).epsilon(1e-9));
      CHECK(box(s, h0) == doctest::Approx(oracle::box(smp, C)).epsilon(1e-10));
      const Hypothesis h1 = make_hypothesis(C.topRows(1), x.head(1));
      CHECK(t_stat(s, h1) == doctest::Approx(oracle::t(smp, C.row(0), x(0))).epsilon(1e-10));
      CHECK(x2(s, h) >= 0.0);
      CHECK(box(s, h0) >= 0.0);
      CHECK(f_stat(s, h) >= 0.0);
    }
  }

  TEST_CASE("ANOVA: general forms equal the weighted-mean and sum-of-squares forms") {
    std::mt19937_64 rng(43);
    for (int rep = 0; rep < 100; ++rep) {
      const int J = 2 + rep % 5;
      std::vector<int> sizes;
      for (int j = 0; j < J; ++j) sizes.push_back(2 + static_cast<int>(rng() % 7));
      const GroupSummaries s = summarize(oracle::random_sample(rng, sizes));
      const Hypothesis h = make_hypothesis(anova_contrast(J), Eigen::VectorXd::Zero(J - 1));
      CHECK(x2(s, h) == doctest::Approx(anova_x2_weighted(s)).epsilon(1e-10));
      CHECK(f_stat(s, h) == doctest::Approx(anova_f_classic(s)).epsilon(1e-10));
    }
  }

  TEST_CASE("two arms: X2 = B = t^2") {
    std::mt19937_64 rng(44);
    for (int rep = 0; rep < 50; ++rep) {
      const GroupSummaries s = summarize(oracle::random_sample(rng, {2 + rep % 5, 3 + rep % 4}));
      const Hypothesis h = make_hypothesis(rows({{1, -1}}), vec({0}));
      const double t = t_stat(s, h);
      CHECK(x2(s, h) == doctest::Approx(box(s, h)).epsilon(1e-12));
      CHECK(x2(s, h) == doctest::Approx(t * t).epsilon(1e-12));
    }
  }

  TEST_CASE("row-vector contrast: B = X2") {
    std::mt19937_64 rng(45);
    for (int rep = 0; rep < 50; ++rep) {
      const GroupSummaries s = summarize(oracle::random_sample(rng, {3, 4, 5, 2}));
      const Hypothesis h = make_hypothesis(random_contrast(rng, 1, 4), vec({0}));
      CHECK(box(s, h) == doctest::Approx(x2(s, h)).epsilon(1e-10));
    }
  }

  TEST_CASE("balanced design with equal-diagonal projection: B = F") {
    std::mt19937_64 rng(46);
    for (int rep = 0; rep < 50; ++rep) {
      const int J = 3 + rep % 3;
      const GroupSummaries s = summarize(oracle::random_sample(rng, std::vector<int>(J, 4 + rep % 3)));
      const Hypothesis h = make_hypothesis(anova_contrast(J), Eigen::VectorXd::Zero(J - 1));
      CHECK(box(s, h) == doctest::Approx(f_stat(s, h)).epsilon(1e-10));
    }
    const GroupSummaries s = summarize(oracle::random_sample(rng, {4, 4, 4, 4}));
    const Hypothesis h = make_hypothesis(factorial_contrast(2, std::vector<int>{1, 2}), vec({0, 0}));
    CHECK(box(s, h) == doctest::Approx(f_stat(s, h)).epsilon(1e-10));
  }

  TEST_CASE("means proportional to ones give B = 0") {
    const oracle::Sample smp{{0, 0, 1, 1, 2, 2}, {1, 3, 0, 4, 1.5, 2.5}, {}, 3};
    const Hypothesis h = make_hypothesis(anova_contrast(3), vec({0, 0}));
    CHECK(box(summarize(smp), h) == doctest::Approx(0.0).scale(1.0));
    CHECK(f_stat(summarize(smp), h) == doctest::Approx(0.0).scale(1.0));
  }

  TEST_CASE("Box and F reject non-zero targets and F rejects vector outcomes") {
    CHECK_THROWS_AS(StatisticEvaluator(StatKind::Box, make_hypothesis(rows({{1, -1}}), vec({1}))), Error);
    const Hypothesis hv = assemble_vector_contrast({{rows({{1, -1}}), vec({0})}, {rows({{1, -1}}), vec({0})}}, 2);
    CHECK_THROWS_AS(StatisticEvaluator(StatKind::F, hv), Error);
    CHECK_THROWS_AS(StatisticEvaluator(StatKind::T, make_hypothesis(anova_contrast(3), vec({0, 0}))), Error);
  }

  TEST_CASE("balanced Huber-White is X2 times n/(n-1)") {
    std::mt19937_64 rng(47);
    for (int rep = 0; rep < 50; ++rep) {
      const int n = 2 + rep % 8;
      const GroupSummaries s = summarize(oracle::random_sample(rng, {n, n, n}));
      const Hypothesis h = make_hypothesis(anova_contrast(3), Eigen::VectorXd::Random(2));
      CHECK(x2_hw(s, h) == doctest::Approx(x2(s, h) * n / (n - 1.0)).epsilon(1e-10));
    }
  }

  TEST_CASE("property: Huber-White gap is bounded by 1/(min N_j - 1)") {
    std::mt19937_64 rng(48);
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<int> sizes{2 + rep % 9, 5 + rep % 3, 3 + rep % 11};
      const GroupSummaries s = summarize(oracle::random_sample(rng, sizes));
      const Hypothesis h = make_hypothesis(anova_contrast(3), Eigen::VectorXd::Random(2));
      const int nmin = *std::min_element(sizes.begin(), sizes.end());
      const double a = x2(s, h), b = x2_hw(s, h);
      CHECK(std::abs(b - a) / a <= 1.0 / (nmin - 1) + 1e-12);
      CHECK(b >= a);
    }
  }

  TEST_CASE("property: reparameterization leaves X2, X2_HW and F unchanged") {
    std::mt19937_64 rng(49);
    for (int rep = 0; rep < 50; ++rep) {
      const GroupSummaries s = summarize(oracle::random_sample(rng, {3, 5, 4, 6}));
      const Eigen::MatrixXd C = random_contrast(rng, 2, 4);
      const Eigen::VectorXd x = Eigen::VectorXd::Random(2);
      Eigen::MatrixXd A = Eigen::MatrixXd::Random(2, 2);
      A(0, 0) += 3.0;
      A(1, 1) += 3.0;
      const Hypothesis h = make_hypothesis(C, x), g = make_hypothesis(A * C, A * x);
      CHECK(x2(s, g) == doctest::Approx(x2(s, h)).epsilon(1e-9));
      CHECK(x2_hw(s, g) == doctest::Approx(x2_hw(s, h)).epsilon(1e-9));
      CHECK(f_stat(s, g) == doctest::Approx(f_stat(s, h)).epsilon(1e-9));
    }
  }

  TEST_CASE("property: outcome scaling leaves quadratic forms unchanged and t follows the sign") {
    std::mt19937_64 rng(50);
    for (int rep = 0; rep < 50; ++rep) {
      const auto smp = oracle::random_sample(rng, {4, 3, 5});
      const double c = (rep % 2 ? -1.0 : 1.0) * (0.1 + 0.2 * rep);
      oracle::Sample sc = smp;
      for (double& y : sc.y) y *= c;
      const GroupSummaries s = summarize(smp), t = summarize(sc);
      const Eigen::MatrixXd C = anova_contrast(3);
      const Eigen::VectorXd x = vec({0.3, -0.2});
      const Hypothesis h = make_hypothesis(C, x), hc = make_hypothesis(C, c * x);
      const Hypothesis h0 = make_hypothesis(C, vec({0, 0}));
      CHECK(x2(t, hc) == doctest::Approx(x2(s, h)).epsilon(1e-10));
      CHECK(x2_hw(t, hc) == doctest::Approx(x2_hw(s, h)).epsilon(1e-10));
      CHECK(f_stat(t, hc) == doctest::Approx(f_stat(s, h)).epsilon(1e-10));
      CHECK(box(t, h0) == doctest::Approx(box(s, h0)).epsilon(1e-10));
      const Hypothesis r = make_hypothesis(C.topRows(1), x.head(1)), rc = make_hypothesis(C.topRows(1), c * x.head(1));
      CHECK(t_stat(t, rc) == doctest::Approx((c > 0 ? 1.0 : -1.0) * t_stat(s, r)).epsilon(1e-10));
    }
  }

  TEST_CASE("gold-standard contrast t by hand") {
    // Delta = 2: c = (1, -2, 1). Arms {0,2}, {1,2,3}, {4,8}; N = 7.
    const oracle::Sample smp{{0, 0, 1, 1, 1, 2, 2}, {0, 2, 1, 2, 3, 4, 8}, {}, 3};
    const Hypothesis h = make_hypothesis(rows({{1, -2, 1}}), vec({0.5}));
    // means 1, 2, 6; variances 2, 1, 8; c*Ybar = 1 - 4 + 6 = 3
    // c D c^T = 7 * (1*2/2 + 4*1/3 + 1*8/2) = 7 * (1 + 4/3 + 4) = 7 * 19/3
    const double want = std::sqrt(7.0) * (0.5 - 3.0) / std::sqrt(7.0 * 19.0 / 3.0);
    CHECK(t_stat(summarize(smp), h) == doctest::Approx(want).epsilon(1e-14));
    CHECK(t_plus(summarize(smp), h) == 0.0);
  }

  TEST_CASE("trend statistic") {
    const std::vector<double> doses{1, 2, 3};
    const oracle::Sample up{{0, 0, 0, 1, 1, 1, 2, 2, 2}, {0, 1, 2, 2, 3, 5, 6, 7, 9}, {}, 3};
    const GroupSummaries s = summarize(up);
    const double tr = trend_t(s, doses);
    CHECK(tr > 0.0);
    const Hypothesis h = make_hypothesis(rows({{-1, 0, 1}}), vec({0}));
    CHECK(tr == doctest::Approx(-t_stat(s, h)).epsilon(1e-12));
    CHECK(tr == doctest::Approx(-oracle::t(up, rows({{-1, 0, 1}}).row(0), 0.0)).epsilon(1e-12));
    const std::vector<double> flat{1, 1, 1};
    try {
      trend_t(s, flat);
      FAIL("expected BadDoses");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::BadDoses);
    }
  }

  TEST_CASE("stratified X2 with one stratum is bitwise the pooled X2") {
    std::mt19937_64 rng(51);
    for (int rep = 0; rep < 50; ++rep) {
      const Dataset d = testutil::to_dataset(oracle::random_sample(rng, {3, 4, 5}));
      const Hypothesis h = make_hypothesis(anova_contrast(3), Eigen::VectorXd::Random(2));
      const double a = x2(group_summaries(d), h);
      const double b = stratified_x2(stratified_summaries(d), h);
      CHECK(a == b);
    }
  }

  TEST_CASE("property: stratified statistics agree with the stratified oracles") {
    std::mt19937_64 rng(52);
    for (int rep = 0; rep < 50; ++rep) {
      oracle::Sample s = oracle::random_sample(rng, {3, 4});
      oracle::Sample t = oracle::random_sample(rng, {5, 2 + rep % 4});
      s.h.assign(s.w.size(), 0);
      for (std::size_t i = 0; i < t.w.size(); ++i) {
        s.w.push_back(t.w[i]);
        s.y.push_back(t.y[i] + 3.0);
        s.h.push_back(1);
      }
      const Dataset d = testutil::to_dataset(s);
      const Eigen::MatrixXd C = rows({{1, -1}});
      const Eigen::VectorXd x = vec({0.4});
      const Hypothesis h = make_hypothesis(C, x);
      const StratifiedSummaries ss = stratified_summaries(d);
      CHECK(stratified_x2(ss, h) == doctest::Approx(oracle::x2_stratified(s, C, x)).epsilon(1e-10));
      CHECK(*StatisticEvaluator(StatKind::F, h)(ss) == doctest::Approx(oracle::f_ols(s, C, x)).epsilon(1e-9));
    }
  }

  TEST_CASE("two identical strata relate to the merged data by (2n-2)/(2n-1)") {
    // Duplicating every arm into a second stratum keeps the means; the merged
    // variance shrinks by (2n-2)/(2n-1), the stratified one does not.
    std::mt19937_64 rng(53);
    for (int rep = 0; rep < 20; ++rep) {
      const int n = 3 + rep % 4;
      oracle::Sample s = oracle::random_sample(rng, {n, n, n});
      oracle::Sample two = s;
      two.h.assign(s.w.size(), 0);
      for (std::size_t i = 0; i < s.w.size(); ++i) {
        two.w.push_back(s.w[i]);
        two.y.push_back(s.y[i]);
        two.h.push_back(1);
      }
      oracle::Sample merged = two;
      merged.h.clear();
      const Hypothesis h = make_hypothesis(anova_contrast(3), vec({0.1, -0.3}));
      const double strat = stratified_x2(stratified_summaries(testutil::to_dataset(two)), h);
      const double pooled = x2(summarize(merged), h);
      CHECK(strat == doctest::Approx(pooled * (2.0 * n - 2.0) / (2.0 * n - 1.0)).epsilon(1e-10));
    }
  }

  TEST_CASE("vector-outcome X2 matches a hand-built long covariance") {
    std::mt19937_64 rng(54);
    std::normal_distribution<double> nd;
    const int J = 3, d = 2, n = 5;
    std::vector<int> w;
    Eigen::MatrixXd y(J * n, d);
    for (int j = 0; j < J; ++j)
      for (int k = 0; k < n; ++k) {
        w.push_back(j);
        y(j * n + k, 0) = nd(rng) + j;
        y(j * n + k, 1) = 0.5 * y(j * n + k, 0) + nd(rng);
      }
    const Dataset data = make_dataset(w, y);
    const Eigen::MatrixXd C1 = anova_contrast(3);
    const Hypothesis h = assemble_vector_contrast({{C1, vec({0, 0})}, {C1, vec({0.2, 0})}}, d);
    Eigen::VectorXd mean(J * d);
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(J * d, J * d);
    for (int j = 0; j < J; ++j) {
      const Eigen::MatrixXd block = y.middleRows(j * n, n);
      const Eigen::RowVectorXd mu = block.colwise().mean();
      const Eigen::MatrixXd cen = block.rowwise() - mu;
      mean.segment(j * d, d) = mu.transpose();
      D.block(j * d, j * d, d, d) = (J * n) * (cen.transpose() * cen) / (n - 1.0) / n;
    }
    const Eigen::VectorXd r = h.C * mean - h.x;
    const double want = (J * n) * r.dot((h.C * D * h.C.transpose()).inverse() * r);
    CHECK(x2(group_summaries(data), h) == doctest::Approx(want).epsilon(1e-10));
  }

  TEST_CASE("evaluator agrees with the throwing entry points") {
    std::mt19937_64 rng(55);
    const GroupSummaries s = summarize(oracle::random_sample(rng, {4, 4, 5}));
    const Hypothesis h = make_hypothesis(anova_contrast(3), vec({0, 0}));
    CHECK(*StatisticEvaluator(StatKind::X2, h)(s) == x2(s, h));
    CHECK(*StatisticEvaluator(StatKind::X2HW, h)(s) == x2_hw(s, h));
    CHECK(*StatisticEvaluator(StatKind::F, h)(s) == f_stat(s, h));
    CHECK(*StatisticEvaluator(StatKind::AbsContrast, h)(s) == doctest::Approx((h.C * s.mean_vector()).norm()));
  }

  TEST_CASE("statistic names parse and orientations are fixed") {
    for (auto k : {StatKind::X2, StatKind::Box, StatKind::F, StatKind::X2HW, StatKind::T, StatKind::TPlus,
                   StatKind::Trend, StatKind::AbsContrast})
      CHECK(parse_stat_kind(to_string(k)) == k);
    CHECK(tail_of(StatKind::TPlus) == Tail::UpperOneSided);
    CHECK(tail_of(StatKind::X2) == Tail::Upper);
    CHECK_THROWS_AS(parse_stat_kind("median"), Error);
  }

  TEST_CASE("equalizing variances brings m F to X2") {
    std::mt19937_64 rng(56);
    const auto base = oracle::random_sample(rng, {6, 6, 6});
    const auto m = oracle::moments(base);
    const Hypothesis h = make_hypothesis(anova_contrast(3), vec({0, 0}));
    std::vector<double> gaps;
    for (double lambda : {0.0, 0.9, 1.0}) {
      // Pull each arm's variance towards 1 without moving its mean.
      oracle::Sample s = base;
      for (std::size_t i = 0; i < s.y.size(); ++i) {
        const int j = s.w[i];
        const double f = std::sqrt((1 - lambda) * m.var[j] + lambda) / std::sqrt(m.var[j]);
        s.y[i] = m.mean[j] + (s.y[i] - m.mean[j]) * f;
      }
      const GroupSummaries g = summarize(s);
      gaps.push_back(std::abs(2.0 * f_stat(g, h) - x2(g, h)));
    }
    CHECK(gaps[1] < gaps[0]);
    CHECK(gaps[2] < 1e-10 * (1.0 + x2(summarize(base), h)));
  }
}
