#include <doctest.h>

#include <functional>
#include <random>

#include "frt/assignment.hpp"
#include "frt/error.hpp"
#include "frt/imputation.hpp"
#include "test_util.hpp"

using namespace frt;
using testutil::rows;
using testutil::vec;

namespace {

Dataset cluster_dataset(const std::vector<std::string>& cluster, const std::vector<std::string>& arm,
                        const std::vector<double>& y) {
  RawDataset r;
  r.design = Design::Cluster;
  for (std::size_t i = 0; i < y.size(); ++i) r.units.push_back({std::to_string(i), arm[i], {y[i]}, {}, cluster[i]});
  return validate_dataset(r);
}

void check_table_invariants(const ScienceTable& t, const Dataset& d, const Hypothesis& h) {
  for (int i = 0; i < d.size(); ++i) {
    CHECK(t(i, d.treatment[i]) == d.outcome(i, 0));
    for (int j = 0; j < d.arms; ++j)
      for (int k = 0; k < d.arms; ++k) {
        const auto& z = t.shifts[d.stratum[i]].z;
        CHECK(t(i, j) - t(i, k) == doctest::Approx(z(j, 0) - z(k, 0)).epsilon(1e-12).scale(1.0));
      }
  }
  CHECK(sharp_null_residual(t, d, h) < kSharpNullTol);
}

}  // namespace

TEST_SUITE("imputation") {
  TEST_CASE("zero targets give zero shifts") {
    const Hypothesis h = make_hypothesis(anova_contrast(4), Eigen::VectorXd::Zero(3));
    CHECK(solve_z(h).z.cwiseAbs().maxCoeff() < 1e-15);
    const Hypothesis h2 = make_hypothesis(rows({{1, -1, 0}}), vec({0}));
    CHECK(solve_z(h2).z.cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("two arms: z = (tau/2, -tau/2)") {
    for (double tau : {-3.0, 0.25, 1.0, 7.5}) {
      const auto z = solve_z(make_hypothesis(rows({{1, -1}}), vec({tau}))).z;
      CHECK(z(0, 0) == doctest::Approx(tau / 2).epsilon(1e-14));
      CHECK(z(1, 0) == doctest::Approx(-tau / 2).epsilon(1e-14));
    }
  }

  TEST_CASE("factorial main effect: z = c g1 / 4") {
    const Eigen::MatrixXd g = model_matrix(2).G.cast<double>();
    for (double c : {1.0, -2.0, 0.3}) {
      const auto z = solve_z(make_hypothesis(g.topRows(1), vec({c}))).z;
      CHECK((z.col(0) - c * g.row(0).transpose() / 4.0).cwiseAbs().maxCoeff() < 1e-14);
    }
  }

  TEST_CASE("observed 5 under arm 1 imputes (5, 5 - tau)") {
    const double tau = 1.5;
    const Dataset d = make_dataset({0, 0, 1, 1}, rows({{5}, {1}, {2}, {3}}));
    const Hypothesis h = make_hypothesis(rows({{1, -1}}), vec({tau}));
    const ScienceTable t = impute(d, h);
    CHECK(t(0, 0) == 5.0);
    CHECK(t(0, 1) == doctest::Approx(5.0 - tau));
    CHECK(t(2, 0) == doctest::Approx(2.0 + tau));
    check_table_invariants(t, d, h);
  }

  TEST_CASE("zero shift copies the observed outcomes") {
    const Dataset d = make_dataset({0, 1, 2, 0, 1, 2}, rows({{1}, {2}, {3}, {4}, {5}, {6}}));
    const ScienceTable t = impute(d, make_hypothesis(anova_contrast(3), vec({0, 0})));
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 3; ++j) CHECK(t(i, j) == d.outcome(i, 0));
  }

  TEST_CASE("property: sharp null, agreement and additivity on random data") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> n;
    for (int rep = 0; rep < 30; ++rep) {
      const auto smp = oracle::random_sample(rng, {3, 4, 2, 5});
      const Dataset d = testutil::to_dataset(smp);
      const Eigen::MatrixXd C = rep % 2 ? anova_contrast(4) : rows({{1, -1, 0, 0}, {0, 0, 1, -1}});
      Eigen::VectorXd x(C.rows());
      for (int r = 0; r < x.size(); ++r) x(r) = n(rng);
      const Hypothesis h = make_hypothesis(C, x);
      const ScienceTable t = impute(d, h);
      check_table_invariants(t, d, h);
      // Column means: Ybar*(j) = Ybar_obs + z_j - zbar with zbar = sum N_j z_j / N.
      const auto& z = t.shifts[0].z;
      double ybar = 0.0, zbar = 0.0;
      for (int i = 0; i < d.size(); ++i) {
        ybar += d.outcome(i, 0) / d.size();
        zbar += z(d.treatment[i], 0) / d.size();
      }
      for (int j = 0; j < 4; ++j) {
        double col = 0.0;
        for (int i = 0; i < d.size(); ++i) col += t(i, j) / d.size();
        CHECK(col == doctest::Approx(ybar + z(j, 0) - zbar).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("property: re-imputing permuted data reproduces the table") {
    std::mt19937_64 rng(32);
    const auto smp = oracle::random_sample(rng, {3, 3, 4});
    const Dataset d = testutil::to_dataset(smp);
    const Hypothesis h = make_hypothesis(anova_contrast(3), vec({0.7, -1.2}));
    const ScienceTable t = impute(d, h);
    const RandomizationScheme scheme = scheme_for(d);
    std::vector<int> w;
    for (int rep = 0; rep < 20; ++rep) {
      draw_assignment(scheme, rng, w);
      Eigen::MatrixXd y;
      t.observe(w, y);
      const ScienceTable t2 = impute(make_dataset(w, y), h);
      CHECK((t2.shifts[0].z - t.shifts[0].z).cwiseAbs().maxCoeff() == 0.0);
      for (int i = 0; i < d.size(); ++i)
        for (int j = 0; j < 3; ++j) CHECK(t2(i, j) == doctest::Approx(t(i, j)).epsilon(1e-12));
    }
  }

  TEST_CASE("property: row scaling of the completion does not change z") {
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> s(0.1, 10.0);
    const Hypothesis h = make_hypothesis(rows({{1, -1, 0, 0, 0}}), vec({2.0}));
    const Eigen::VectorXd z0 = solve_z(h.blocks[0]);
    for (int rep = 0; rep < 20; ++rep) {
      ContrastBlock b = h.blocks[0];
      for (int r = 0; r < b.C_tilde.rows(); ++r) b.C_tilde.row(r) *= (rep % 2 ? -1.0 : 1.0) * s(rng);
      CHECK((solve_z(b) - z0).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("stratified imputation works stratum by stratum") {
    const Dataset d = make_dataset({0, 0, 1, 1, 0, 0, 1, 1, 1}, rows({{1}, {2}, {4}, {7}, {3}, {3.5}, {0}, {1}, {5}}),
                                   {0, 0, 0, 0, 1, 1, 1, 1, 1});
    Hypothesis h = make_hypothesis(rows({{1, -1}}), vec({0.0}));
    ScienceTable t = impute(d, h);
    for (int i = 0; i < d.size(); ++i) CHECK(t(i, 0) == t(i, 1));

    // Per-stratum targets averaging to x (weights 4/9 and 5/9).
    h.x = vec({1.0});
    h.stratum_x = {vec({2.0}), vec({(9.0 - 8.0) / 5.0})};
    t = impute(d, h);
    for (int i = 0; i < d.size(); ++i) CHECK(t(i, 0) - t(i, 1) == doctest::Approx(h.stratum_x[d.stratum[i]](0)));
    CHECK(sharp_null_residual(t, d, h) < kSharpNullTol);

    h.stratum_x = {vec({2.0}), vec({2.0})};
    CHECK_THROWS_AS(impute(d, h), Error);
    try {
      impute(d, h);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::StratumTargetMismatch);
    }
  }

  TEST_CASE("vector outcomes impute coordinate by coordinate") {
    Eigen::MatrixXd y(6, 2);
    y << 1, 0, 2, 1, 4, 3, 3, 1, 5, 2, 6, 6;
    const Dataset d = make_dataset({0, 0, 0, 1, 1, 1}, y);
    const Hypothesis h = assemble_vector_contrast({{rows({{1, -1}}), vec({1.0})}, {rows({{1, -1}}), vec({-2.0})}}, 2);
    const ScienceTable t = impute(d, h);
    for (int i = 0; i < 6; ++i) {
      CHECK(t(i, 0, 0) - t(i, 1, 0) == doctest::Approx(1.0));
      CHECK(t(i, 0, 1) - t(i, 1, 1) == doctest::Approx(-2.0));
      CHECK(t(i, d.treatment[i], 1) == y(i, 1));
    }
  }

  TEST_CASE("cluster aggregation sums member outcomes") {
    const Dataset d = cluster_dataset({"a", "a", "b", "b", "b", "c", "c", "d", "d"},
                                      {"1", "1", "1", "1", "1", "2", "2", "2", "2"}, {1, 2, 1, 1, 1, 4, 0, 2, 2});
    const Dataset agg = aggregate_clusters(d);
    REQUIRE(agg.size() == 4);
    CHECK(agg.outcome(0, 0) == 3.0);
    CHECK(agg.outcome(1, 0) == 3.0);
    CHECK(agg.treatment == std::vector<int>{0, 0, 1, 1});
    CHECK(agg.design == Design::Complete);
  }

  TEST_CASE("singleton clusters aggregate to the unit data") {
    const Dataset d = cluster_dataset({"1", "2", "3", "4", "5"}, {"1", "1", "2", "2", "2"}, {0.5, 1.5, 2, 4, 8});
    const Dataset agg = aggregate_clusters(d);
    CHECK(agg.treatment == d.treatment);
    CHECK(agg.outcome == d.outcome);
  }

  TEST_CASE("scaled aggregated means are unbiased over all cluster assignments") {
    // Four clusters of sizes 1, 2, 3, 2 (N = 8); potential outcomes per unit.
    const std::vector<std::string> cl{"a", "b", "b", "c", "c", "c", "d", "d"};
    const std::vector<double> y1{1, 2, 0, 5, 1, 1, 3, 2}, y2{0, 0, 4, 2, 2, 1, 6, 1};
    const double N = 8, L = 4;
    double truth1 = 0, truth2 = 0;
    for (int i = 0; i < 8; ++i) {
      truth1 += y1[i] / N;
      truth2 += y2[i] / N;
    }
    const std::vector<int> cidx{0, 1, 1, 2, 2, 2, 3, 3};
    double sum1 = 0, sum2 = 0;
    int count = 0;
    enumerate_assignments(complete_scheme(std::vector<int>{2, 2}), [&](std::span<const int> wc) {
      std::vector<std::string> arm(8);
      std::vector<double> obs(8);
      for (int i = 0; i < 8; ++i) {
        arm[i] = wc[cidx[i]] == 0 ? "1" : "2";
        obs[i] = wc[cidx[i]] == 0 ? y1[i] : y2[i];
      }
      const Dataset agg = aggregate_clusters(cluster_dataset(cl, arm, obs));
      double m1 = 0, m2 = 0;
      for (int l = 0; l < 4; ++l) (agg.treatment[l] == 0 ? m1 : m2) += agg.outcome(l, 0) / 2.0;
      sum1 += L * m1 / N;
      sum2 += L * m2 / N;
      ++count;
    });
    CHECK(count == 6);
    CHECK(sum1 / count == doctest::Approx(truth1).epsilon(1e-14));
    CHECK(sum2 / count == doctest::Approx(truth2).epsilon(1e-14));
  }

  TEST_CASE("cluster target is rescaled by N / L") {
    const Hypothesis h = make_hypothesis(rows({{1, -1}}), vec({0.5}));
    CHECK(cluster_hypothesis(h, 12, 4).x(0) == doctest::Approx(1.5));
  }

  TEST_CASE("near-singular stacked system is refused") {
    ContrastBlock b;
    b.C = rows({{1, -1, 0}});
    b.x = vec({1});
    b.C_tilde = rows({{1, -1 + 1e-14, -1e-14}});
    b.x_tilde = vec({0});
    try {
      solve_z(b);
      FAIL("expected IllConditioned");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::IllConditioned);
    }
  }
}
