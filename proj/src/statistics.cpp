#include "frt/statistics.hpp"

#include <cmath>

#include "frt/error.hpp"

namespace frt {

namespace {

constexpr double kMaxCondition = 1e12;

enum class Scale { Neyman, HuberWhite };

// C * blockdiag{f_j S(j,j)} * C^T without forming the dJ x dJ matrix.
// Neyman: f_j = N/N_j; HuberWhite: f_j = N(N_j-1)/N_j^2.
Eigen::MatrixXd sandwich(const Eigen::MatrixXd& C, const GroupSummaries& s, Scale scale) {
  const int J = s.arms(), d = s.dim();
  const double n = s.total;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(C.rows(), C.rows());
  for (int j = 0; j < J; ++j) {
    const double nj = s.counts[j];
    double f = 0.0;
    switch (scale) {
      case Scale::Neyman: f = n / nj; break;
      case Scale::HuberWhite: f = n * (nj - 1.0) / (nj * nj); break;
    }
    if (d == 1) {
      const double v = f * s.covariances[j](0, 0);
      K.noalias() += (v * C.col(j)) * C.col(j).transpose();
    } else {
      const auto Cj = C.middleCols(j * d, d);
      K.noalias() += Cj * (f * s.covariances[j]) * Cj.transpose();
    }
  }
  return K;
}

// r^T K^{-1} r, or nullopt when K is not safely positive definite.
std::optional<double> quadratic_form(const Eigen::MatrixXd& K, const Eigen::VectorXd& r) {
  if (K.rows() == 1) {
    const double k = K(0, 0);
    if (!(k > 0.0) || !std::isfinite(k)) return std::nullopt;
    return r(0) * r(0) / k;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success || !(llt.rcond() * kMaxCondition > 1.0)) return std::nullopt;
  return r.dot(llt.solve(r));
}

struct Pooled {
  Eigen::VectorXd mean;  // sum_h w_h Ybar_[h]
  Eigen::MatrixXd K;     // sum_h w_h C D_[h] C^T
};

Pooled pool(const StratifiedSummaries& s, const Eigen::MatrixXd& C, Scale scale) {
  Pooled out;
  for (std::size_t h = 0; h < s.strata.size(); ++h) {
    const double w = s.weights(static_cast<Eigen::Index>(h));
    if (h == 0) {
      out.mean = w * s.strata[0].mean_vector();
      out.K = w * sandwich(C, s.strata[0], scale);
    } else {
      out.mean += w * s.strata[h].mean_vector();
      out.K += w * sandwich(C, s.strata[h], scale);
    }
  }
  return out;
}

// OLS F for a one-way layout (single stratum).
std::optional<double> ols_f(const GroupSummaries& s, const Hypothesis& h) {
  const int J = s.arms();
  const double n = s.total;
  double pooled = 0.0;
  for (int j = 0; j < J; ++j) pooled += (s.counts[j] - 1.0) * s.covariances[j](0, 0);
  pooled /= (n - J);
  if (!(pooled > 0.0)) return std::nullopt;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(h.C.rows(), h.C.rows());
  for (int j = 0; j < J; ++j) K.noalias() += (h.C.col(j) / s.counts[j]) * h.C.col(j).transpose();
  const Eigen::VectorXd r = h.C * s.mean_vector() - h.x;
  const auto q = quadratic_form(pooled * K, r);
  if (!q) return std::nullopt;
  return *q / static_cast<double>(h.rows());
}

// F from the additive regression on treatment and stratum indicators,
// evaluated from cell counts, means and within-cell variances.
std::optional<double> stratified_f(const StratifiedSummaries& s, const Hypothesis& h) {
  const int H = static_cast<int>(s.strata.size());
  const int J = s.strata.front().arms();
  const int p = J + H - 1;
  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(p);
  double within = 0.0;
  for (int hh = 0; hh < H; ++hh) {
    const auto& g = s.strata[hh];
    for (int j = 0; j < J; ++j) {
      const double n = g.counts[j];
      const double sum = n * g.means(j, 0);
      within += (n - 1.0) * g.covariances[j](0, 0);
      xtx(j, j) += n;
      xty(j) += sum;
      if (hh > 0) {
        const int b = J + hh - 1;
        xtx(b, b) += n;
        xtx(j, b) += n;
        xtx(b, j) += n;
        xty(b) += sum;
      }
    }
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
  if (ldlt.info() != Eigen::Success) return std::nullopt;
  const Eigen::VectorXd theta = ldlt.solve(xty);
  double lack_of_fit = 0.0;
  for (int hh = 0; hh < H; ++hh) {
    const auto& g = s.strata[hh];
    for (int j = 0; j < J; ++j) {
      const double fitted = theta(j) + (hh > 0 ? theta(J + hh - 1) : 0.0);
      const double dev = g.means(j, 0) - fitted;
      lack_of_fit += g.counts[j] * dev * dev;
    }
  }
  const double df = s.total - p;
  const double sigma2 = (within + lack_of_fit) / df;
  if (!(sigma2 > 0.0)) return std::nullopt;
  const Eigen::MatrixXd cov = sigma2 * ldlt.solve(Eigen::MatrixXd::Identity(p, p)).topLeftCorner(J, J);
  const Eigen::VectorXd r = h.C * theta.head(J) - h.x;
  const auto q = quadratic_form(h.C * cov * h.C.transpose(), r);
  if (!q) return std::nullopt;
  return *q / static_cast<double>(h.rows());
}

double require(std::optional<double> v, const char* what) {
  if (!v) throw Error(Errc::SingularCovariance, std::string(what) + ": studentizing covariance is singular");
  return *v;
}

}  // namespace

Tail tail_of(StatKind kind) noexcept {
  switch (kind) {
    case StatKind::T:
    case StatKind::TPlus:
    case StatKind::Trend: return Tail::UpperOneSided;
    default: return Tail::Upper;
  }
}

const char* to_string(StatKind kind) noexcept {
  switch (kind) {
    case StatKind::X2: return "x2";
    case StatKind::Box: return "box";
    case StatKind::F: return "f";
    case StatKind::X2HW: return "x2hw";
    case StatKind::T: return "t";
    case StatKind::TPlus: return "tplus";
    case StatKind::Trend: return "trend";
    case StatKind::AbsContrast: return "abs";
  }
  return "?";
}

StatKind parse_stat_kind(const std::string& name) {
  for (StatKind k : {StatKind::X2, StatKind::Box, StatKind::F, StatKind::X2HW, StatKind::T, StatKind::TPlus,
                     StatKind::Trend, StatKind::AbsContrast})
    if (name == to_string(k)) return k;
  throw Error(Errc::InvalidArgument, "unknown statistic '" + name + "'");
}

StatisticEvaluator::StatisticEvaluator(StatKind kind, const Hypothesis& h) : kind_(kind), h_(h) {
  const bool one_row = kind == StatKind::T || kind == StatKind::TPlus || kind == StatKind::Trend;
  if (one_row && h.rows() != 1)
    throw Error(Errc::InvalidArgument, std::string(to_string(kind)) + " needs a single contrast row");
  if (kind == StatKind::Box) {
    if (h.x.lpNorm<Eigen::Infinity>() != 0.0)
      throw Error(Errc::InvalidArgument, "the Box-type statistic is defined for x = 0 only");
    projection_ = h.C.transpose() * (h.C * h.C.transpose()).ldlt().solve(h.C);
  }
  if (kind == StatKind::F && h.dim != 1)
    throw Error(Errc::UnsupportedStatistic, "the F statistic is defined for scalar outcomes");
}

std::optional<double> StatisticEvaluator::operator()(const GroupSummaries& s) const {
  StratifiedSummaries one;
  one.strata = {s};
  one.weights = Eigen::VectorXd::Ones(1);
  one.total = s.total;
  return (*this)(one);
}

std::optional<double> StatisticEvaluator::operator()(const StratifiedSummaries& s) const {
  const double n = s.total;
  switch (kind_) {
    case StatKind::X2:
    case StatKind::X2HW: {
      const Pooled p = pool(s, h_.C, kind_ == StatKind::X2 ? Scale::Neyman : Scale::HuberWhite);
      const Eigen::VectorXd r = h_.C * p.mean - h_.x;
      const auto q = quadratic_form(p.K, r);
      if (!q) return std::nullopt;
      return n * *q;
    }
    case StatKind::T:
    case StatKind::TPlus:
    case StatKind::Trend: {
      const Pooled p = pool(s, h_.C, Scale::Neyman);
      const double var = p.K(0, 0);
      if (!(var > 0.0)) return std::nullopt;
      const double t = std::sqrt(n) * (h_.x(0) - h_.C.row(0).dot(p.mean)) / std::sqrt(var);
      if (kind_ == StatKind::Trend) return -t;
      if (kind_ == StatKind::TPlus) return std::max(t, 0.0);
      return t;
    }
    case StatKind::Box: {
      Eigen::VectorXd mean;
      double trace = 0.0;
      const int d = s.strata.front().dim();
      for (std::size_t hh = 0; hh < s.strata.size(); ++hh) {
        const auto& g = s.strata[hh];
        const double w = s.weights(static_cast<Eigen::Index>(hh));
        mean = hh == 0 ? Eigen::VectorXd(w * g.mean_vector()) : Eigen::VectorXd(mean + w * g.mean_vector());
        for (int j = 0; j < g.arms(); ++j)
          trace += w * (static_cast<double>(g.total) / g.counts[j]) *
                   (projection_.block(j * d, j * d, d, d) * g.covariances[j]).trace();
      }
      if (!(trace > 0.0)) return std::nullopt;
      return n * mean.dot(projection_ * mean) / trace;
    }
    case StatKind::F:
      if (s.strata.size() == 1) return ols_f(s.strata.front(), h_);
      return stratified_f(s, h_);
    case StatKind::AbsContrast: {
      const Pooled p = pool(s, h_.C, Scale::Neyman);
      return (h_.C * p.mean - h_.x).norm();
    }
  }
  return std::nullopt;
}

double x2(const GroupSummaries& s, const Hypothesis& h) {
  const Eigen::VectorXd r = h.C * s.mean_vector() - h.x;
  return s.total * require(quadratic_form(sandwich(h.C, s, Scale::Neyman), r), "x2");
}

double box(const GroupSummaries& s, const Hypothesis& h) {
  return require(StatisticEvaluator(StatKind::Box, h)(s), "box");
}

double f_stat(const GroupSummaries& s, const Hypothesis& h) {
  if (h.dim != 1) throw Error(Errc::UnsupportedStatistic, "the F statistic is defined for scalar outcomes");
  return require(ols_f(s, h), "f");
}

double x2_hw(const GroupSummaries& s, const Hypothesis& h) {
  const Eigen::VectorXd r = h.C * s.mean_vector() - h.x;
  return s.total * require(quadratic_form(sandwich(h.C, s, Scale::HuberWhite), r), "x2hw");
}

double t_stat(const GroupSummaries& s, const Hypothesis& h) {
  return require(StatisticEvaluator(StatKind::T, h)(s), "t");
}

double t_plus(const GroupSummaries& s, const Hypothesis& h) { return std::max(t_stat(s, h), 0.0); }

double trend_t(const GroupSummaries& s, std::span<const double> doses) {
  const Eigen::MatrixXd C = trend_contrast(doses, s.counts);
  const Hypothesis h = make_hypothesis(C, Eigen::VectorXd::Zero(1));
  return require(StatisticEvaluator(StatKind::Trend, h)(s), "trend");
}

double stratified_x2(const StratifiedSummaries& s, const Hypothesis& h) {
  return require(StatisticEvaluator(StatKind::X2, h)(s), "stratified x2");
}

double anova_x2_weighted(const GroupSummaries& s) {
  const int J = s.arms();
  double num = 0.0, den = 0.0;
  for (int j = 0; j < J; ++j) {
    const double w = s.counts[j] / s.covariances[j](0, 0);
    num += w * s.means(j, 0);
    den += w;
  }
  const double center = num / den;
  double out = 0.0;
  for (int j = 0; j < J; ++j) {
    const double dev = s.means(j, 0) - center;
    out += s.counts[j] / s.covariances[j](0, 0) * dev * dev;
  }
  return out;
}

double anova_f_classic(const GroupSummaries& s) {
  const int J = s.arms();
  double between = 0.0, within = 0.0;
  for (int j = 0; j < J; ++j) {
    const double dev = s.means(j, 0) - s.grand_mean(0);
    between += s.counts[j] * dev * dev;
    within += (s.counts[j] - 1.0) * s.covariances[j](0, 0);
  }
  return (between / (J - 1)) / (within / (s.total - J));
}

}  // namespace frt
