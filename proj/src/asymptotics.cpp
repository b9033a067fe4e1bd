#include "frt/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "frt/assignment.hpp"
#include "frt/error.hpp"

namespace frt {

namespace bm = boost::math;

double reference_pvalue(double t_obs, StatKind kind, int m, int units, int arms) {
  if (m < 1) throw Error(Errc::InvalidArgument, "reference distribution needs m >= 1");
  switch (kind) {
    case StatKind::X2:
    case StatKind::X2HW:
      if (!(t_obs > 0.0)) return 1.0;
      return bm::cdf(bm::complement(bm::chi_squared_distribution<double>(m), t_obs));
    case StatKind::F:
      if (units <= arms) throw Error(Errc::InvalidArgument, "F reference needs N > J");
      if (!(t_obs > 0.0)) return 1.0;
      return bm::cdf(bm::complement(bm::fisher_f_distribution<double>(m, units - arms), t_obs));
    case StatKind::T:
    case StatKind::Trend:
      return bm::cdf(bm::complement(bm::normal_distribution<double>(), t_obs));
    case StatKind::TPlus:
      if (!(t_obs > 0.0)) return 1.0;
      return bm::cdf(bm::complement(bm::normal_distribution<double>(), t_obs));
    case StatKind::Box:
    case StatKind::AbsContrast:
      break;
  }
  throw Error(Errc::UnsupportedStatistic,
              std::string(to_string(kind)) + " has no pivotal reference distribution");
}

double chi2_upper_quantile(int m, double alpha) {
  return bm::quantile(bm::complement(bm::chi_squared_distribution<double>(m), alpha));
}

Eigen::MatrixXd PopulationSpec::D() const {
  return (S.diagonal().array() / p.array()).matrix().asDiagonal();
}

Eigen::MatrixXd PopulationSpec::V() const { return D() - S; }

Eigen::MatrixXd PopulationSpec::P() const { return p.asDiagonal(); }

double PopulationSpec::s_bar() const { return p.dot(S.diagonal()); }

void check_population(const PopulationSpec& pop) {
  const int J = pop.arms();
  if (J < 2 || pop.S.rows() != J || pop.S.cols() != J)
    throw Error(Errc::DimensionMismatch, "population covariance must be J x J");
  if ((pop.p.array() <= 0.0).any() || (pop.p.array() >= 1.0).any() || std::abs(pop.p.sum() - 1.0) > 1e-10)
    throw Error(Errc::InvalidArgument, "arm proportions must lie in (0,1) and sum to one");
  if ((pop.S - pop.S.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + pop.S.cwiseAbs().maxCoeff()))
    throw Error(Errc::InvalidArgument, "population covariance must be symmetric");
  if ((pop.S.diagonal().array() <= 0.0).any())
    throw Error(Errc::InvalidArgument, "population variances must be positive");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(pop.S, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10 * eig.eigenvalues().cwiseAbs().maxCoeff())
    throw Error(Errc::InvalidArgument, "population covariance must be positive semidefinite");
}

PopulationSpec rank_one_population(std::span<const double> u) {
  const int J = static_cast<int>(u.size());
  PopulationSpec pop;
  pop.p = Eigen::VectorXd::Constant(J, 1.0 / J);
  Eigen::VectorXd v(J);
  for (int j = 0; j < J; ++j) v(j) = u[j];
  pop.S = v * v.transpose();
  return pop;
}

const char* to_string(LimitKind kind) noexcept {
  switch (kind) {
    case LimitKind::X2Sampling: return "X2 sampling: eig(C V C' (C D C')^-1)";
    case LimitKind::X2Randomization: return "X2 randomization: chi2_m";
    case LimitKind::BoxSampling: return "B sampling: eig(M V)/tr(M D)";
    case LimitKind::BoxRandomization: return "B randomization: eig(M P^-1)/tr(M P^-1)";
    case LimitKind::FSampling: return "m*F sampling: eig(C V C' (Sbar C P^-1 C')^-1)";
  }
  return "?";
}

namespace {

std::vector<double> sorted_desc(const Eigen::VectorXd& v, int keep) {
  std::vector<double> out(v.data(), v.data() + v.size());
  std::sort(out.begin(), out.end(), std::greater<>());
  out.resize(static_cast<std::size_t>(keep));
  for (double& w : out)
    if (std::abs(w) < 1e-14) w = 0.0;
  return out;
}

// Eigenvalues of A B^{-1} through the symmetric form L^{-1} A L^{-T}, B = L L^T.
std::vector<double> relative_eigenvalues(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  Eigen::LLT<Eigen::MatrixXd> llt(B);
  if (llt.info() != Eigen::Success || !(llt.rcond() * 1e12 > 1.0))
    throw Error(Errc::SingularDenominator, "denominator matrix is not positive definite");
  const Eigen::MatrixXd Linv_A = llt.matrixL().solve(A);
  const Eigen::MatrixXd W = llt.matrixL().solve(Linv_A.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (W + W.transpose()), Eigen::EigenvaluesOnly);
  return sorted_desc(eig.eigenvalues(), static_cast<int>(A.rows()));
}

// Nonzero eigenvalues of M X for a projection M: those of the symmetric M X M.
std::vector<double> projected_eigenvalues(const Eigen::MatrixXd& M, const Eigen::MatrixXd& X, int m) {
  const Eigen::MatrixXd W = M * X * M;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (W + W.transpose()), Eigen::EigenvaluesOnly);
  return sorted_desc(eig.eigenvalues(), m);
}

}  // namespace

LimitLaw limit_weights(const PopulationSpec& pop, const Eigen::MatrixXd& C, LimitKind kind) {
  check_population(pop);
  if (C.cols() != pop.arms()) throw Error(Errc::DimensionMismatch, "contrast does not match population arms");
  check_contrast(C);
  const int m = static_cast<int>(C.rows());
  LimitLaw law;
  law.description = to_string(kind);
  const Eigen::MatrixXd P_inv = pop.p.cwiseInverse().asDiagonal();
  switch (kind) {
    case LimitKind::X2Sampling:
      law.weights = relative_eigenvalues(C * pop.V() * C.transpose(), C * pop.D() * C.transpose());
      break;
    case LimitKind::X2Randomization:
      law.weights.assign(static_cast<std::size_t>(m), 1.0);
      break;
    case LimitKind::BoxSampling:
    case LimitKind::BoxRandomization: {
      const Eigen::MatrixXd M = C.transpose() * (C * C.transpose()).ldlt().solve(C);
      const Eigen::MatrixXd X = kind == LimitKind::BoxSampling ? pop.V() : P_inv;
      const Eigen::MatrixXd T = kind == LimitKind::BoxSampling ? pop.D() : P_inv;
      const double trace = (M * T).trace();
      if (!(trace > 0.0)) throw Error(Errc::SingularDenominator, "tr(M D) is not positive");
      law.weights = projected_eigenvalues(M, X, m);
      for (double& w : law.weights) w /= trace;
      break;
    }
    case LimitKind::FSampling:
      law.weights =
          relative_eigenvalues(C * pop.V() * C.transpose(), pop.s_bar() * C * P_inv * C.transpose());
      break;
  }
  return law;
}

namespace {

double tail_monte_carlo(const std::vector<double>& w, double q, std::int64_t draws, std::uint64_t seed) {
  Rng rng = derive_stream(seed, 0);
  std::normal_distribution<double> normal;
  std::int64_t hits = 0;
  for (std::int64_t r = 0; r < draws; ++r) {
    double sum = 0.0;
    for (double a : w) {
      const double z = normal(rng);
      sum += a * z * z;
    }
    if (sum >= q) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(draws);
}

// Mixture-of-chi-square series with scale beta = min weight; every
// coefficient is non-negative so the unassigned mass bounds the error.
double tail_series(const std::vector<double>& w, double q, bool& converged) {
  const int n = static_cast<int>(w.size());
  const double beta = *std::min_element(w.begin(), w.end());
  std::vector<double> gamma(w.size());
  double a0 = 1.0;
  for (int j = 0; j < n; ++j) {
    a0 *= std::sqrt(beta / w[j]);
    gamma[j] = 1.0 - beta / w[j];
  }
  constexpr int kMaxTerms = 20000;
  constexpr double kTol = 1e-10;
  std::vector<double> a{a0}, g{0.0};
  std::vector<double> gamma_pow(gamma);
  double mass = a0;
  double tail = a0 * bm::gamma_q(0.5 * n, 0.5 * q / beta);
  converged = false;
  for (int k = 1; k < kMaxTerms; ++k) {
    if (1.0 - mass <= kTol) {
      converged = true;
      break;
    }
    double gk = 0.0;
    for (int j = 0; j < n; ++j) {
      gk += gamma_pow[j];
      gamma_pow[j] *= gamma[j];
    }
    g.push_back(0.5 * gk);
    double ak = 0.0;
    for (int r = 0; r < k; ++r) ak += g[k - r] * a[r];
    ak /= k;
    a.push_back(ak);
    mass += ak;
    tail += ak * bm::gamma_q(0.5 * n + k, 0.5 * q / beta);
  }
  return std::clamp(tail, 0.0, 1.0);
}

}  // namespace

double weighted_chi2_tail(std::span<const double> weights, double q, TailMethod method, std::int64_t mc_draws,
                          std::uint64_t seed) {
  if (weights.empty()) throw Error(Errc::InvalidArgument, "need at least one weight");
  double top = 0.0;
  for (double a : weights) {
    if (a < 0.0 || !std::isfinite(a)) throw Error(Errc::InvalidArgument, "weights must be non-negative");
    top = std::max(top, a);
  }
  if (!(top > 0.0)) throw Error(Errc::InvalidArgument, "weights must not all be zero");
  if (q <= 0.0) return 1.0;
  std::vector<double> w;
  for (double a : weights)
    if (a > 1e-12 * top) w.push_back(a);
  if (method == TailMethod::MonteCarlo) return tail_monte_carlo(w, q, mc_draws, seed);
  const double ratio = top / *std::min_element(w.begin(), w.end());
  if (ratio <= 500.0) {
    bool converged = false;
    const double p = tail_series(w, q, converged);
    if (converged) return p;
  }
  return tail_monte_carlo(w, q, mc_draws, seed);
}

double weighted_chi2_upper_quantile(std::span<const double> weights, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(Errc::InvalidArgument, "alpha must lie in (0,1)");
  double lo = 0.0, hi = 1.0;
  while (weighted_chi2_tail(weights, hi) > alpha) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (weighted_chi2_tail(weights, mid) > alpha ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

MomentDiagnostic moment_diagnostic(const Eigen::MatrixXd& Y) {
  MomentDiagnostic out;
  const double n = static_cast<double>(Y.rows());
  for (Eigen::Index j = 0; j < Y.cols(); ++j) {
    const Eigen::ArrayXd dev = Y.col(j).array() - Y.col(j).mean();
    out.max_sq_dev_over_n = std::max(out.max_sq_dev_over_n, dev.square().maxCoeff() / n);
    out.max_fourth_moment = std::max(out.max_fourth_moment, dev.square().square().sum() / n);
  }
  return out;
}

}  // namespace frt
