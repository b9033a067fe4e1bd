#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "frt/statistics.hpp"

namespace frt {

// Upper-tail reference p-value: chi^2_m for the Wald-type statistics, F_{m,N-J}
// for F, standard normal for the t family. Box and AbsContrast have no pivotal
// reference and throw UnsupportedStatistic. For the stratified F pass the
// number of regression coefficients as `arms`.
double reference_pvalue(double t_obs, StatKind kind, int m, int units, int arms);

// Upper alpha quantile of chi^2_m.
double chi2_upper_quantile(int m, double alpha);

// Finite-population limit quantities for arm proportions p and potential
// outcome covariance S.
struct PopulationSpec {
  Eigen::VectorXd p;  // arm proportions, sum to one
  Eigen::MatrixXd S;  // J x J

  int arms() const { return static_cast<int>(p.size()); }
  Eigen::MatrixXd D() const;  // diag(S_jj / p_j)
  Eigen::MatrixXd V() const;  // D - S
  Eigen::MatrixXd P() const;  // diag(p)
  double s_bar() const;       // sum_j p_j S_jj
};

// Throws InvalidArgument when proportions or S violate the invariants.
void check_population(const PopulationSpec& pop);

// Balanced population with S = u u^T.
PopulationSpec rank_one_population(std::span<const double> u);

enum class LimitKind {
  X2Sampling,        // eigenvalues of C V C^T (C D C^T)^{-1}
  X2Randomization,   // chi^2_m: all ones
  BoxSampling,       // eigenvalues of M V / tr(M D)
  BoxRandomization,  // eigenvalues of M P^{-1} / tr(M P^{-1})
  FSampling,         // eigenvalues of C V C^T (Sbar C P^{-1} C^T)^{-1}, for m * F
};

const char* to_string(LimitKind kind) noexcept;

// Limit law sum_j a_j xi_j^2 with a sorted descending.
struct LimitLaw {
  std::vector<double> weights;
  std::string description;
};

LimitLaw limit_weights(const PopulationSpec& pop, const Eigen::MatrixXd& C, LimitKind kind);

enum class TailMethod { Series, MonteCarlo };

// P(sum_j a_j xi_j^2 >= q) for non-negative weights. The default series
// method is accurate to 1e-8 absolute; Monte Carlo uses `mc_draws` draws
// from a fixed seed.
double weighted_chi2_tail(std::span<const double> weights, double q, TailMethod method = TailMethod::Series,
                          std::int64_t mc_draws = 1'000'000, std::uint64_t seed = 20201);

// Upper alpha quantile of sum_j a_j xi_j^2 by bisection on the series tail.
double weighted_chi2_upper_quantile(std::span<const double> weights, double alpha);

// Heuristic moment diagnostics for a population table (N x J): the largest
// squared deviation divided by N, and the largest fourth-moment average.
struct MomentDiagnostic {
  double max_sq_dev_over_n = 0.0;
  double max_fourth_moment = 0.0;
};

MomentDiagnostic moment_diagnostic(const Eigen::MatrixXd& potential_outcomes);

}  // namespace frt
