#pragma once

#include <optional>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "frt/contrast.hpp"
#include "frt/dataset.hpp"

namespace frt {

// Test statistics evaluated from group summaries. Every statistic is oriented
// so that large values are evidence against the null; T = sqrt(N)(x - C Ybar)/se
// rejects C Ybar >= x, Trend = (C Ybar - x)/se rejects in the opposite direction.
enum class StatKind {
  X2,           // studentized Wald statistic
  Box,          // Box-type statistic (x = 0 only)
  F,            // classical OLS F (pooled variance)
  X2HW,         // Wald with Huber-White covariance
  T,            // signed one-sided t
  TPlus,        // max(t, 0)
  Trend,        // studentized trend t, large values reject
  AbsContrast,  // unstudentized ||C Ybar - x||_2, e.g. |tau_hat| for J = 2
};

enum class Tail { Upper, UpperOneSided };

Tail tail_of(StatKind kind) noexcept;
const char* to_string(StatKind kind) noexcept;
// Accepts x2, box, f, x2hw, t, tplus, trend, abs.
StatKind parse_stat_kind(const std::string& name);

// Throwing entry points. SingularCovariance when the studentizing matrix has
// condition estimate above 1e12.
double x2(const GroupSummaries& s, const Hypothesis& h);
double box(const GroupSummaries& s, const Hypothesis& h);
double f_stat(const GroupSummaries& s, const Hypothesis& h);
double x2_hw(const GroupSummaries& s, const Hypothesis& h);
double t_stat(const GroupSummaries& s, const Hypothesis& h);
double t_plus(const GroupSummaries& s, const Hypothesis& h);
// Builds the trend contrast from `doses` and the arm sizes; (C Ybar)/se.
double trend_t(const GroupSummaries& s, std::span<const double> doses);
double stratified_x2(const StratifiedSummaries& s, const Hypothesis& h);

// Classical one-way ANOVA forms, used to cross-check the general ones:
// X^2 = sum_j N_j/S_jj (Ybar_j - Ybar_S)^2 with precision-weighted grand mean,
// and Fisher's F from between/within sums of squares.
double anova_x2_weighted(const GroupSummaries& s);
double anova_f_classic(const GroupSummaries& s);

// Non-throwing evaluator for the permutation kernels. Precomputes the
// hypothesis-dependent pieces once; operator() returns nullopt on a
// degenerate draw. Stratified summaries with a single stratum reduce to the
// completely randomized statistics exactly.
class StatisticEvaluator {
 public:
  StatisticEvaluator(StatKind kind, const Hypothesis& h);

  std::optional<double> operator()(const StratifiedSummaries& s) const;
  std::optional<double> operator()(const GroupSummaries& s) const;

  StatKind kind() const { return kind_; }
  const Hypothesis& hypothesis() const { return h_; }

 private:
  StatKind kind_;
  Hypothesis h_;
  Eigen::MatrixXd projection_;  // C^T (C C^T)^{-1} C, for Box
};

}  // namespace frt
