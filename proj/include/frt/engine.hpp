#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "frt/assignment.hpp"
#include "frt/contrast.hpp"
#include "frt/dataset.hpp"
#include "frt/imputation.hpp"
#include "frt/statistics.hpp"

namespace frt {

struct FrtOptions {
  std::int64_t draws = 10'000;
  std::uint64_t seed = 0;
  bool exhaustive = false;
  std::uint64_t enumeration_cap = kDefaultEnumerationCap;
  double max_degenerate_fraction = 0.01;
  bool parallel = true;
  // T_pi counts as an exceedance when T_pi >= T - tol * max(1, |T|).
  double tie_tolerance = 1e-10;
};

struct FrtResult {
  StatKind stat = StatKind::X2;
  double t_obs = 0.0;
  double p_frt = 1.0;
  double p_reference = 0.0;  // NaN when the statistic has no reference law
  std::int64_t draws_used = 0;
  std::int64_t exceedances = 0;
  std::int64_t degenerate = 0;
  std::uint64_t seed = 0;
  bool exhaustive = false;
};

// Reference p-value for the analysed data (cluster sums, strata), NaN when
// the statistic has no reference law.
double reference_pvalue_for(StatKind kind, double t_obs, const Dataset& data, const Hypothesis& h);

// Draws per random stream. Fixed so that results never depend on the number
// of worker threads.
inline constexpr std::int64_t kChunkDraws = 512;

// Everything the permutation loop needs: the analysed dataset (cluster sums
// for cluster designs), the imputed science table and the assignment scheme.
class RandomizationKernel {
 public:
  RandomizationKernel(const Dataset& data, const Hypothesis& h, StatKind kind);

  struct Workspace {
    Eigen::MatrixXd outcome;
    StratifiedSummaries summaries;
    std::vector<int> assignment;
  };

  // Statistic for one assignment of the analysed units; nullopt when the
  // permuted sample is degenerate.
  std::optional<double> evaluate(std::span<const int> assignment, Workspace& ws) const;
  bool exceeds(double t, double tie_tolerance) const;

  double observed() const { return t_obs_; }
  double reference_pvalue() const { return p_reference_; }
  const Dataset& analysis_data() const { return data_; }
  const Hypothesis& hypothesis() const { return h_; }
  const ScienceTable& table() const { return table_; }
  const RandomizationScheme& scheme() const { return scheme_; }
  StatKind kind() const { return eval_.kind(); }

 private:
  Dataset data_;
  Hypothesis h_;
  StatisticEvaluator eval_;
  ScienceTable table_;
  RandomizationScheme scheme_;
  std::vector<std::vector<int>> members_;
  bool studentized_;
  double t_obs_ = 0.0;
  double p_reference_ = 0.0;
};

// Monte Carlo or exhaustive randomization p-value. Draw chunk c uses the
// stream derive_stream(seed, c).
FrtResult frt_pvalue(const RandomizationKernel& kernel, const FrtOptions& options);
FrtResult frt_pvalue(const Dataset& data, const Hypothesis& h, StatKind kind, const FrtOptions& options);

// Serial reference: rebuilds a dataset for every draw and goes through the
// throwing summary functions. Same random streams, so the counts agree with
// frt_pvalue exactly.
FrtResult frt_pvalue_reference(const Dataset& data, const Hypothesis& h, StatKind kind,
                               const FrtOptions& options);

}  // namespace frt
