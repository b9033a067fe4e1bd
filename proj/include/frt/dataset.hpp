#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace frt {

enum class Design { Complete, Stratified, Cluster };

const char* to_string(Design design) noexcept;

// One row as it arrives from ingestion, before labels are normalized.
struct RawUnit {
  std::string unit_id;
  std::string treatment;
  std::vector<double> outcome;
  std::optional<std::string> stratum;
  std::optional<std::string> cluster;
};

struct RawDataset {
  std::vector<RawUnit> units;
  Design design = Design::Complete;
};

// Validated experiment. Arms, strata and clusters are 0-based contiguous
// indices; the original labels are kept for reporting.
struct Dataset {
  Design design = Design::Complete;
  int arms = 0;    // J
  int dim = 1;     // d
  int strata = 1;  // H
  std::vector<int> treatment;  // arm per unit
  Eigen::MatrixXd outcome;     // N x d
  std::vector<int> stratum;    // stratum per unit (all 0 unless stratified)
  std::vector<int> cluster;    // cluster per unit (empty unless clustered)

  std::vector<std::string> unit_ids;
  std::vector<std::string> arm_labels;
  std::vector<std::string> stratum_labels;
  std::vector<std::string> cluster_labels;

  int size() const { return static_cast<int>(treatment.size()); }
  int clusters() const { return static_cast<int>(cluster_labels.size()); }
};

// Normalizes labels (numeric labels sort numerically, others lexically) and
// enforces the regularity conditions: every arm has max(2, d+1) units, every
// stratum cell has at least two, clusters are treated as a whole.
Dataset validate_dataset(const RawDataset& raw);

// Re-checks the invariants of an already-indexed dataset. Throws frt::Error.
void check_dataset(const Dataset& data);

// Convenience for code that already has 0-based arms (tests, simulation).
Dataset make_dataset(std::vector<int> treatment, Eigen::MatrixXd outcome,
                     std::vector<int> stratum = {});

// Per-arm sufficient statistics. Covariances use the N_j - 1 divisor.
struct GroupSummaries {
  std::vector<int> counts;                   // N_j
  Eigen::MatrixXd means;                     // J x d
  std::vector<Eigen::MatrixXd> covariances;  // S(j,j), each d x d
  int total = 0;                             // N
  Eigen::VectorXd grand_mean;                // d

  int arms() const { return static_cast<int>(counts.size()); }
  int dim() const { return static_cast<int>(means.cols()); }

  // Long mean vector (Y(1); ...; Y(J)), length dJ.
  Eigen::VectorXd mean_vector() const;
  // N * blockdiag{S(j,j)/N_j}.
  Eigen::MatrixXd d_hat() const;
  // Huber-White analogue N * blockdiag{(N_j-1) S(j,j)/N_j^2}.
  Eigen::MatrixXd d_hat_hw() const;
};

// Throws DegenerateVariance if some arm covariance is not positive definite.
GroupSummaries group_summaries(const Dataset& data);

// Allocation-free core used by the permutation kernels. Summarizes the units
// listed in `units` (all units when empty). Returns false instead of throwing
// when an arm covariance is degenerate; `out` is then partially filled.
bool summarize_into(std::span<const int> treatment, const Eigen::MatrixXd& outcome,
                    int arms, std::span<const int> units, GroupSummaries& out);

// Per-stratum summaries plus stratum weights N_[h]/N.
struct StratifiedSummaries {
  std::vector<GroupSummaries> strata;
  Eigen::VectorXd weights;
  int total = 0;
};

StratifiedSummaries stratified_summaries(const Dataset& data);

// Units of each stratum, in dataset order.
std::vector<std::vector<int>> stratum_members(const Dataset& data);

}  // namespace frt
