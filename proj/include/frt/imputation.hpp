#pragma once

#include <vector>

#include <Eigen/Dense>

#include "frt/contrast.hpp"
#include "frt/dataset.hpp"

namespace frt {

// Shift vectors z, one column per outcome coordinate (J x d).
struct ImputationVector {
  Eigen::MatrixXd z;
};

// Solves [C; C_tilde; 1^T] z = [x; x_tilde; 0] for a single block.
// Throws IllConditioned when the stacked system is numerically singular.
Eigen::VectorXd solve_z(const ContrastBlock& block);

// z for every coordinate of the hypothesis using its x.
ImputationVector solve_z(const Hypothesis& h);

// Full potential-outcome table under the compatible sharp null:
// Y*_i(j) = Y_i^obs + z_j - z_{W_i}, with z taken per stratum.
class ScienceTable {
 public:
  ScienceTable(int units, int arms, int dim)
      : units_(units), arms_(arms), dim_(dim),
        values_(static_cast<std::size_t>(units) * arms * dim, 0.0) {}

  int units() const { return units_; }
  int arms() const { return arms_; }
  int dim() const { return dim_; }

  double operator()(int unit, int arm, int coord = 0) const {
    return values_[index(unit, arm, coord)];
  }
  double& operator()(int unit, int arm, int coord = 0) { return values_[index(unit, arm, coord)]; }

  // Writes the observed outcomes implied by `assignment` into `out` (N x d).
  void observe(std::span<const int> assignment, Eigen::MatrixXd& out) const;

  // z used for each stratum.
  std::vector<ImputationVector> shifts;

 private:
  std::size_t index(int unit, int arm, int coord) const {
    return (static_cast<std::size_t>(unit) * arms_ + arm) * dim_ + coord;
  }
  int units_, arms_, dim_;
  std::vector<double> values_;
};

// Relative tolerance for the sharp-null check on an imputed table.
inline constexpr double kSharpNullTol = 1e-8;

// Throws StratumTargetMismatch when per-stratum targets do not average to x.
ScienceTable impute(const Dataset& data, const Hypothesis& h);

// Max |C Y*_i - x_[h]| over units, relative to the table's scale.
double sharp_null_residual(const ScienceTable& table, const Dataset& data, const Hypothesis& h);

// Collapses a cluster design to one record per cluster holding the sum of its
// members' outcomes. The result is a complete design over clusters.
Dataset aggregate_clusters(const Dataset& data);

// Target for the aggregated analysis: N x / L.
Hypothesis cluster_hypothesis(const Hypothesis& h, int units, int clusters);

}  // namespace frt
