#include "frt/imputation.hpp"

#include <cmath>

#include "frt/error.hpp"

namespace frt {

namespace {

constexpr double kMaxCondition = 1e12;

// Per-coordinate targets for stratum h, split by block row counts.
std::vector<Eigen::VectorXd> block_targets(const Hypothesis& h, const Eigen::VectorXd& x) {
  std::vector<Eigen::VectorXd> out;
  Eigen::Index offset = 0;
  for (const auto& block : h.blocks) {
    out.push_back(x.segment(offset, block.C.rows()));
    offset += block.C.rows();
  }
  return out;
}

ImputationVector solve_for_targets(const Hypothesis& h, const Eigen::VectorXd& x) {
  const auto targets = block_targets(h, x);
  ImputationVector out;
  out.z.resize(h.arms, h.dim);
  for (int k = 0; k < h.dim; ++k) {
    ContrastBlock block = h.blocks[k];
    block.x = targets[k];
    out.z.col(k) = solve_z(block);
  }
  return out;
}

}  // namespace

Eigen::VectorXd solve_z(const ContrastBlock& block) {
  const int J = static_cast<int>(block.C.rows() > 0 ? block.C.cols() : block.C_tilde.cols());
  const Eigen::Index m = block.C.rows(), mt = block.C_tilde.rows();
  if (m + mt + 1 != J)
    throw Error(Errc::DimensionMismatch, "contrast plus completion must have J - 1 rows");
  Eigen::MatrixXd A(J, J);
  Eigen::VectorXd rhs(J);
  A.topRows(m) = block.C;
  A.middleRows(m, mt) = block.C_tilde;
  A.row(J - 1).setOnes();
  rhs.head(m) = block.x;
  rhs.segment(m, mt) = block.x_tilde;
  rhs(J - 1) = 0.0;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  const double rcond = lu.rcond();
  if (!(rcond * kMaxCondition > 1.0))
    throw Error(Errc::IllConditioned, "stacked contrast system has condition estimate above 1e12");
  Eigen::VectorXd z = lu.solve(rhs);
  // One step of iterative refinement keeps the residual at rounding level.
  z += lu.solve(rhs - A * z);
  return z;
}

ImputationVector solve_z(const Hypothesis& h) { return solve_for_targets(h, h.x); }

void ScienceTable::observe(std::span<const int> assignment, Eigen::MatrixXd& out) const {
  out.resize(units_, dim_);
  for (int i = 0; i < units_; ++i)
    for (int k = 0; k < dim_; ++k) out(i, k) = values_[index(i, assignment[i], k)];
}

ScienceTable impute(const Dataset& data, const Hypothesis& h) {
  if (h.arms != data.arms || h.dim != data.dim)
    throw Error(Errc::DimensionMismatch, "hypothesis does not match the dataset's arms or outcome dimension");
  const int H = data.strata;
  std::vector<Eigen::VectorXd> targets;
  if (h.stratum_x.empty()) {
    targets.assign(static_cast<std::size_t>(H), h.x);
  } else {
    if (static_cast<int>(h.stratum_x.size()) != H)
      throw Error(Errc::StratumTargetMismatch, "need one target per stratum");
    const auto members = stratum_members(data);
    Eigen::VectorXd avg = Eigen::VectorXd::Zero(h.x.size());
    for (int s = 0; s < H; ++s) {
      if (h.stratum_x[s].size() != h.x.size())
        throw Error(Errc::DimensionMismatch, "stratum target length mismatch");
      avg += h.stratum_x[s] * (static_cast<double>(members[s].size()) / data.size());
    }
    if ((avg - h.x).lpNorm<Eigen::Infinity>() > 1e-8 * (1.0 + h.x.lpNorm<Eigen::Infinity>()))
      throw Error(Errc::StratumTargetMismatch, "weighted stratum targets do not average to x");
    targets = h.stratum_x;
  }

  ScienceTable table(data.size(), data.arms, data.dim);
  for (int s = 0; s < H; ++s) table.shifts.push_back(solve_for_targets(h, targets[s]));

  for (int i = 0; i < data.size(); ++i) {
    const Eigen::MatrixXd& z = table.shifts[data.stratum[i]].z;
    const int w = data.treatment[i];
    for (int j = 0; j < data.arms; ++j)
      for (int k = 0; k < data.dim; ++k)
        table(i, j, k) = j == w ? data.outcome(i, k) : data.outcome(i, k) + (z(j, k) - z(w, k));
  }
  return table;
}

double sharp_null_residual(const ScienceTable& table, const Dataset& data, const Hypothesis& h) {
  const int J = data.arms, d = data.dim;
  Eigen::VectorXd y(J * d);
  double worst = 0.0, scale = 1.0;
  for (int i = 0; i < data.size(); ++i) {
    for (int j = 0; j < J; ++j)
      for (int k = 0; k < d; ++k) {
        y(j * d + k) = table(i, j, k);
        scale = std::max(scale, std::abs(table(i, j, k)));
      }
    const Eigen::VectorXd& target = h.stratum_x.empty() ? h.x : h.stratum_x[data.stratum[i]];
    worst = std::max(worst, (h.C * y - target).lpNorm<Eigen::Infinity>());
  }
  return worst / scale;
}

Dataset aggregate_clusters(const Dataset& data) {
  if (data.design != Design::Cluster) throw Error(Errc::InvalidArgument, "dataset is not cluster-randomized");
  const int L = data.clusters();
  Dataset out;
  out.design = Design::Complete;
  out.arms = data.arms;
  out.dim = data.dim;
  out.strata = 1;
  out.treatment.assign(static_cast<std::size_t>(L), -1);
  out.outcome = Eigen::MatrixXd::Zero(L, data.dim);
  for (int i = 0; i < data.size(); ++i) {
    const int c = data.cluster[i];
    out.treatment[c] = data.treatment[i];
    out.outcome.row(c) += data.outcome.row(i);
  }
  out.stratum.assign(static_cast<std::size_t>(L), 0);
  out.unit_ids = data.cluster_labels;
  out.arm_labels = data.arm_labels;
  out.stratum_labels = {"all"};
  check_dataset(out);
  return out;
}

Hypothesis cluster_hypothesis(const Hypothesis& h, int units, int clusters) {
  return with_target(h, h.x * (static_cast<double>(units) / clusters));
}

}  // namespace frt
