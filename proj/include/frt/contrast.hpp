#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace frt {

enum class Orientation { TwoSided, OneSidedGe };

// Contrast for one outcome coordinate together with its completion.
// C is m_k x J (m_k may be zero), C_tilde is (J - m_k - 1) x J.
struct ContrastBlock {
  Eigen::MatrixXd C;
  Eigen::VectorXd x;
  Eigen::MatrixXd C_tilde;
  Eigen::VectorXd x_tilde;
};

// Linear hypothesis C * Ybar = x (or >= x) over the long arm-major mean
// vector of length d*J. `blocks` holds the per-coordinate pieces used for
// imputation; for d = 1 there is exactly one block and C == blocks[0].C.
struct Hypothesis {
  Eigen::MatrixXd C;
  Eigen::VectorXd x;
  Orientation orientation = Orientation::TwoSided;
  std::vector<ContrastBlock> blocks;
  // Optional per-stratum targets x_[h] (each of length m); must average to x
  // with stratum weights. Empty means x_[h] = x for every stratum.
  std::vector<Eigen::VectorXd> stratum_x;
  int arms = 0;
  int dim = 1;

  int rows() const { return static_cast<int>(C.rows()); }
};

// Throws NotContrast / RankDeficient. Rows must sum to zero within
// 1e-10 * ||C||_inf and be linearly independent with m <= J - 1.
void check_contrast(const Eigen::MatrixXd& C);

// Orthonormal rows spanning the complement of rowspace(C) + span(1_J),
// built by modified Gram-Schmidt over the standard basis in index order.
Eigen::MatrixXd complete_contrast(const Eigen::MatrixXd& C);

// Scalar-outcome hypothesis with x_tilde = 0. One-sided hypotheses need m = 1
// unless `allow_multirow_one_sided` (Bonferroni mode).
Hypothesis make_hypothesis(const Eigen::MatrixXd& C, const Eigen::VectorXd& x,
                           Orientation orientation = Orientation::TwoSided,
                           bool allow_multirow_one_sided = false);

// Same hypothesis with a different target; the completion is reused.
Hypothesis with_target(const Hypothesis& h, const Eigen::VectorXd& x);

// Stacks C_k (x) e_k^T for vector outcomes. Empty blocks are allowed but at
// least one must be non-empty.
Hypothesis assemble_vector_contrast(const std::vector<std::pair<Eigen::MatrixXd, Eigen::VectorXd>>& blocks,
                                    int dim);

// Splits a general m x dJ contrast into per-coordinate blocks. Rows mixing
// coordinates throw CrossEntryComparison.
Hypothesis hypothesis_from_long_contrast(const Eigen::MatrixXd& C, const Eigen::VectorXd& x, int arms,
                                         int dim);

struct ModelMatrix {
  int factors = 0;
  Eigen::MatrixXi G;                // (2^K - 1) x 2^K, entries +-1
  std::vector<std::string> labels;  // "A", "B", "AB", ...
};

inline constexpr int kDefaultFactorialCap = 1 << 12;

ModelMatrix model_matrix(int factors, int max_arms = kDefaultFactorialCap);

// Presets.
Eigen::MatrixXd anova_contrast(int arms);
Eigen::MatrixXd treatment_control_contrast(int arms, int treated = 0, int control = 1);
Eigen::MatrixXd trend_contrast(std::span<const double> doses, std::span<const int> counts);
// `rows` are 1-based row indices into the model matrix.
Eigen::MatrixXd factorial_contrast(int factors, std::span<const int> rows);

}  // namespace frt
