#include "frt/contrast.hpp"

#include <algorithm>
#include <cmath>

#include "frt/error.hpp"

namespace frt {

namespace {

constexpr double kContrastTol = 1e-10;
constexpr double kIndependenceTol = 1e-9;

// Modified Gram-Schmidt step against an orthonormal row set, applied twice.
Eigen::VectorXd orthogonalize(Eigen::VectorXd v, const std::vector<Eigen::VectorXd>& basis) {
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& q : basis) v -= q.dot(v) * q;
  return v;
}

Eigen::MatrixXd stack_rows(const std::vector<Eigen::VectorXd>& rows, int cols) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
  return out;
}

// Orthonormal basis of rowspace(C) + span(1); throws RankDeficient.
std::vector<Eigen::VectorXd> contrast_basis(const Eigen::MatrixXd& C) {
  const int J = static_cast<int>(C.cols());
  std::vector<Eigen::VectorXd> basis;
  basis.push_back(Eigen::VectorXd::Constant(J, 1.0 / std::sqrt(static_cast<double>(J))));
  for (int r = 0; r < C.rows(); ++r) {
    Eigen::VectorXd row = C.row(r).transpose();
    const double scale = row.norm();
    Eigen::VectorXd v = orthogonalize(row, basis);
    if (!(scale > 0.0) || v.norm() <= kIndependenceTol * scale)
      throw Error(Errc::RankDeficient, "contrast row " + std::to_string(r + 1) + " is linearly dependent");
    basis.push_back(v / v.norm());
  }
  return basis;
}

}  // namespace

void check_contrast(const Eigen::MatrixXd& C) {
  const int J = static_cast<int>(C.cols());
  if (J < 2) throw Error(Errc::InvalidArgument, "contrast needs at least two columns");
  if (C.rows() > J - 1)
    throw Error(Errc::RankDeficient, "a contrast over " + std::to_string(J) + " arms has at most " +
                                         std::to_string(J - 1) + " independent rows");
  const double norm_inf = C.rows() == 0 ? 0.0 : C.cwiseAbs().rowwise().sum().maxCoeff();
  for (int r = 0; r < C.rows(); ++r) {
    if (std::abs(C.row(r).sum()) > kContrastTol * norm_inf)
      throw Error(Errc::NotContrast, "contrast row " + std::to_string(r + 1) + " does not sum to zero");
  }
  contrast_basis(C);
}

Eigen::MatrixXd complete_contrast(const Eigen::MatrixXd& C) {
  check_contrast(C);
  const int J = static_cast<int>(C.cols());
  const int need = J - static_cast<int>(C.rows()) - 1;
  auto basis = contrast_basis(C);
  std::vector<Eigen::VectorXd> completion;
  for (int i = 0; i < J && static_cast<int>(completion.size()) < need; ++i) {
    Eigen::VectorXd v = orthogonalize(Eigen::VectorXd::Unit(J, i), basis);
    const double len = v.norm();
    if (len <= 1e-8) continue;
    v /= len;
    basis.push_back(v);
    completion.push_back(v);
  }
  return stack_rows(completion, J);
}

Hypothesis make_hypothesis(const Eigen::MatrixXd& C, const Eigen::VectorXd& x, Orientation orientation,
                           bool allow_multirow_one_sided) {
  if (x.size() != C.rows())
    throw Error(Errc::DimensionMismatch, "target length " + std::to_string(x.size()) +
                                             " does not match contrast rows " + std::to_string(C.rows()));
  if (C.rows() == 0) throw Error(Errc::InvalidArgument, "contrast has no rows");
  if (orientation == Orientation::OneSidedGe && C.rows() != 1 && !allow_multirow_one_sided)
    throw Error(Errc::InvalidArgument, "one-sided hypotheses take a single contrast row");
  Hypothesis h;
  h.C = C;
  h.x = x;
  h.orientation = orientation;
  h.arms = static_cast<int>(C.cols());
  h.dim = 1;
  ContrastBlock block;
  block.C = C;
  block.x = x;
  block.C_tilde = complete_contrast(C);
  block.x_tilde = Eigen::VectorXd::Zero(block.C_tilde.rows());
  h.blocks.push_back(std::move(block));
  return h;
}

Hypothesis with_target(const Hypothesis& h, const Eigen::VectorXd& x) {
  if (x.size() != h.C.rows()) throw Error(Errc::DimensionMismatch, "target length does not match contrast rows");
  Hypothesis out = h;
  out.x = x;
  out.stratum_x.clear();
  Eigen::Index offset = 0;
  for (auto& block : out.blocks) {
    block.x = x.segment(offset, block.C.rows());
    offset += block.C.rows();
  }
  return out;
}

Hypothesis assemble_vector_contrast(const std::vector<std::pair<Eigen::MatrixXd, Eigen::VectorXd>>& blocks,
                                    int dim) {
  if (dim < 1 || static_cast<int>(blocks.size()) != dim)
    throw Error(Errc::DimensionMismatch, "need one contrast block per outcome coordinate");
  int J = -1, m = 0;
  for (const auto& [Ck, xk] : blocks) {
    if (Ck.rows() > 0) {
      if (J >= 0 && Ck.cols() != J) throw Error(Errc::DimensionMismatch, "contrast blocks disagree on arm count");
      J = static_cast<int>(Ck.cols());
    }
    if (xk.size() != Ck.rows()) throw Error(Errc::DimensionMismatch, "block target length mismatch");
    m += static_cast<int>(Ck.rows());
  }
  if (m == 0) throw Error(Errc::InvalidArgument, "all contrast blocks are empty");

  Hypothesis h;
  h.arms = J;
  h.dim = dim;
  h.C = Eigen::MatrixXd::Zero(m, J * dim);
  h.x.resize(m);
  int row = 0;
  for (int k = 0; k < dim; ++k) {
    const auto& [Ck, xk] = blocks[k];
    ContrastBlock block;
    block.C = Ck.rows() > 0 ? Ck : Eigen::MatrixXd(0, J);
    block.x = xk;
    block.C_tilde = complete_contrast(block.C);
    block.x_tilde = Eigen::VectorXd::Zero(block.C_tilde.rows());
    // Row r of C_k (x) e_k^T puts C_k(r, j) at column j*d + k.
    for (int r = 0; r < block.C.rows(); ++r, ++row) {
      for (int j = 0; j < J; ++j) h.C(row, j * dim + k) = block.C(r, j);
      h.x(row) = xk(r);
    }
    h.blocks.push_back(std::move(block));
  }
  return h;
}

Hypothesis hypothesis_from_long_contrast(const Eigen::MatrixXd& C, const Eigen::VectorXd& x, int arms, int dim) {
  if (C.cols() != arms * dim)
    throw Error(Errc::DimensionMismatch, "contrast has " + std::to_string(C.cols()) + " columns, expected " +
                                             std::to_string(arms * dim));
  if (x.size() != C.rows()) throw Error(Errc::DimensionMismatch, "target length does not match contrast rows");
  if (dim == 1) return make_hypothesis(C, x);
  std::vector<std::vector<int>> rows_of(static_cast<std::size_t>(dim));
  for (int r = 0; r < C.rows(); ++r) {
    int coord = -1;
    for (int c = 0; c < C.cols(); ++c) {
      if (C(r, c) == 0.0) continue;
      const int k = c % dim;
      if (coord >= 0 && coord != k)
        throw Error(Errc::CrossEntryComparison,
                    "row " + std::to_string(r + 1) + " compares different outcome coordinates");
      coord = k;
    }
    if (coord < 0) throw Error(Errc::RankDeficient, "row " + std::to_string(r + 1) + " is zero");
    rows_of[coord].push_back(r);
  }
  std::vector<std::pair<Eigen::MatrixXd, Eigen::VectorXd>> blocks;
  for (int k = 0; k < dim; ++k) {
    Eigen::MatrixXd Ck(static_cast<Eigen::Index>(rows_of[k].size()), arms);
    Eigen::VectorXd xk(static_cast<Eigen::Index>(rows_of[k].size()));
    for (std::size_t r = 0; r < rows_of[k].size(); ++r) {
      for (int j = 0; j < arms; ++j) Ck(static_cast<Eigen::Index>(r), j) = C(rows_of[k][r], j * dim + k);
      xk(static_cast<Eigen::Index>(r)) = x(rows_of[k][r]);
    }
    blocks.emplace_back(std::move(Ck), std::move(xk));
  }
  return assemble_vector_contrast(blocks, dim);
}

ModelMatrix model_matrix(int factors, int max_arms) {
  if (factors < 1) throw Error(Errc::InvalidArgument, "factorial designs need at least one factor");
  if (factors > 30 || (1 << factors) > max_arms)
    throw Error(Errc::CapExceeded, "2^" + std::to_string(factors) + " arms exceeds the cap of " +
                                       std::to_string(max_arms));
  const int J = 1 << factors;
  ModelMatrix out;
  out.factors = factors;
  out.G.resize(J - 1, J);

  std::vector<Eigen::VectorXi> mains;
  for (int k = 1; k <= factors; ++k) {
    const int run = 1 << (factors - k);
    Eigen::VectorXi g(J);
    for (int c = 0; c < J; ++c) g(c) = ((c / run) % 2 == 0) ? -1 : 1;
    mains.push_back(g);
  }

  // Interactions by order, combinations of factors in lexicographic order.
  int row = 0;
  for (int order = 1; order <= factors; ++order) {
    std::vector<int> pick(static_cast<std::size_t>(order));
    for (int i = 0; i < order; ++i) pick[i] = i;
    while (true) {
      Eigen::VectorXi g = Eigen::VectorXi::Ones(J);
      std::string label;
      for (int f : pick) {
        g = g.cwiseProduct(mains[f]);
        label += static_cast<char>('A' + f);
      }
      out.G.row(row++) = g.transpose();
      out.labels.push_back(label);
      int i = order - 1;
      while (i >= 0 && pick[i] == factors - order + i) --i;
      if (i < 0) break;
      ++pick[i];
      for (int t = i + 1; t < order; ++t) pick[t] = pick[t - 1] + 1;
    }
  }
  return out;
}

Eigen::MatrixXd anova_contrast(int arms) {
  if (arms < 2) throw Error(Errc::InvalidArgument, "ANOVA needs at least two arms");
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(arms - 1, arms);
  C.col(0).setOnes();
  C.rightCols(arms - 1) = -Eigen::MatrixXd::Identity(arms - 1, arms - 1);
  return C;
}

Eigen::MatrixXd treatment_control_contrast(int arms, int treated, int control) {
  if (treated < 0 || control < 0 || treated >= arms || control >= arms || treated == control)
    throw Error(Errc::InvalidArgument, "treatment-control contrast needs two distinct arms");
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(1, arms);
  C(0, treated) = 1.0;
  C(0, control) = -1.0;
  return C;
}

Eigen::MatrixXd trend_contrast(std::span<const double> doses, std::span<const int> counts) {
  if (doses.size() != counts.size() || doses.size() < 2)
    throw Error(Errc::DimensionMismatch, "need one dose per arm");
  const int J = static_cast<int>(doses.size());
  double a_plus = 0.0, n = 0.0;
  for (int j = 0; j < J; ++j) {
    a_plus += doses[j];
    n += counts[j];
  }
  Eigen::MatrixXd C(1, J);
  for (int j = 0; j < J; ++j) C(0, j) = doses[j] - a_plus * counts[j] / n;
  const auto [lo, hi] = std::minmax_element(doses.begin(), doses.end());
  if (*lo == *hi) throw Error(Errc::BadDoses, "constant doses give a zero trend contrast");
  return C;
}

Eigen::MatrixXd factorial_contrast(int factors, std::span<const int> rows) {
  const ModelMatrix G = model_matrix(factors);
  if (rows.empty()) throw Error(Errc::InvalidArgument, "factorial subset is empty");
  Eigen::MatrixXd C(static_cast<Eigen::Index>(rows.size()), G.G.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 1 || rows[r] > G.G.rows())
      throw Error(Errc::InvalidArgument, "factorial row " + std::to_string(rows[r]) + " out of range");
    C.row(static_cast<Eigen::Index>(r)) = G.G.row(rows[r] - 1).cast<double>();
  }
  return C;
}

}  // namespace frt
