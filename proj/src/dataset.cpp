#include "frt/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "frt/error.hpp"

namespace frt {

const char* to_string(Design design) noexcept {
  switch (design) {
    case Design::Complete: return "CRE";
    case Design::Stratified: return "SRE";
    case Design::Cluster: return "Cluster-CRE";
  }
  return "?";
}

namespace {

std::optional<double> parse_number(const std::string& s) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

// Sorted distinct labels: numerically when every label is a number.
std::vector<std::string> ordered_labels(std::vector<std::string> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  bool numeric = std::all_of(labels.begin(), labels.end(),
                             [](const std::string& s) { return parse_number(s).has_value(); });
  if (numeric) {
    std::stable_sort(labels.begin(), labels.end(), [](const std::string& a, const std::string& b) {
      return *parse_number(a) < *parse_number(b);
    });
  }
  return labels;
}

std::vector<int> index_labels(const std::vector<std::string>& values,
                              const std::vector<std::string>& labels) {
  std::map<std::string, int> lookup;
  for (int k = 0; k < static_cast<int>(labels.size()); ++k) lookup[labels[k]] = k;
  std::vector<int> out;
  out.reserve(values.size());
  for (const auto& v : values) out.push_back(lookup.at(v));
  return out;
}

std::vector<std::string> default_labels(int n) {
  std::vector<std::string> out;
  for (int k = 1; k <= n; ++k) out.push_back(std::to_string(k));
  return out;
}

// Relative threshold below which an arm's spread counts as zero.
constexpr double kDegenerateRelTol = 1e-12;

bool covariance_degenerate(const Eigen::MatrixXd& cov, const Eigen::RowVectorXd& mean) {
  if (cov.rows() == 1) {
    double v = cov(0, 0);
    double scale = std::max(mean(0) * mean(0), v);
    return !(v > kDegenerateRelTol * kDegenerateRelTol * scale) || !(v > 0.0);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
  double lo = eig.eigenvalues().minCoeff();
  double hi = eig.eigenvalues().maxCoeff();
  return !(hi > 0.0) || !(lo > kDegenerateRelTol * hi);
}

}  // namespace

void check_dataset(const Dataset& data) {
  const int n = data.size();
  if (data.arms < 2) throw Error(Errc::ArmTooSmall, "at least two treatment arms are required");
  if (data.dim < 1 || data.outcome.cols() != data.dim || data.outcome.rows() != n)
    throw Error(Errc::DimensionMismatch, "outcome matrix does not match unit count and dimension");
  if (data.design == Design::Stratified && static_cast<int>(data.stratum.size()) != n)
    throw Error(Errc::DimensionMismatch, "stratified design needs a stratum for every unit");
  if (data.design == Design::Cluster && static_cast<int>(data.cluster.size()) != n)
    throw Error(Errc::DimensionMismatch, "cluster design needs a cluster for every unit");

  const int min_size = std::max(2, data.dim + 1);
  for (int t : data.treatment)
    if (t < 0 || t >= data.arms) throw Error(Errc::InvalidArgument, "treatment index out of range");

  if (data.design == Design::Stratified) {
    std::vector<int> cell(static_cast<std::size_t>(data.strata * data.arms), 0);
    for (int i = 0; i < n; ++i) {
      int h = data.stratum[i];
      if (h < 0 || h >= data.strata) throw Error(Errc::InvalidArgument, "stratum index out of range");
      ++cell[static_cast<std::size_t>(h * data.arms + data.treatment[i])];
    }
    for (int h = 0; h < data.strata; ++h)
      for (int j = 0; j < data.arms; ++j)
        if (cell[static_cast<std::size_t>(h * data.arms + j)] < min_size)
          throw Error(Errc::StratumCellTooSmall,
                      "stratum " + std::to_string(h + 1) + ", arm " + std::to_string(j + 1) + " has " +
                          std::to_string(cell[static_cast<std::size_t>(h * data.arms + j)]) +
                          " units, need " + std::to_string(min_size));
  }

  if (data.design == Design::Cluster) {
    const int clusters = data.clusters();
    std::vector<int> arm_of(static_cast<std::size_t>(clusters), -1);
    for (int i = 0; i < n; ++i) {
      int c = data.cluster[i];
      if (c < 0 || c >= clusters) throw Error(Errc::InvalidArgument, "cluster index out of range");
      int& a = arm_of[static_cast<std::size_t>(c)];
      if (a >= 0 && a != data.treatment[i])
        throw Error(Errc::MixedClusterTreatment, "cluster '" + data.cluster_labels[c] +
                                                     "' contains units under different treatments");
      a = data.treatment[i];
    }
    std::vector<int> per_arm(static_cast<std::size_t>(data.arms), 0);
    for (int a : arm_of)
      if (a >= 0) ++per_arm[static_cast<std::size_t>(a)];
    for (int j = 0; j < data.arms; ++j)
      if (per_arm[j] < min_size)
        throw Error(Errc::ArmTooSmall, "arm " + std::to_string(j + 1) + " has " +
                                           std::to_string(per_arm[j]) + " clusters, need " +
                                           std::to_string(min_size));
    return;
  }

  std::vector<int> counts(static_cast<std::size_t>(data.arms), 0);
  for (int t : data.treatment) ++counts[static_cast<std::size_t>(t)];
  for (int j = 0; j < data.arms; ++j)
    if (counts[j] < min_size)
      throw Error(Errc::ArmTooSmall, "arm " + std::to_string(j + 1) + " has " + std::to_string(counts[j]) +
                                         " units, need " + std::to_string(min_size));
}

Dataset validate_dataset(const RawDataset& raw) {
  if (raw.units.empty()) throw Error(Errc::InvalidArgument, "dataset has no units");
  Dataset data;
  data.design = raw.design;
  const int n = static_cast<int>(raw.units.size());
  data.dim = static_cast<int>(raw.units.front().outcome.size());
  if (data.dim < 1) throw Error(Errc::DimensionMismatch, "outcome dimension must be at least 1");

  std::vector<std::string> treat, strata, clusters;
  data.outcome.resize(n, data.dim);
  for (int i = 0; i < n; ++i) {
    const RawUnit& u = raw.units[i];
    if (static_cast<int>(u.outcome.size()) != data.dim)
      throw Error(Errc::DimensionMismatch, "unit " + std::to_string(i + 1) + " has outcome length " +
                                               std::to_string(u.outcome.size()) + ", expected " +
                                               std::to_string(data.dim));
    for (int k = 0; k < data.dim; ++k) data.outcome(i, k) = u.outcome[k];
    treat.push_back(u.treatment);
    data.unit_ids.push_back(u.unit_id.empty() ? std::to_string(i + 1) : u.unit_id);
    if (raw.design == Design::Stratified) {
      if (!u.stratum) throw Error(Errc::InvalidArgument, "unit " + std::to_string(i + 1) + " has no stratum");
      strata.push_back(*u.stratum);
    }
    if (raw.design == Design::Cluster) {
      if (!u.cluster) throw Error(Errc::InvalidArgument, "unit " + std::to_string(i + 1) + " has no cluster");
      clusters.push_back(*u.cluster);
    }
  }

  data.arm_labels = ordered_labels(treat);
  data.arms = static_cast<int>(data.arm_labels.size());
  data.treatment = index_labels(treat, data.arm_labels);

  if (raw.design == Design::Stratified) {
    data.stratum_labels = ordered_labels(strata);
    data.strata = static_cast<int>(data.stratum_labels.size());
    data.stratum = index_labels(strata, data.stratum_labels);
  } else {
    data.stratum.assign(static_cast<std::size_t>(n), 0);
    data.stratum_labels = {"all"};
  }
  if (raw.design == Design::Cluster) {
    data.cluster_labels = ordered_labels(clusters);
    data.cluster = index_labels(clusters, data.cluster_labels);
  }
  check_dataset(data);
  return data;
}

Dataset make_dataset(std::vector<int> treatment, Eigen::MatrixXd outcome, std::vector<int> stratum) {
  Dataset data;
  const int n = static_cast<int>(treatment.size());
  data.arms = treatment.empty() ? 0 : *std::max_element(treatment.begin(), treatment.end()) + 1;
  data.dim = static_cast<int>(outcome.cols());
  data.treatment = std::move(treatment);
  data.outcome = std::move(outcome);
  if (stratum.empty()) {
    data.stratum.assign(static_cast<std::size_t>(n), 0);
  } else {
    data.design = Design::Stratified;
    data.strata = *std::max_element(stratum.begin(), stratum.end()) + 1;
    data.stratum = std::move(stratum);
  }
  data.arm_labels = default_labels(data.arms);
  data.stratum_labels = default_labels(data.strata);
  for (int i = 1; i <= n; ++i) data.unit_ids.push_back(std::to_string(i));
  check_dataset(data);
  return data;
}

Eigen::VectorXd GroupSummaries::mean_vector() const {
  const int J = arms(), d = dim();
  Eigen::VectorXd out(J * d);
  for (int j = 0; j < J; ++j) out.segment(j * d, d) = means.row(j).transpose();
  return out;
}

Eigen::MatrixXd GroupSummaries::d_hat() const {
  const int J = arms(), d = dim();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(J * d, J * d);
  for (int j = 0; j < J; ++j)
    out.block(j * d, j * d, d, d) = covariances[j] * (static_cast<double>(total) / counts[j]);
  return out;
}

Eigen::MatrixXd GroupSummaries::d_hat_hw() const {
  const int J = arms(), d = dim();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(J * d, J * d);
  for (int j = 0; j < J; ++j) {
    double nj = counts[j];
    out.block(j * d, j * d, d, d) = covariances[j] * (total * (nj - 1.0) / (nj * nj));
  }
  return out;
}

bool summarize_into(std::span<const int> treatment, const Eigen::MatrixXd& outcome, int arms,
                    std::span<const int> units, GroupSummaries& out) {
  const int d = static_cast<int>(outcome.cols());
  const bool all = units.empty();
  const int n = all ? static_cast<int>(treatment.size()) : static_cast<int>(units.size());

  out.counts.assign(static_cast<std::size_t>(arms), 0);
  out.means.setZero(arms, d);
  out.covariances.resize(static_cast<std::size_t>(arms));
  for (auto& c : out.covariances) c.setZero(d, d);
  out.total = n;

  // Two passes: means first, then centered cross products.
  for (int r = 0; r < n; ++r) {
    const int i = all ? r : units[r];
    const int j = treatment[i];
    ++out.counts[j];
    out.means.row(j) += outcome.row(i);
  }
  for (int j = 0; j < arms; ++j) {
    if (out.counts[j] < 2) return false;
    out.means.row(j) /= static_cast<double>(out.counts[j]);
  }
  if (d == 1) {
    for (int r = 0; r < n; ++r) {
      const int i = all ? r : units[r];
      const int j = treatment[i];
      const double dev = outcome(i, 0) - out.means(j, 0);
      out.covariances[j](0, 0) += dev * dev;
    }
  } else {
    Eigen::RowVectorXd dev(d);
    for (int r = 0; r < n; ++r) {
      const int i = all ? r : units[r];
      const int j = treatment[i];
      dev = outcome.row(i) - out.means.row(j);
      out.covariances[j].noalias() += dev.transpose() * dev;
    }
  }
  out.grand_mean = Eigen::VectorXd::Zero(d);
  bool ok = true;
  for (int j = 0; j < arms; ++j) {
    out.covariances[j] /= static_cast<double>(out.counts[j] - 1);
    out.grand_mean += out.means.row(j).transpose() * (static_cast<double>(out.counts[j]) / n);
    if (covariance_degenerate(out.covariances[j], out.means.row(j))) ok = false;
  }
  return ok;
}

GroupSummaries group_summaries(const Dataset& data) {
  GroupSummaries out;
  if (!summarize_into(data.treatment, data.outcome, data.arms, {}, out)) {
    for (int j = 0; j < data.arms; ++j)
      if (out.counts[j] >= 2 && covariance_degenerate(out.covariances[j], out.means.row(j)))
        throw Error(Errc::DegenerateVariance,
                    "arm " + data.arm_labels[j] + " has a singular or zero sample covariance");
    throw Error(Errc::ArmTooSmall, "some arm has fewer than two units");
  }
  return out;
}

std::vector<std::vector<int>> stratum_members(const Dataset& data) {
  std::vector<std::vector<int>> members(static_cast<std::size_t>(data.strata));
  for (int i = 0; i < data.size(); ++i) members[data.stratum[i]].push_back(i);
  return members;
}

StratifiedSummaries stratified_summaries(const Dataset& data) {
  StratifiedSummaries out;
  out.total = data.size();
  const auto members = stratum_members(data);
  out.strata.resize(members.size());
  out.weights.resize(static_cast<Eigen::Index>(members.size()));
  for (std::size_t h = 0; h < members.size(); ++h) {
    std::span<const int> units = members[h];
    // A single stratum covering every unit is summarized exactly like the pooled data.
    if (members.size() == 1) units = {};
    if (!summarize_into(data.treatment, data.outcome, data.arms, units, out.strata[h]))
      throw Error(Errc::DegenerateVariance,
                  "stratum " + data.stratum_labels[h] + " has an arm with singular or zero sample covariance");
    out.weights(static_cast<Eigen::Index>(h)) = static_cast<double>(members[h].size()) / out.total;
  }
  return out;
}

}  // namespace frt
