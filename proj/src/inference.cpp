#include "frt/inference.hpp"

#include <cmath>
#include <limits>

#include "frt/asymptotics.hpp"
#include "frt/error.hpp"

namespace frt {

namespace {

// Stratum-weighted mean vector accumulated in the same order as the statistics.
Eigen::VectorXd pooled_mean(const Dataset& data) {
  const auto members = stratum_members(data);
  Eigen::VectorXd mean;
  GroupSummaries g;
  for (std::size_t h = 0; h < members.size(); ++h) {
    std::span<const int> units = members[h];
    if (members.size() == 1) units = {};
    summarize_into(data.treatment, data.outcome, data.arms, units, g);
    const double w = static_cast<double>(members[h].size()) / data.size();
    if (h == 0)
      mean = w * g.mean_vector();
    else
      mean += w * g.mean_vector();
  }
  return mean;
}

// Observed X^2 as a function of the target, on the unit scale.
class ObservedX2 {
 public:
  ObservedX2(const Dataset& data, const Hypothesis& h)
      : clustered_(data.design == Design::Cluster),
        scale_(clustered_ ? static_cast<double>(data.size()) / data.clusters() : 1.0),
        summaries_(stratified_summaries(clustered_ ? aggregate_clusters(data) : data)),
        h_(h) {}

  double operator()(const Eigen::VectorXd& x) const {
    const Hypothesis hx = with_target(h_, clustered_ ? Eigen::VectorXd(x * scale_) : x);
    const auto t = StatisticEvaluator(StatKind::X2, hx)(summaries_);
    if (!t) throw Error(Errc::SingularCovariance, "observed X^2 is undefined");
    return *t;
  }

 private:
  bool clustered_;
  double scale_;
  StratifiedSummaries summaries_;
  Hypothesis h_;
};

}  // namespace

Eigen::VectorXd hl_estimate(const Dataset& data, const Hypothesis& h) {
  if (data.design == Design::Cluster) {
    const Dataset agg = aggregate_clusters(data);
    return (h.C * pooled_mean(agg)) * (static_cast<double>(data.clusters()) / data.size());
  }
  return h.C * pooled_mean(data);
}

const char* to_string(RegionMode mode) noexcept {
  return mode == RegionMode::AsymptoticOnly ? "asymptotic_only" : "frt_inverted";
}

bool Ellipsoid::contains(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd r = center - x;
  return r.dot(shape.ldlt().solve(r)) <= radius;
}

std::size_t ConfidenceRegion::accepted_count() const {
  std::size_t n = 0;
  for (const auto& p : grid) n += p.accepted ? 1 : 0;
  return n;
}

ConfidenceRegion confidence_region(const Dataset& data, const Hypothesis& h, double alpha, const GridSpec& grid,
                                   RegionMode mode, const FrtOptions& options, StatKind kind) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(Errc::InvalidArgument, "alpha must lie in (0,1)");
  const int m = h.rows();
  if (mode == RegionMode::FrtInverted && m > 2)
    throw Error(Errc::InvalidArgument, "grid inversion supports at most two contrast rows");
  if (grid.points < 2) throw Error(Errc::InvalidArgument, "grid needs at least two points per axis");

  ConfidenceRegion region;
  region.alpha = alpha;
  region.mode = mode;
  const ObservedX2 stat(data, h);
  const Eigen::VectorXd center = hl_estimate(data, h);

  // X^2 is an exact quadratic in x; recover its matrix by polarization.
  Eigen::MatrixXd A(m, m);
  for (int i = 0; i < m; ++i) A(i, i) = stat(center + Eigen::VectorXd::Unit(m, i));
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      const double both = stat(center + Eigen::VectorXd::Unit(m, i) + Eigen::VectorXd::Unit(m, j));
      A(i, j) = A(j, i) = 0.5 * (both - A(i, i) - A(j, j));
    }
  region.ellipsoid.center = center;
  region.ellipsoid.shape = A.inverse();
  region.ellipsoid.radius = chi2_upper_quantile(m, alpha);
  if (m > 2) return region;

  Eigen::VectorXd lo(m), hi(m);
  if (grid.bounds) {
    lo = grid.bounds->first;
    hi = grid.bounds->second;
  } else {
    for (int i = 0; i < m; ++i) {
      const double half = grid.inflation * std::sqrt(region.ellipsoid.radius * region.ellipsoid.shape(i, i));
      lo(i) = center(i) - half;
      hi(i) = center(i) + half;
    }
  }
  const int k = grid.points;
  const int mid = (k - 1) / 2;
  auto coordinate = [&](int axis, int idx) {
    if (grid.bounds) return lo(axis) + idx * (hi(axis) - lo(axis)) / (k - 1);
    // Offsets from the center keep the middle point exactly at the estimate when k is odd.
    return center(axis) + (idx - mid) * ((hi(axis) - lo(axis)) / (k - 1));
  };
  const int total = m == 1 ? k : k * k;
  region.grid.resize(static_cast<std::size_t>(total));
  for (int g = 0; g < total; ++g) {
    Eigen::VectorXd x(m);
    x(0) = coordinate(0, m == 1 ? g : g / k);
    if (m == 2) x(1) = coordinate(1, g % k);
    region.grid[g].x = x;
  }

  FrtOptions point_options = options;
  point_options.parallel = false;
#pragma omp parallel for schedule(dynamic) if (options.parallel && mode == RegionMode::FrtInverted)
  for (int g = 0; g < total; ++g) {
    RegionPoint& pt = region.grid[g];
    try {
      const double q = stat(pt.x);
      pt.p_asymptotic = reference_pvalue(q, StatKind::X2, m, data.size(), data.arms);
      pt.in_ellipse = q <= region.ellipsoid.radius;
      if (mode == RegionMode::AsymptoticOnly) {
        pt.p = pt.p_asymptotic;
      } else {
        pt.p = frt_pvalue(data, with_target(h, pt.x), kind, point_options).p_frt;
      }
      pt.accepted = pt.p > alpha;
    } catch (const Error& e) {
      pt.p = std::numeric_limits<double>::quiet_NaN();
      pt.accepted = false;
      pt.error = e.what();
    }
  }
  return region;
}

BonferroniResult bonferroni_inequalities(const Dataset& data, const Eigen::MatrixXd& C, const Eigen::VectorXd& x,
                                         double alpha, const FrtOptions& options) {
  if (C.rows() != x.size()) throw Error(Errc::DimensionMismatch, "need one target per contrast row");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(Errc::InvalidArgument, "alpha must lie in (0,1)");
  BonferroniResult out;
  out.alpha = alpha;
  out.level = alpha / static_cast<double>(C.rows());
  for (Eigen::Index r = 0; r < C.rows(); ++r) {
    const Hypothesis h = make_hypothesis(C.row(r), Eigen::VectorXd::Constant(1, x(r)), Orientation::OneSidedGe);
    InequalityRow row;
    row.x = x(r);
    row.result = frt_pvalue(data, h, StatKind::TPlus, options);
    row.reject = row.result.p_frt <= out.level;
    out.reject = out.reject || row.reject;
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace frt
