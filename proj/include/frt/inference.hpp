#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "frt/engine.hpp"

namespace frt {

// The p-value maximizer C Ybar for the given contrast (pooled over strata;
// for cluster designs expressed on the unit scale).
Eigen::VectorXd hl_estimate(const Dataset& data, const Hypothesis& h);

enum class RegionMode { AsymptoticOnly, FrtInverted };

const char* to_string(RegionMode mode) noexcept;

struct GridSpec {
  int points = 41;  // per axis, odd so the center is a grid point
  double inflation = 1.5;
  // Explicit [lo, hi] box; otherwise the ellipsoid's bounding box times inflation.
  std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> bounds;
};

struct RegionPoint {
  Eigen::VectorXd x;
  double p = 1.0;  // FRT p-value (asymptotic one in AsymptoticOnly mode)
  bool accepted = false;
  double p_asymptotic = 1.0;
  bool in_ellipse = false;
  std::string error;  // non-empty when the test at this point failed
};

// {x : (c - x)^T shape^{-1} (c - x) <= radius}.
struct Ellipsoid {
  Eigen::VectorXd center;
  Eigen::MatrixXd shape;
  double radius = 0.0;

  bool contains(const Eigen::VectorXd& x) const;
};

struct ConfidenceRegion {
  double alpha = 0.05;
  RegionMode mode = RegionMode::AsymptoticOnly;
  Ellipsoid ellipsoid;
  std::vector<RegionPoint> grid;

  std::size_t accepted_count() const;
};

// Test inversion over a 1-D or 2-D grid with the X^2 statistic (or `kind`).
// Every grid point reuses options.seed. Grids need m <= 2; for larger m only
// the ellipsoid is reported.
ConfidenceRegion confidence_region(const Dataset& data, const Hypothesis& h, double alpha, const GridSpec& grid,
                                   RegionMode mode, const FrtOptions& options, StatKind kind = StatKind::X2);

struct InequalityRow {
  double x = 0.0;
  FrtResult result;
  bool reject = false;
};

struct BonferroniResult {
  double alpha = 0.05;
  double level = 0.05;  // alpha / m
  std::vector<InequalityRow> rows;
  bool reject = false;
};

// Tests C_r Ybar >= x_r row by row with t_plus at level alpha/m.
BonferroniResult bonferroni_inequalities(const Dataset& data, const Eigen::MatrixXd& C, const Eigen::VectorXd& x,
                                         double alpha, const FrtOptions& options);

}  // namespace frt
