#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "frt/asymptotics.hpp"
#include "frt/engine.hpp"

namespace frt {

enum class Scenario { AnovaJ3, Factorial2x2, SreTwoStrata, Custom };

const char* to_string(Scenario s) noexcept;
Scenario parse_scenario(const std::string& name);

struct SimulationSpec {
  Scenario scenario = Scenario::AnovaJ3;
  std::vector<double> u;  // Y_i(j) = u_j Y_i(1)
  int strata = 1;
  double stratum_shift = 1.0;  // added once per stratum index
  int n = 40;                  // units per arm (per stratum)
  int replications = 2000;
  int permutations = 1000;
  std::vector<double> alphas{0.01, 0.05, 0.10};
  std::uint64_t seed = 1;
  std::vector<StatKind> stats{StatKind::X2, StatKind::Box};
  Eigen::MatrixXd C;  // tested with target 0

  int arms() const { return static_cast<int>(u.size()); }
};

// Defaults for the named scenarios: ANOVA with u = (1,2,3), the 2^2 factorial
// main effects with u = (3,1,1,3), and the ANOVA setup over two strata.
SimulationSpec scenario_spec(Scenario s);

// Fixed finite population: N x J potential outcomes and strata.
struct Population {
  Eigen::MatrixXd outcomes;
  std::vector<int> stratum;
  int strata = 1;
};

// Standard normal base values, centered exactly, scaled by u. Every stratum
// reuses the first stratum's values plus h * stratum_shift.
Population generate_population(const SimulationSpec& spec);

// Arm proportions and potential-outcome covariance (N - 1 divisor) of the
// first stratum.
PopulationSpec empirical_population(const Population& pop);

struct RateRow {
  StatKind stat;
  double alpha = 0.0;
  double rate = 0.0;
  double se = 0.0;
  int valid = 0;
};

struct HistogramRow {
  StatKind stat;
  double lo = 0.0, hi = 0.0;
  int count = 0;
  double density = 0.0;  // count / (valid * width)
};

struct StudyResult {
  SimulationSpec spec;
  std::vector<RateRow> rates;
  std::vector<HistogramRow> histogram;
  std::vector<std::vector<double>> p_values;  // per statistic, per replication (NaN on failure)
  std::vector<int> failures;                  // per statistic
};

// Bin edges: 0.02 wide up to 0.1, then 0.1 wide. Bins are (lo, hi], the first one closed.
std::vector<double> histogram_edges();

StudyResult type1_study(const SimulationSpec& spec, bool parallel = true);

void write_rates_csv(std::ostream& os, const StudyResult& r);
void write_histogram_csv(std::ostream& os, const StudyResult& r);

}  // namespace frt
