#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "frt/contrast.hpp"
#include "frt/dataset.hpp"
#include "frt/error.hpp"
#include "frt/statistics.hpp"

namespace frt {

enum class OutputFormat { Table, Json };

struct RunConfig {
  std::string command;  // test, ci, simulate, weights
  std::string input;
  std::string contrast;  // empty: anova, or trend for --stat trend
  std::vector<double> null_target;  // empty: zeros
  std::string stat = "x2";
  std::int64_t draws = 10'000;
  std::optional<std::uint64_t> seed;
  bool exact = false;
  double alpha = 0.05;
  double jitter = 0.0;
  bool stratified = false;
  bool cluster = false;
  OutputFormat output = OutputFormat::Table;
  std::vector<double> doses;

  // ci
  int grid_points = 41;
  double inflation = 1.5;
  std::string mode = "frt";

  // simulate
  std::string scenario = "anova_J3";
  int n = 40;
  int replications = 2000;
  int permutations = 1000;
  std::vector<std::string> stats{"x2", "box"};
  std::vector<double> u;
  std::string prefix;

  // weights
  std::string population;
};

// Nonzero process status for each error family; 0 is reserved for success.
int exit_code(Errc code) noexcept;

// Builds the hypothesis for `data` from a contrast specification:
// anova | tc | tc:A:B | trend | factorial:K:ROWS | file:PATH. ROWS lists
// 1-based model-matrix rows or effect labels separated by commas. For vector
// outcomes a J-column contrast is applied to every coordinate.
Hypothesis build_hypothesis(const std::string& spec, const Dataset& data, std::span<const double> x,
                            Orientation orientation, std::span<const double> doses = {});

// Adds seeded uniform noise in [-eps, eps] times each coordinate's
// interquartile range (range, then 1, when the IQR is zero).
Dataset apply_jitter(const Dataset& data, double eps, std::uint64_t seed);

int run(const RunConfig& config, std::ostream& out, std::ostream& err);

// Parses arguments (argv[0] excluded) and runs.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace frt
