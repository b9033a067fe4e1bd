#include "frt/simulation.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "frt/error.hpp"

namespace frt {

const char* to_string(Scenario s) noexcept {
  switch (s) {
    case Scenario::AnovaJ3: return "anova_J3";
    case Scenario::Factorial2x2: return "factorial_2x2";
    case Scenario::SreTwoStrata: return "sre_two_strata";
    case Scenario::Custom: return "custom";
  }
  return "?";
}

Scenario parse_scenario(const std::string& name) {
  for (Scenario s : {Scenario::AnovaJ3, Scenario::Factorial2x2, Scenario::SreTwoStrata, Scenario::Custom})
    if (name == to_string(s)) return s;
  throw Error(Errc::InvalidArgument, "unknown scenario '" + name + "'");
}

SimulationSpec scenario_spec(Scenario s) {
  SimulationSpec spec;
  spec.scenario = s;
  switch (s) {
    case Scenario::AnovaJ3:
    case Scenario::Custom:
      spec.u = {1.0, 2.0, 3.0};
      spec.C = anova_contrast(3);
      break;
    case Scenario::Factorial2x2: {
      spec.u = {3.0, 1.0, 1.0, 3.0};
      const int rows[] = {1, 2};
      spec.C = factorial_contrast(2, rows);
      break;
    }
    case Scenario::SreTwoStrata:
      spec.u = {1.0, 2.0, 3.0};
      spec.C = anova_contrast(3);
      spec.strata = 2;
      break;
  }
  return spec;
}

Population generate_population(const SimulationSpec& spec) {
  const int J = spec.arms();
  if (J < 2) throw Error(Errc::InvalidArgument, "need at least two arms");
  bool nonzero = false;
  for (double v : spec.u) nonzero = nonzero || v != 0.0;
  if (!nonzero) throw Error(Errc::InvalidArgument, "u must not be zero");
  if (spec.n < 2 || spec.strata < 1) throw Error(Errc::InvalidArgument, "need n >= 2 and at least one stratum");

  const int per = spec.n * J;
  Rng rng = derive_stream(spec.seed, std::numeric_limits<std::uint64_t>::max());
  std::normal_distribution<double> normal;
  Eigen::VectorXd base(per);
  for (int i = 0; i < per; ++i) base(i) = normal(rng);
  base.array() -= base.mean();

  Population pop;
  pop.strata = spec.strata;
  pop.outcomes.resize(per * spec.strata, J);
  for (int h = 0; h < spec.strata; ++h)
    for (int i = 0; i < per; ++i) {
      pop.stratum.push_back(h);
      for (int j = 0; j < J; ++j) pop.outcomes(h * per + i, j) = spec.u[j] * base(i) + h * spec.stratum_shift;
    }
  return pop;
}

PopulationSpec empirical_population(const Population& pop) {
  int n = 0;
  while (n < static_cast<int>(pop.stratum.size()) && pop.stratum[n] == 0) ++n;
  const Eigen::MatrixXd Y = pop.outcomes.topRows(n);
  const Eigen::MatrixXd centered = Y.rowwise() - Y.colwise().mean();
  PopulationSpec out;
  out.p = Eigen::VectorXd::Constant(Y.cols(), 1.0 / Y.cols());
  out.S = centered.transpose() * centered / (n - 1.0);
  return out;
}

std::vector<double> histogram_edges() {
  std::vector<double> e;
  for (int k = 0; k <= 5; ++k) e.push_back(0.02 * k);
  for (int k = 2; k <= 10; ++k) e.push_back(0.1 * k);
  return e;
}

StudyResult type1_study(const SimulationSpec& spec, bool parallel) {
  const int J = spec.arms();
  if (spec.C.cols() != J) throw Error(Errc::DimensionMismatch, "contrast does not match the number of arms");
  if (spec.replications < 1 || spec.permutations < 1)
    throw Error(Errc::InvalidArgument, "need at least one replication and one permutation");
  const Population pop = generate_population(spec);
  const Hypothesis h = make_hypothesis(spec.C, Eigen::VectorXd::Zero(spec.C.rows()));
  const int S = static_cast<int>(spec.stats.size());

  std::vector<std::vector<int>> cell_sizes(static_cast<std::size_t>(spec.strata),
                                           std::vector<int>(static_cast<std::size_t>(J), spec.n));
  const RandomizationScheme scheme = stratified_scheme(cell_sizes);

  StudyResult out;
  out.spec = spec;
  out.p_values.assign(static_cast<std::size_t>(S),
                      std::vector<double>(static_cast<std::size_t>(spec.replications),
                                          std::numeric_limits<double>::quiet_NaN()));

#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int r = 0; r < spec.replications; ++r) {
    Rng rng = derive_stream(spec.seed, static_cast<std::uint64_t>(r));
    std::vector<int> w;
    draw_assignment(scheme, rng, w);
    Eigen::MatrixXd y(pop.outcomes.rows(), 1);
    for (Eigen::Index i = 0; i < y.rows(); ++i) y(i, 0) = pop.outcomes(i, w[i]);
    const std::uint64_t inner_seed = rng();
    try {
      const Dataset data = make_dataset(w, y, spec.strata > 1 ? pop.stratum : std::vector<int>{});
      FrtOptions opt;
      opt.draws = spec.permutations;
      opt.seed = inner_seed;
      opt.parallel = false;
      for (int s = 0; s < S; ++s) {
        try {
          out.p_values[s][r] = frt_pvalue(data, h, spec.stats[s], opt).p_frt;
        } catch (const Error&) {
        }
      }
    } catch (const Error&) {
    }
  }

  const auto edges = histogram_edges();
  for (int s = 0; s < S; ++s) {
    int valid = 0;
    for (double p : out.p_values[s]) valid += std::isnan(p) ? 0 : 1;
    out.failures.push_back(spec.replications - valid);
    for (double a : spec.alphas) {
      int hits = 0;
      for (double p : out.p_values[s]) hits += (!std::isnan(p) && p <= a) ? 1 : 0;
      RateRow row{spec.stats[s], a, 0.0, 0.0, valid};
      if (valid > 0) {
        row.rate = static_cast<double>(hits) / valid;
        row.se = std::sqrt(row.rate * (1.0 - row.rate) / valid);
      }
      out.rates.push_back(row);
    }
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
      HistogramRow row{spec.stats[s], edges[b], edges[b + 1], 0, 0.0};
      for (double p : out.p_values[s]) {
        if (std::isnan(p)) continue;
        const bool above = b == 0 ? p >= edges[b] : p > edges[b];
        if (above && p <= edges[b + 1]) ++row.count;
      }
      if (valid > 0) row.density = row.count / (valid * (row.hi - row.lo));
      out.histogram.push_back(row);
    }
  }
  return out;
}

void write_rates_csv(std::ostream& os, const StudyResult& r) {
  os << "scenario,statistic,n,alpha,rate,se\n";
  for (const auto& row : r.rates)
    os << to_string(r.spec.scenario) << ',' << to_string(row.stat) << ',' << r.spec.n << ',' << row.alpha << ','
       << row.rate << ',' << row.se << '\n';
}

void write_histogram_csv(std::ostream& os, const StudyResult& r) {
  os << "scenario,statistic,n,lo,hi,count,density\n";
  for (const auto& row : r.histogram)
    os << to_string(r.spec.scenario) << ',' << to_string(row.stat) << ',' << r.spec.n << ',' << row.lo << ','
       << row.hi << ',' << row.count << ',' << row.density << '\n';
}

}  // namespace frt
