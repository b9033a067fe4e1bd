#include "frt/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "frt/asymptotics.hpp"
#include "frt/csv_io.hpp"
#include "frt/engine.hpp"
#include "frt/inference.hpp"
#include "frt/simulation.hpp"

namespace frt {

using nlohmann::json;

int exit_code(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return 2;
    case Errc::ParseError: return 3;
    case Errc::ArmTooSmall:
    case Errc::StratumCellTooSmall:
    case Errc::MixedClusterTreatment:
    case Errc::DimensionMismatch:
    case Errc::DegenerateVariance:
    case Errc::StratumTargetMismatch: return 4;
    case Errc::RankDeficient:
    case Errc::NotContrast:
    case Errc::BadDoses:
    case Errc::CrossEntryComparison:
    case Errc::IllConditioned:
    case Errc::UnsupportedStatistic: return 5;
    case Errc::SingularCovariance:
    case Errc::SingularDenominator: return 6;
    case Errc::CapExceeded:
    case Errc::TooManyDegenerateDraws: return 7;
  }
  return 1;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

int parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(Errc::InvalidArgument, "bad " + what + " '" + s + "'");
}

// Arm index from a 1-based position or an arm label.
int arm_index(const std::string& token, const std::vector<std::string>& labels) {
  for (std::size_t j = 0; j < labels.size(); ++j)
    if (labels[j] == token) return static_cast<int>(j);
  return parse_int(token, "arm") - 1;
}

Eigen::MatrixXd contrast_matrix(const std::string& spec, int arms, const std::vector<std::string>& labels,
                                std::span<const int> counts, std::span<const double> doses) {
  const auto parts = split(spec, ':');
  const std::string name = parts.empty() ? "" : parts[0];
  if (name == "anova") return anova_contrast(arms);
  if (name == "tc") {
    if (parts.size() == 1) return treatment_control_contrast(arms, 0, 1);
    if (parts.size() != 3) throw Error(Errc::InvalidArgument, "use tc or tc:TREATED:CONTROL");
    return treatment_control_contrast(arms, arm_index(parts[1], labels), arm_index(parts[2], labels));
  }
  if (name == "trend") {
    if (static_cast<int>(doses.size()) != arms) throw Error(Errc::BadDoses, "--doses needs one value per arm");
    return trend_contrast(doses, counts);
  }
  if (name == "factorial") {
    if (parts.size() != 3) throw Error(Errc::InvalidArgument, "use factorial:K:ROWS");
    const int K = parse_int(parts[1], "factor count");
    const ModelMatrix G = model_matrix(K);
    if (G.G.cols() != arms)
      throw Error(Errc::DimensionMismatch, "factorial:" + parts[1] + " needs " + std::to_string(G.G.cols()) + " arms");
    std::vector<int> rows;
    for (const auto& tok : split(parts[2], ',')) {
      const auto it = std::find(G.labels.begin(), G.labels.end(), tok);
      rows.push_back(it != G.labels.end() ? static_cast<int>(it - G.labels.begin()) + 1 : parse_int(tok, "row"));
    }
    return factorial_contrast(K, rows);
  }
  if (name == "file") {
    if (parts.size() < 2) throw Error(Errc::InvalidArgument, "use file:PATH");
    return read_matrix_file(spec.substr(5));
  }
  throw Error(Errc::InvalidArgument, "unknown contrast '" + spec + "'");
}

std::vector<int> arm_counts(const Dataset& data) {
  std::vector<int> counts(static_cast<std::size_t>(data.arms), 0);
  for (int w : data.treatment) ++counts[w];
  return counts;
}

std::uint64_t resolve_seed(const RunConfig& c) {
  if (c.seed) return *c.seed;
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::string percent(double p) {
  if (std::isnan(p)) return "n/a";
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * p << '%';
  return os.str();
}

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json num(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

Dataset load(const RunConfig& c, std::uint64_t seed) {
  if (c.input.empty()) throw Error(Errc::InvalidArgument, "--input is required");
  Dataset data = ingest_csv(c.input, {c.stratified, c.cluster});
  if (c.jitter > 0.0) data = apply_jitter(data, c.jitter, seed);
  return data;
}

std::string resolved_contrast(const RunConfig& c) {
  if (!c.contrast.empty()) return c.contrast;
  return c.stat == "trend" ? "trend" : "anova";
}

json result_json(const FrtResult& r) {
  return json{{"stat", to_string(r.stat)},      {"t_obs", r.t_obs},
              {"p_frt", r.p_frt},               {"p_reference", num(r.p_reference)},
              {"draws_used", r.draws_used},     {"exceedances", r.exceedances},
              {"degenerate", r.degenerate},     {"seed", r.seed},
              {"exhaustive", r.exhaustive}};
}

int run_test(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const std::uint64_t seed = resolve_seed(c);
  const Dataset data = load(c, seed);
  const StatKind kind = parse_stat_kind(c.stat);
  const Orientation orient =
      (kind == StatKind::T || kind == StatKind::TPlus) ? Orientation::OneSidedGe : Orientation::TwoSided;
  const Hypothesis h = build_hypothesis(resolved_contrast(c), data, c.null_target, orient, c.doses);

  FrtOptions opt;
  opt.draws = c.draws;
  opt.seed = seed;
  if (c.exact) {
    const Dataset& units = data;
    const long double count = assignment_count(scheme_for(units));
    if (count <= static_cast<long double>(opt.enumeration_cap)) {
      opt.exhaustive = true;
    } else {
      err << "note: " << static_cast<double>(count) << " assignments exceed the enumeration cap; using "
          << opt.draws << " Monte Carlo draws\n";
    }
  }

  if (kind == StatKind::TPlus && h.rows() > 1) {
    if (data.dim != 1) throw Error(Errc::InvalidArgument, "multi-row inequality tests need a scalar outcome");
    const BonferroniResult b = bonferroni_inequalities(data, h.C, h.x, c.alpha, opt);
    if (c.output == OutputFormat::Json) {
      json rows = json::array();
      for (const auto& r : b.rows) {
        json j = result_json(r.result);
        j["x"] = r.x;
        j["reject"] = r.reject;
        rows.push_back(j);
      }
      out << json{{"command", "test"}, {"mode", "bonferroni"}, {"alpha", b.alpha},
                  {"level", b.level},  {"reject", b.reject},   {"rows", rows}}
                 .dump(2)
          << '\n';
    } else {
      out << "Bonferroni inequality test, " << b.rows.size() << " rows at level " << percent(b.level) << "\n";
      for (std::size_t r = 0; r < b.rows.size(); ++r)
        out << "  row " << r + 1 << ": t+ = " << b.rows[r].result.t_obs << ", p (FRT) = "
            << percent(b.rows[r].result.p_frt) << ", p (normal) = " << percent(b.rows[r].result.p_reference)
            << (b.rows[r].reject ? "  reject" : "") << "\n";
      out << "global decision: " << (b.reject ? "reject" : "do not reject") << "\n";
      out << "seed " << seed << "\n";
    }
    return 0;
  }

  const FrtResult r = frt_pvalue(data, h, kind, opt);
  const Eigen::VectorXd est = hl_estimate(data, h);
  const bool reject = r.p_frt <= c.alpha;
  if (c.output == OutputFormat::Json) {
    json j = result_json(r);
    j["command"] = "test";
    j["design"] = to_string(data.design);
    j["N"] = data.size();
    j["J"] = data.arms;
    j["d"] = data.dim;
    j["m"] = h.rows();
    j["x"] = vec_json(h.x);
    j["estimate"] = vec_json(est);
    j["alpha"] = c.alpha;
    j["reject"] = reject;
    out << j.dump(2) << '\n';
    return 0;
  }
  out << "design      " << to_string(data.design) << ", N = " << data.size() << ", J = " << data.arms
      << ", d = " << data.dim << "\n";
  out << "statistic   " << to_string(kind) << ", m = " << h.rows() << "\n";
  out << "estimate    " << est.transpose() << "\n";
  out << "T_obs       " << std::setprecision(6) << r.t_obs << "\n";
  out << "p (FRT)     " << percent(r.p_frt);
  if (r.exhaustive)
    out << "  exact, " << r.exceedances << "/" << r.draws_used << " assignments";
  else
    out << "  " << r.draws_used << " draws";
  if (r.degenerate > 0) out << ", " << r.degenerate << " degenerate";
  out << "\n";
  out << "p (ref)     " << percent(r.p_reference) << "\n";
  out << "seed        " << seed << "\n";
  out << "decision    " << (reject ? "reject" : "do not reject") << " at alpha = " << percent(c.alpha) << "\n";
  return 0;
}

int run_ci(const RunConfig& c, std::ostream& out, std::ostream&) {
  const std::uint64_t seed = resolve_seed(c);
  const Dataset data = load(c, seed);
  const StatKind kind = parse_stat_kind(c.stat);
  const Hypothesis h = build_hypothesis(resolved_contrast(c), data, c.null_target, Orientation::TwoSided, c.doses);
  GridSpec grid;
  grid.points = c.grid_points;
  grid.inflation = c.inflation;
  RegionMode mode;
  if (c.mode == "frt")
    mode = RegionMode::FrtInverted;
  else if (c.mode == "asymptotic")
    mode = RegionMode::AsymptoticOnly;
  else
    throw Error(Errc::InvalidArgument, "--mode must be frt or asymptotic");
  FrtOptions opt;
  opt.draws = c.draws;
  opt.seed = seed;
  const ConfidenceRegion region = confidence_region(data, h, c.alpha, grid, mode, opt, kind);

  if (c.output == OutputFormat::Json) {
    json rows = json::array();
    for (const auto& p : region.grid)
      rows.push_back(json{{"x", vec_json(p.x)},
                          {"p", num(p.p)},
                          {"accepted", p.accepted},
                          {"p_asymptotic", p.p_asymptotic},
                          {"in_ellipse", p.in_ellipse},
                          {"error", p.error}});
    json shape = json::array();
    for (Eigen::Index i = 0; i < region.ellipsoid.shape.rows(); ++i)
      shape.push_back(vec_json(region.ellipsoid.shape.row(i).transpose()));
    out << json{{"command", "ci"},
                {"alpha", region.alpha},
                {"mode", to_string(region.mode)},
                {"seed", seed},
                {"center", vec_json(region.ellipsoid.center)},
                {"shape", shape},
                {"radius", region.ellipsoid.radius},
                {"grid", rows}}
               .dump(2)
        << '\n';
    return 0;
  }
  out << "# center " << region.ellipsoid.center.transpose() << "\n";
  out << "# ellipsoid radius " << region.ellipsoid.radius << " (shape rows:";
  for (Eigen::Index i = 0; i < region.ellipsoid.shape.rows(); ++i) out << " [" << region.ellipsoid.shape.row(i) << "]";
  out << ")\n# mode " << to_string(region.mode) << ", seed " << seed << ", accepted " << region.accepted_count()
      << " of " << region.grid.size() << "\n";
  const int m = static_cast<int>(region.ellipsoid.center.size());
  for (int i = 0; i < m; ++i) out << "x" << i + 1 << ",";
  out << "p,accepted,p_asymptotic,in_ellipse\n";
  out << std::setprecision(10);
  for (const auto& p : region.grid) {
    for (int i = 0; i < m; ++i) out << p.x(i) << ",";
    out << p.p << "," << p.accepted << "," << p.p_asymptotic << "," << p.in_ellipse << "\n";
  }
  return 0;
}

int run_simulate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  SimulationSpec spec = scenario_spec(parse_scenario(c.scenario));
  if (!c.u.empty()) {
    spec.u = c.u;
    if (static_cast<int>(c.u.size()) != spec.C.cols()) spec.C = anova_contrast(static_cast<int>(c.u.size()));
  }
  if (!c.contrast.empty()) {
    std::vector<std::string> labels;
    for (int j = 1; j <= spec.arms(); ++j) labels.push_back(std::to_string(j));
    const std::vector<int> counts(static_cast<std::size_t>(spec.arms()), c.n);
    spec.C = contrast_matrix(c.contrast, spec.arms(), labels, counts, c.doses);
  }
  spec.n = c.n;
  spec.replications = c.replications;
  spec.permutations = c.permutations;
  spec.seed = resolve_seed(c);
  spec.alphas = {0.01, 0.02, c.alpha, 0.10};
  std::sort(spec.alphas.begin(), spec.alphas.end());
  spec.alphas.erase(std::unique(spec.alphas.begin(), spec.alphas.end()), spec.alphas.end());
  spec.stats.clear();
  for (const auto& s : c.stats) spec.stats.push_back(parse_stat_kind(s));

  const StudyResult r = type1_study(spec);
  for (std::size_t s = 0; s < r.failures.size(); ++s)
    if (r.failures[s] > 0)
      err << "note: " << r.failures[s] << " replications failed for " << to_string(spec.stats[s]) << "\n";
  if (c.output == OutputFormat::Json) {
    json rates = json::array(), hist = json::array();
    for (const auto& row : r.rates)
      rates.push_back(json{{"statistic", to_string(row.stat)}, {"alpha", row.alpha}, {"rate", row.rate},
                           {"se", row.se}, {"valid", row.valid}});
    for (const auto& row : r.histogram)
      hist.push_back(json{{"statistic", to_string(row.stat)}, {"lo", row.lo}, {"hi", row.hi},
                          {"count", row.count}, {"density", row.density}});
    out << json{{"command", "simulate"}, {"scenario", to_string(spec.scenario)}, {"n", spec.n},
                {"seed", spec.seed},     {"rates", rates},                      {"histogram", hist}}
               .dump(2)
        << '\n';
    return 0;
  }
  if (!c.prefix.empty()) {
    std::ofstream rates(c.prefix + "_rates.csv"), hist(c.prefix + "_histogram.csv");
    if (!rates || !hist) throw Error(Errc::InvalidArgument, "cannot write output files with prefix " + c.prefix);
    write_rates_csv(rates, r);
    write_histogram_csv(hist, r);
    out << "wrote " << c.prefix << "_rates.csv and " << c.prefix << "_histogram.csv (seed " << spec.seed << ")\n";
    return 0;
  }
  out << "# seed " << spec.seed << "\n";
  write_rates_csv(out, r);
  out << "\n";
  write_histogram_csv(out, r);
  return 0;
}

PopulationSpec load_population(const RunConfig& c) {
  if (!c.u.empty()) return rank_one_population(c.u);
  if (c.population.empty()) throw Error(Errc::InvalidArgument, "weights needs --u or --population");
  std::ifstream in(c.population);
  if (!in) throw Error(Errc::ParseError, "cannot open '" + c.population + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("population file: ") + e.what());
  }
  PopulationSpec pop;
  try {
    const auto p = j.at("p").get<std::vector<double>>();
    const auto S = j.at("S").get<std::vector<std::vector<double>>>();
    pop.p = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
    pop.S.resize(static_cast<Eigen::Index>(S.size()), static_cast<Eigen::Index>(S.size()));
    for (std::size_t r = 0; r < S.size(); ++r) {
      if (S[r].size() != S.size()) throw Error(Errc::ParseError, "population file: S must be square");
      for (std::size_t k = 0; k < S.size(); ++k) pop.S(r, k) = S[r][k];
    }
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("population file: ") + e.what());
  }
  return pop;
}

int run_weights(const RunConfig& c, std::ostream& out, std::ostream&) {
  const PopulationSpec pop = load_population(c);
  check_population(pop);
  const int J = pop.arms();
  std::vector<std::string> labels;
  std::vector<int> counts;
  for (int j = 0; j < J; ++j) {
    labels.push_back(std::to_string(j + 1));
    counts.push_back(static_cast<int>(std::lround(pop.p(j) * 1e6)));
  }
  const Eigen::MatrixXd C = contrast_matrix(c.contrast.empty() ? "anova" : c.contrast, J, labels, counts, c.doses);
  const int m = static_cast<int>(C.rows());

  struct Entry {
    std::string name;
    LimitKind kind;
    double scale;
  };
  const std::vector<Entry> entries{{"X2 sampling", LimitKind::X2Sampling, 1.0},
                                   {"X2 randomization", LimitKind::X2Randomization, 1.0},
                                   {"mB sampling", LimitKind::BoxSampling, static_cast<double>(m)},
                                   {"mB randomization", LimitKind::BoxRandomization, static_cast<double>(m)},
                                   {"mF sampling", LimitKind::FSampling, 1.0}};
  json laws = json::array();
  std::vector<std::vector<double>> w(entries.size());
  for (std::size_t e = 0; e < entries.size(); ++e) {
    w[e] = limit_weights(pop, C, entries[e].kind).weights;
    for (double& a : w[e]) a *= entries[e].scale;
  }
  // Limiting FRT rejection rate: sampling law beyond the randomization law's quantile.
  auto frt_rate = [&](std::size_t sampling, std::size_t randomization) {
    const double q = weighted_chi2_upper_quantile(w[randomization], c.alpha);
    return weighted_chi2_tail(w[sampling], q);
  };
  const double x2_rate = frt_rate(0, 1), box_rate = frt_rate(2, 3);

  if (c.output == OutputFormat::Json) {
    for (std::size_t e = 0; e < entries.size(); ++e)
      laws.push_back(json{{"law", entries[e].name}, {"weights", w[e]}});
    out << json{{"command", "weights"}, {"m", m},           {"alpha", c.alpha}, {"laws", laws},
                {"x2_frt_rate", x2_rate},  {"box_frt_rate", box_rate}}
               .dump(2)
        << '\n';
    return 0;
  }
  out << std::fixed << std::setprecision(3);
  for (std::size_t e = 0; e < entries.size(); ++e) {
    out << std::left << std::setw(18) << entries[e].name << "(";
    for (std::size_t k = 0; k < w[e].size(); ++k) out << (k ? ", " : "") << w[e][k];
    out << ")\n";
  }
  out << "limiting FRT rejection at alpha = " << percent(c.alpha) << ": X2 " << percent(x2_rate) << ", B "
      << percent(box_rate) << "\n";
  return 0;
}

}  // namespace

Hypothesis build_hypothesis(const std::string& spec, const Dataset& data, std::span<const double> x,
                            Orientation orientation, std::span<const double> doses) {
  const Eigen::MatrixXd C = contrast_matrix(spec, data.arms, data.arm_labels, arm_counts(data), doses);
  const int d = data.dim;
  const bool long_form = d > 1 && C.cols() == static_cast<Eigen::Index>(data.arms) * d;
  if (C.cols() != data.arms && !long_form)
    throw Error(Errc::DimensionMismatch, "contrast has " + std::to_string(C.cols()) + " columns, expected " +
                                             std::to_string(data.arms));
  const Eigen::Index total_rows = long_form ? C.rows() : C.rows() * d;
  Eigen::VectorXd target = Eigen::VectorXd::Zero(total_rows);
  if (!x.empty()) {
    if (static_cast<Eigen::Index>(x.size()) != total_rows)
      throw Error(Errc::DimensionMismatch, "--null needs " + std::to_string(total_rows) + " values");
    for (Eigen::Index i = 0; i < total_rows; ++i) target(i) = x[static_cast<std::size_t>(i)];
  }
  if (long_form) return hypothesis_from_long_contrast(C, target, data.arms, d);
  if (d == 1) return make_hypothesis(C, target, orientation);
  if (orientation != Orientation::TwoSided)
    throw Error(Errc::InvalidArgument, "one-sided tests need a scalar outcome");
  std::vector<std::pair<Eigen::MatrixXd, Eigen::VectorXd>> blocks;
  for (int k = 0; k < d; ++k) blocks.emplace_back(C, target.segment(k * C.rows(), C.rows()));
  return assemble_vector_contrast(blocks, d);
}

Dataset apply_jitter(const Dataset& data, double eps, std::uint64_t seed) {
  if (!(eps >= 0.0)) throw Error(Errc::InvalidArgument, "jitter must be non-negative");
  Dataset out = data;
  Rng rng = derive_stream(seed, std::numeric_limits<std::uint64_t>::max() - 1);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int k = 0; k < data.dim; ++k) {
    std::vector<double> col(data.outcome.col(k).data(), data.outcome.col(k).data() + data.size());
    std::sort(col.begin(), col.end());
    auto quantile = [&](double q) {
      const double pos = q * (col.size() - 1);
      const std::size_t lo = static_cast<std::size_t>(pos);
      const std::size_t hi = std::min(lo + 1, col.size() - 1);
      return col[lo] + (pos - lo) * (col[hi] - col[lo]);
    };
    double scale = quantile(0.75) - quantile(0.25);
    if (!(scale > 0.0)) scale = col.back() - col.front();
    if (!(scale > 0.0)) scale = 1.0;
    for (int i = 0; i < data.size(); ++i) out.outcome(i, k) += eps * scale * unif(rng);
  }
  return out;
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    if (config.command == "test") return run_test(config, out, err);
    if (config.command == "ci") return run_ci(config, out, err);
    if (config.command == "simulate") return run_simulate(config, out, err);
    if (config.command == "weights") return run_weights(config, out, err);
    throw Error(Errc::InvalidArgument, "unknown command '" + config.command + "'");
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Randomization tests for weak null hypotheses"};
  app.require_subcommand(1);
  RunConfig c;
  std::string output = "table";
  std::uint64_t seed = 0;

  auto add_data_options = [&](CLI::App* sub) {
    sub->add_option("-i,--input", c.input, "CSV with treatment and outcome columns")->required();
    sub->add_option("--stat", c.stat, "x2|box|f|x2hw|t|tplus|trend|abs");
    sub->add_option("--contrast", c.contrast, "anova|tc|tc:A:B|trend|factorial:K:ROWS|file:PATH");
    sub->add_option("--null", c.null_target, "null target x")->delimiter(',');
    sub->add_option("--doses", c.doses, "dose per arm for the trend contrast")->delimiter(',');
    sub->add_option("--draws", c.draws, "Monte Carlo draws")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "random seed (random when omitted)");
    sub->add_option("--alpha", c.alpha, "significance level")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--jitter", c.jitter, "uniform noise of this size times the IQR")->check(CLI::NonNegativeNumber);
    sub->add_flag("--stratified", c.stratified, "analyse within the stratum column");
    sub->add_flag("--cluster", c.cluster, "aggregate over the cluster column");
    sub->add_option("--output", output, "table|json")->check(CLI::IsMember({"table", "json"}));
  };

  CLI::App* test = app.add_subcommand("test", "randomization test of C Ybar = x");
  add_data_options(test);
  test->add_flag("--exact", c.exact, "enumerate all assignments when under the cap");

  CLI::App* ci = app.add_subcommand("ci", "confidence region by test inversion");
  add_data_options(ci);
  ci->add_option("--grid", c.grid_points, "grid points per axis")->check(CLI::Range(2, 1001));
  ci->add_option("--inflation", c.inflation, "grid half-width over the ellipsoid axis")->check(CLI::PositiveNumber);
  ci->add_option("--mode", c.mode, "frt|asymptotic")->check(CLI::IsMember({"frt", "asymptotic"}));

  CLI::App* sim = app.add_subcommand("simulate", "type I error study");
  sim->add_option("--scenario", c.scenario, "anova_J3|factorial_2x2|sre_two_strata|custom");
  sim->add_option("--n", c.n, "units per arm")->check(CLI::Range(2, 1000000));
  sim->add_option("--replications", c.replications, "outer replications")->check(CLI::PositiveNumber);
  sim->add_option("--permutations", c.permutations, "draws per test")->check(CLI::PositiveNumber);
  sim->add_option("--stats", c.stats, "statistics to compare")->delimiter(',');
  sim->add_option("--u", c.u, "scale vector u")->delimiter(',');
  sim->add_option("--contrast", c.contrast, "contrast for a custom scenario");
  sim->add_option("--seed", seed, "random seed (random when omitted)");
  sim->add_option("--alpha", c.alpha, "extra alpha to report")->check(CLI::Range(0.0, 1.0));
  sim->add_option("--prefix", c.prefix, "write PREFIX_rates.csv and PREFIX_histogram.csv");
  sim->add_option("--output", output, "table|json")->check(CLI::IsMember({"table", "json"}));

  CLI::App* weights = app.add_subcommand("weights", "limit-law weights for a population");
  weights->add_option("--u", c.u, "balanced population with S = u u^T")->delimiter(',');
  weights->add_option("--population", c.population, "JSON file with p and S");
  weights->add_option("--contrast", c.contrast, "anova|tc|factorial:K:ROWS|file:PATH");
  weights->add_option("--doses", c.doses, "dose per arm for the trend contrast")->delimiter(',');
  weights->add_option("--alpha", c.alpha, "level for the limiting rejection rate")->check(CLI::Range(0.0, 1.0));
  weights->add_option("--output", output, "table|json")->check(CLI::IsMember({"table", "json"}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  for (CLI::App* sub : {test, ci, sim, weights})
    if (sub->parsed()) {
      c.command = sub->get_name();
      const CLI::Option* opt = sub->get_option_no_throw("--seed");
      if (opt != nullptr && opt->count() > 0) c.seed = seed;
    }
  c.output = output == "json" ? OutputFormat::Json : OutputFormat::Table;
  return run(c, out, err);
}

}  // namespace frt
