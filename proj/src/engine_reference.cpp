#include <algorithm>
#include <cmath>

#include "frt/engine.hpp"
#include "frt/error.hpp"

namespace frt {

namespace {

// Straightforward evaluation: materialize the permuted experiment and go
// through the ordinary summary functions.
std::optional<double> naive_statistic(const Dataset& base, const ScienceTable& table,
                                      std::span<const int> assignment, const StatisticEvaluator& eval) {
  Dataset d = base;
  d.treatment.assign(assignment.begin(), assignment.end());
  for (int i = 0; i < d.size(); ++i)
    for (int k = 0; k < d.dim; ++k) d.outcome(i, k) = table(i, assignment[i], k);
  StratifiedSummaries s;
  try {
    s = stratified_summaries(d);
  } catch (const Error& e) {
    if (e.code() != Errc::DegenerateVariance) throw;
    const StatKind kind = eval.kind();
    if (kind != StatKind::Box && kind != StatKind::F && kind != StatKind::AbsContrast) return std::nullopt;
    // Unstudentized statistics remain defined; summarize without the check.
    const auto members = stratum_members(d);
    s.total = d.size();
    s.strata.resize(members.size());
    s.weights.resize(static_cast<Eigen::Index>(members.size()));
    for (std::size_t h = 0; h < members.size(); ++h) {
      std::span<const int> units = members[h];
      if (members.size() == 1) units = {};
      summarize_into(d.treatment, d.outcome, d.arms, units, s.strata[h]);
      s.weights(static_cast<Eigen::Index>(h)) = static_cast<double>(members[h].size()) / s.total;
    }
  }
  const auto t = eval(s);
  if (!t || !std::isfinite(*t)) return std::nullopt;
  return t;
}

}  // namespace

FrtResult frt_pvalue_reference(const Dataset& data, const Hypothesis& h, StatKind kind,
                               const FrtOptions& options) {
  const Dataset base = data.design == Design::Cluster ? aggregate_clusters(data) : data;
  const Hypothesis hyp = data.design == Design::Cluster ? cluster_hypothesis(h, data.size(), data.clusters()) : h;
  const StatisticEvaluator eval(kind, hyp);
  const ScienceTable table = impute(base, hyp);
  const RandomizationScheme scheme = scheme_for(base);

  const auto observed = naive_statistic(base, table, base.treatment, eval);
  if (!observed) throw Error(Errc::DegenerateVariance, "observed statistic is undefined");

  FrtResult r;
  r.stat = kind;
  r.t_obs = *observed;
  r.p_reference = reference_pvalue_for(kind, r.t_obs, base, hyp);
  r.seed = options.seed;
  r.exhaustive = options.exhaustive;
  const double cut = r.t_obs - options.tie_tolerance * std::max(1.0, std::abs(r.t_obs));
  std::int64_t attempted = 0;
  auto visit = [&](std::span<const int> w) {
    ++attempted;
    const auto t = naive_statistic(base, table, w, eval);
    if (!t)
      ++r.degenerate;
    else if (*t >= cut)
      ++r.exceedances;
  };

  if (options.exhaustive) {
    enumerate_assignments(scheme, visit, options.enumeration_cap);
  } else {
    if (options.draws < 1) throw Error(Errc::InvalidArgument, "need at least one Monte Carlo draw");
    std::vector<int> w;
    for (std::int64_t start = 0, c = 0; start < options.draws; start += kChunkDraws, ++c) {
      Rng rng = derive_stream(options.seed, static_cast<std::uint64_t>(c));
      for (std::int64_t k = start; k < std::min(options.draws, start + kChunkDraws); ++k) {
        draw_assignment(scheme, rng, w);
        visit(w);
      }
    }
  }
  r.draws_used = attempted - r.degenerate;
  if (static_cast<double>(r.degenerate) > options.max_degenerate_fraction * static_cast<double>(attempted))
    throw Error(Errc::TooManyDegenerateDraws, "too many degenerate permuted samples");
  r.p_frt = options.exhaustive
                ? static_cast<double>(r.exceedances) / static_cast<double>(r.draws_used)
                : (1.0 + static_cast<double>(r.exceedances)) / (1.0 + static_cast<double>(r.draws_used));
  return r;
}

}  // namespace frt
