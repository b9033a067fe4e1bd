#include "frt/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "frt/asymptotics.hpp"
#include "frt/error.hpp"

namespace frt {

namespace {

Dataset analysis_dataset(const Dataset& data) {
  return data.design == Design::Cluster ? aggregate_clusters(data) : data;
}

Hypothesis analysis_hypothesis(const Dataset& data, const Hypothesis& h) {
  return data.design == Design::Cluster ? cluster_hypothesis(h, data.size(), data.clusters()) : h;
}

bool is_studentized(StatKind kind) {
  switch (kind) {
    case StatKind::X2:
    case StatKind::X2HW:
    case StatKind::T:
    case StatKind::TPlus:
    case StatKind::Trend: return true;
    default: return false;
  }
}

void check_degenerate(const FrtResult& r, std::int64_t attempted, double max_fraction) {
  if (static_cast<double>(r.degenerate) > max_fraction * static_cast<double>(attempted))
    throw Error(Errc::TooManyDegenerateDraws,
                std::to_string(r.degenerate) + " of " + std::to_string(attempted) +
                    " permuted samples had a degenerate arm variance; consider jittering tied outcomes");
}

}  // namespace

double reference_pvalue_for(StatKind kind, double t_obs, const Dataset& data, const Hypothesis& h) {
  // The stratified F regression also spends one coefficient per extra stratum.
  const int params = kind == StatKind::F ? data.arms + data.strata - 1 : data.arms;
  try {
    return reference_pvalue(t_obs, kind, h.rows(), data.size(), params);
  } catch (const Error& e) {
    if (e.code() != Errc::UnsupportedStatistic) throw;
    return std::numeric_limits<double>::quiet_NaN();
  }
}

RandomizationKernel::RandomizationKernel(const Dataset& data, const Hypothesis& h, StatKind kind)
    : data_(analysis_dataset(data)),
      h_(analysis_hypothesis(data, h)),
      eval_(kind, h_),
      table_(impute(data_, h_)),
      scheme_(scheme_for(data_)),
      members_(stratum_members(data_)),
      studentized_(is_studentized(kind)) {
  Workspace ws;
  const auto t = evaluate(data_.treatment, ws);
  if (!t) {
    if (studentized_)
      throw Error(Errc::DegenerateVariance,
                  "observed data have an arm with zero or singular sample covariance; consider jittering");
    throw Error(Errc::SingularCovariance, "observed statistic is undefined");
  }
  t_obs_ = *t;
  p_reference_ = reference_pvalue_for(kind, t_obs_, data_, h_);
}

std::optional<double> RandomizationKernel::evaluate(std::span<const int> assignment, Workspace& ws) const {
  const int H = static_cast<int>(members_.size());
  StratifiedSummaries& s = ws.summaries;
  if (static_cast<int>(s.strata.size()) != H) {
    s.strata.resize(static_cast<std::size_t>(H));
    s.total = data_.size();
    s.weights.resize(H);
    for (int hh = 0; hh < H; ++hh) s.weights(hh) = static_cast<double>(members_[hh].size()) / s.total;
  }
  table_.observe(assignment, ws.outcome);
  bool ok = true;
  for (int hh = 0; hh < H; ++hh) {
    std::span<const int> units = members_[hh];
    if (H == 1) units = {};
    ok = summarize_into(assignment, ws.outcome, data_.arms, units, s.strata[hh]) && ok;
  }
  if (!ok && studentized_) return std::nullopt;
  const auto t = eval_(s);
  if (!t || !std::isfinite(*t)) return std::nullopt;
  return t;
}

bool RandomizationKernel::exceeds(double t, double tie_tolerance) const {
  return t >= t_obs_ - tie_tolerance * std::max(1.0, std::abs(t_obs_));
}

FrtResult frt_pvalue(const RandomizationKernel& kernel, const FrtOptions& options) {
  FrtResult r;
  r.stat = kernel.kind();
  r.t_obs = kernel.observed();
  r.p_reference = kernel.reference_pvalue();
  r.seed = options.seed;
  r.exhaustive = options.exhaustive;
  const RandomizationScheme& scheme = kernel.scheme();
  const double tol = options.tie_tolerance;
  std::int64_t exceed = 0, degenerate = 0, attempted = 0;

  if (options.exhaustive) {
    constexpr std::size_t kBatch = 4096;
    const std::size_t n = static_cast<std::size_t>(scheme.units());
    std::vector<int> buffer;
    buffer.reserve(kBatch * n);
    auto flush = [&] {
      const std::int64_t count = static_cast<std::int64_t>(buffer.size() / n);
      std::int64_t e = 0, g = 0;
#pragma omp parallel if (options.parallel) reduction(+ : e, g)
      {
        RandomizationKernel::Workspace ws;
#pragma omp for schedule(static)
        for (std::int64_t b = 0; b < count; ++b) {
          const auto t = kernel.evaluate(std::span<const int>(buffer.data() + b * n, n), ws);
          if (!t)
            ++g;
          else if (kernel.exceeds(*t, tol))
            ++e;
        }
      }
      exceed += e;
      degenerate += g;
      attempted += count;
      buffer.clear();
    };
    enumerate_assignments(
        scheme,
        [&](std::span<const int> w) {
          buffer.insert(buffer.end(), w.begin(), w.end());
          if (buffer.size() == kBatch * n) flush();
        },
        options.enumeration_cap);
    if (!buffer.empty()) flush();
    r.exceedances = exceed;
    r.degenerate = degenerate;
    r.draws_used = attempted - degenerate;
    check_degenerate(r, attempted, options.max_degenerate_fraction);
    r.p_frt = static_cast<double>(exceed) / static_cast<double>(r.draws_used);
    return r;
  }

  if (options.draws < 1) throw Error(Errc::InvalidArgument, "need at least one Monte Carlo draw");
  const std::int64_t R = options.draws;
  const std::int64_t chunks = (R + kChunkDraws - 1) / kChunkDraws;
#pragma omp parallel if (options.parallel) reduction(+ : exceed, degenerate)
  {
    RandomizationKernel::Workspace ws;
#pragma omp for schedule(dynamic)
    for (std::int64_t c = 0; c < chunks; ++c) {
      Rng rng = derive_stream(options.seed, static_cast<std::uint64_t>(c));
      const std::int64_t end = std::min(R, (c + 1) * kChunkDraws);
      for (std::int64_t k = c * kChunkDraws; k < end; ++k) {
        draw_assignment(scheme, rng, ws.assignment);
        const auto t = kernel.evaluate(ws.assignment, ws);
        if (!t)
          ++degenerate;
        else if (kernel.exceeds(*t, tol))
          ++exceed;
      }
    }
  }
  r.exceedances = exceed;
  r.degenerate = degenerate;
  r.draws_used = R - degenerate;
  check_degenerate(r, R, options.max_degenerate_fraction);
  r.p_frt = (1.0 + static_cast<double>(exceed)) / (1.0 + static_cast<double>(r.draws_used));
  return r;
}

FrtResult frt_pvalue(const Dataset& data, const Hypothesis& h, StatKind kind, const FrtOptions& options) {
  return frt_pvalue(RandomizationKernel(data, h, kind), options);
}

}  // namespace frt
