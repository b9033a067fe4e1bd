#include "frt/assignment.hpp"

#include <algorithm>
#include <cmath>

#include "frt/error.hpp"

namespace frt {

Rng derive_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x6a09e667u};
  return Rng(seq);
}

std::vector<int> RandomizationScheme::arm_sizes() const {
  std::vector<int> out(static_cast<std::size_t>(arms), 0);
  for (int w : base) ++out[static_cast<std::size_t>(w)];
  return out;
}

std::vector<std::vector<int>> RandomizationScheme::block_arm_sizes() const {
  std::vector<std::vector<int>> out;
  for (const auto& block : blocks) {
    std::vector<int> sizes(static_cast<std::size_t>(arms), 0);
    for (int i : block) ++sizes[static_cast<std::size_t>(base[i])];
    out.push_back(std::move(sizes));
  }
  return out;
}

RandomizationScheme complete_scheme(std::span<const int> arm_sizes) {
  RandomizationScheme s;
  s.kind = SchemeKind::Complete;
  s.arms = static_cast<int>(arm_sizes.size());
  for (int j = 0; j < s.arms; ++j) {
    if (arm_sizes[j] < 1) throw Error(Errc::InvalidArgument, "arm sizes must be positive");
    s.base.insert(s.base.end(), static_cast<std::size_t>(arm_sizes[j]), j);
  }
  std::vector<int> all(s.base.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  s.blocks.push_back(std::move(all));
  return s;
}

RandomizationScheme stratified_scheme(const std::vector<std::vector<int>>& stratum_arm_sizes) {
  RandomizationScheme s;
  s.kind = SchemeKind::Stratified;
  s.arms = stratum_arm_sizes.empty() ? 0 : static_cast<int>(stratum_arm_sizes.front().size());
  for (const auto& sizes : stratum_arm_sizes) {
    if (static_cast<int>(sizes.size()) != s.arms)
      throw Error(Errc::DimensionMismatch, "every stratum needs a size for each arm");
    std::vector<int> block;
    for (int j = 0; j < s.arms; ++j)
      for (int r = 0; r < sizes[j]; ++r) {
        block.push_back(static_cast<int>(s.base.size()));
        s.base.push_back(j);
      }
    s.blocks.push_back(std::move(block));
  }
  return s;
}

RandomizationScheme scheme_for(const Dataset& data) {
  RandomizationScheme s;
  s.arms = data.arms;
  if (data.design == Design::Cluster) {
    s.kind = SchemeKind::Cluster;
    s.base.assign(static_cast<std::size_t>(data.clusters()), -1);
    for (int i = 0; i < data.size(); ++i) s.base[data.cluster[i]] = data.treatment[i];
    std::vector<int> all(s.base.size());
    for (std::size_t c = 0; c < all.size(); ++c) all[c] = static_cast<int>(c);
    s.blocks.push_back(std::move(all));
    return s;
  }
  s.base = data.treatment;
  if (data.design == Design::Stratified) {
    s.kind = SchemeKind::Stratified;
    s.blocks = stratum_members(data);
  } else {
    s.kind = SchemeKind::Complete;
    std::vector<int> all(s.base.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    s.blocks.push_back(std::move(all));
  }
  return s;
}

void draw_assignment(const RandomizationScheme& scheme, Rng& rng, std::vector<int>& out) {
  out = scheme.base;
  for (const auto& block : scheme.blocks) {
    // Fisher-Yates over the block's positions.
    for (std::size_t k = block.size(); k > 1; --k) {
      std::uniform_int_distribution<std::size_t> pick(0, k - 1);
      const std::size_t r = pick(rng);
      std::swap(out[block[k - 1]], out[block[r]]);
    }
  }
}

long double assignment_count(const RandomizationScheme& scheme) {
  long double total = 1.0L;
  for (const auto& sizes : scheme.block_arm_sizes()) {
    // Multinomial as a product of binomials, each built incrementally.
    long long placed = 0;
    for (int nj : sizes) {
      for (int k = 1; k <= nj; ++k) total = total * static_cast<long double>(placed + k) / k;
      placed += nj;
    }
  }
  return std::round(total);
}

void enumerate_assignments(const RandomizationScheme& scheme,
                           const std::function<void(std::span<const int>)>& visit, std::uint64_t cap) {
  const long double count = assignment_count(scheme);
  if (count > static_cast<long double>(cap))
    throw Error(Errc::CapExceeded, "design has about " + std::to_string(static_cast<double>(count)) +
                                       " assignments, above the enumeration cap " + std::to_string(cap));
  const std::size_t B = scheme.blocks.size();
  std::vector<std::vector<int>> labels(B);
  for (std::size_t b = 0; b < B; ++b) {
    for (int i : scheme.blocks[b]) labels[b].push_back(scheme.base[i]);
    std::sort(labels[b].begin(), labels[b].end());
  }
  std::vector<int> w(scheme.base.size());
  auto write = [&](std::size_t b) {
    for (std::size_t k = 0; k < scheme.blocks[b].size(); ++k) w[scheme.blocks[b][k]] = labels[b][k];
  };
  for (std::size_t b = 0; b < B; ++b) write(b);
  while (true) {
    visit(w);
    // Odometer: advance the last block; on wrap-around carry to the previous one.
    std::size_t b = B;
    while (b > 0) {
      --b;
      const bool advanced = std::next_permutation(labels[b].begin(), labels[b].end());
      write(b);
      if (advanced) break;
      if (b == 0) return;
    }
    if (B == 0) return;
  }
}

std::vector<int> expand_cluster_assignment(const Dataset& data, std::span<const int> cluster_assignment) {
  if (static_cast<int>(cluster_assignment.size()) != data.clusters())
    throw Error(Errc::DimensionMismatch, "need one arm per cluster");
  std::vector<int> out(static_cast<std::size_t>(data.size()));
  for (int i = 0; i < data.size(); ++i) out[i] = cluster_assignment[data.cluster[i]];
  return out;
}

}  // namespace frt
