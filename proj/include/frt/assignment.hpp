#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "frt/dataset.hpp"

namespace frt {

using Rng = std::mt19937_64;

// Independent stream for (seed, stream index). Chunked Monte Carlo loops use
// one stream per chunk so results do not depend on the worker count.
Rng derive_stream(std::uint64_t seed, std::uint64_t stream);

enum class SchemeKind { Complete, Stratified, Cluster };

// Assignment mechanism: uniform over rearrangements of `base` within each
// block. A complete design has one block holding every unit; a stratified
// design has one block per stratum; a cluster scheme is complete over
// clusters.
struct RandomizationScheme {
  SchemeKind kind = SchemeKind::Complete;
  int arms = 0;
  std::vector<int> base;                 // a valid assignment, arm per unit
  std::vector<std::vector<int>> blocks;  // unit indices per block

  int units() const { return static_cast<int>(base.size()); }
  std::vector<int> arm_sizes() const;
  // Arm sizes per block (N_[h]j).
  std::vector<std::vector<int>> block_arm_sizes() const;
};

// Complete design with the given arm sizes; base lists arm 0 first.
RandomizationScheme complete_scheme(std::span<const int> arm_sizes);

// Within-stratum scheme from per-stratum arm sizes; units numbered stratum by stratum.
RandomizationScheme stratified_scheme(const std::vector<std::vector<int>>& stratum_arm_sizes);

// Scheme matching the dataset's design around its observed assignment.
// Cluster datasets yield a complete scheme over clusters.
RandomizationScheme scheme_for(const Dataset& data);

// Uniform draw from the scheme into `out` (resized to N).
void draw_assignment(const RandomizationScheme& scheme, Rng& rng, std::vector<int>& out);

// Number of distinct assignments: product over blocks of N_b!/prod_j N_bj!.
// Returned as long double since it overflows integers quickly.
long double assignment_count(const RandomizationScheme& scheme);

inline constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;

// Visits each distinct assignment exactly once, in lexicographic order per
// block with the last block varying fastest. Throws CapExceeded.
void enumerate_assignments(const RandomizationScheme& scheme,
                           const std::function<void(std::span<const int>)>& visit,
                           std::uint64_t cap = kDefaultEnumerationCap);

// Unit-level assignment implied by a cluster-level one.
std::vector<int> expand_cluster_assignment(const Dataset& data, std::span<const int> cluster_assignment);

}  // namespace frt
