#pragma once

#include <cstdint>
#include <optional>

namespace tokengraft {

// How len() is measured in the length-normalization term of the local
// heuristic.
enum class LengthUnit { kCodepoints, kBytes };

struct HeuristicConfig {
  double temperature = 0.6;
  std::uint32_t k_neighbors = 10;
  double global_weight = 0.3;
  // Neighbors with similarity below this are dropped before the softmax.
  std::optional<double> similarity_threshold;
  std::uint64_t seed = 0;

  LengthUnit length_unit = LengthUnit::kCodepoints;
  // Test fixtures only: sub-tokens without an auxiliary vector get a
  // non-semantic pseudo-embedding instead of being dropped.
  bool pseudo_subtoken_fallback = false;

  // Throws ConfigError when any field is out of range.
  void validate() const;
};

}  // namespace tokengraft
