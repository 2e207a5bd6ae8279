#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

#include "obcsim/types.hpp"

namespace obcsim::mapping {

/// Assignment of thread replicas to tiles.
struct ThreadMapping {
  std::map<ThreadId, std::vector<TileId>> placements;  // tiles ascending
  std::vector<TileId> tiles;                           // tiles the mapping covers
  std::set<TileId> gated;                              // surplus tiles to clock-gate

  std::uint32_t replicas_of(ThreadId thread) const;
  std::vector<ThreadId> threads_on(TileId tile) const;
  std::uint32_t load_on(TileId tile, std::span<const ThreadSpec> threads) const;
  bool uses(TileId tile) const;

  bool operator==(const ThreadMapping&) const = default;
};

/// Sum of achieved replication (capped at the required level) per
/// criticality level, index 0 being the most critical. Compared
/// lexicographically.
using SatisfactionVector = std::vector<std::uint32_t>;

SatisfactionVector satisfaction_vector(const ThreadMapping& mapping,
                                       std::span<const ThreadSpec> threads);
bool lex_less(const SatisfactionVector& a, const SatisfactionVector& b);

struct MappingScore {
  std::map<ThreadId, std::uint32_t> achieved;  // min(placed, required)
  std::uint64_t placed_workload = 0;
  std::uint32_t active_tiles = 0;
  SatisfactionVector satisfaction;
  double robustness = 0;
  double performance = 0;
  double energy = 0;
  double scalar = 0;
};

struct MapperOptions {
  std::uint32_t capacity = 4;  // work units per tile and interval
  /// Node budget for the exact improvement search; beyond it the best
  /// mapping found so far is kept.
  std::uint64_t search_budget = 1u << 20;
};

class TotalLossError : public std::runtime_error {
 public:
  TotalLossError() : std::runtime_error("no healthy tile left: total loss") {}
};

class InvalidMappingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Degraded thread-to-tile mapping. Threads are served in (criticality,
/// thread id) order on the least-loaded tiles, then improved toward the
/// lexicographically best satisfaction vector and adjusted by the operator
/// weights. Throws TotalLossError when `healthy_tiles` is empty.
ThreadMapping compute_mapping(std::span<const TileId> healthy_tiles,
                              std::span<const ThreadSpec> threads, const ObjectiveWeights& weights,
                              const MapperOptions& options = {});

/// Weighted scalarization of robustness, performance, and energy.
/// Throws InvalidMappingError if the mapping uses a tile listed as defunct.
MappingScore score_mapping(const ThreadMapping& mapping, std::span<const ThreadSpec> threads,
                           const ObjectiveWeights& weights,
                           std::span<const TileId> defunct_tiles = {});

struct OracleResult {
  ThreadMapping mapping;
  SatisfactionVector satisfaction;
};

/// Exhaustive search for the lexicographically best satisfaction vector.
/// Refuses instances above 4 tiles or 5 threads.
OracleResult oracle_exhaustive(std::span<const TileId> healthy_tiles,
                               std::span<const ThreadSpec> threads, std::uint32_t capacity);

/// A lower-criticality replica on `tile` that could be handed to a
/// higher-criticality thread still below its required replication.
struct Transfer {
  ThreadId higher = 0;
  ThreadId lower = 0;
  TileId tile = 0;
};

std::optional<Transfer> find_dominance_violation(const ThreadMapping& mapping,
                                                 std::span<const ThreadSpec> threads,
                                                 std::uint32_t capacity);

}  // namespace obcsim::mapping
