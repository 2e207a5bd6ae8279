#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace obcsim {

/// Simulated time. One checkpoint interval is `SystemConfig::checkpoint_interval`
/// ticks (1000 by default).
using Tick = std::int64_t;

using TileId = std::uint32_t;
using ThreadId = std::uint32_t;
using RegionId = std::uint32_t;
using VariantId = std::uint32_t;
using CheckpointSeq = std::uint64_t;
using Checksum = std::uint32_t;
using FaultId = std::uint32_t;

/// Set of abstract fabric regions on one tile. Region ids are bit positions.
using RegionMask = std::uint64_t;

inline constexpr std::uint32_t kMaxRegions = 64;

constexpr RegionMask region_bit(RegionId r) { return RegionMask{1} << r; }
std::vector<RegionId> regions_of(RegionMask mask);

enum class CheckpointTrigger { Time, Supervisor };

/// Global system parameters. Times are in ticks, powers in watts.
struct SystemConfig {
  std::uint32_t tile_count = 4;
  std::uint32_t spare_count = 1;  // counted within tile_count
  Tick checkpoint_interval = 1000;
  Tick watchdog_timeout = 2500;
  std::uint32_t fault_counter_threshold = 3;
  std::uint32_t variant_count = 3;
  std::uint32_t region_count = 10;
  double variant_region_fraction = 0.6;
  /// Explicit variant region sets; when empty, variants are drawn from rng_seed.
  std::vector<std::vector<RegionId>> variants;
  std::uint32_t fifo_depth = 4;
  double per_tile_active_power = 0.28;
  double per_tile_gated_power = 0.05;
  double static_power = 0.80;
  std::uint64_t rng_seed = 1;

  std::uint32_t report_ring_size = 4;
  std::uint32_t tile_capacity = 4;
  Tick vote_window = 50;
  Tick command_latency = 10;
  std::uint32_t partial_reconfig_intervals = 10;
  std::uint32_t full_reconfig_intervals = 50;
  double selftest_detection_probability = 1.0;
  Tick scrub_period = 5000;  // 0 disables scrubbing
  Tick memory_read_offset = 500;
  Tick babble_latency = 20;
  CheckpointTrigger checkpoint_trigger = CheckpointTrigger::Time;
  /// Per-tile clock-domain phase; missing entries are 0.
  std::vector<Tick> phase_offsets;
  std::uint32_t checkpoints = 100;  // run length in checkpoint intervals
  double interval_seconds = 1.0;

  Tick phase_of(TileId tile) const {
    return tile < phase_offsets.size() ? phase_offsets[tile] : 0;
  }
  Tick end_time() const { return static_cast<Tick>(checkpoints + 1) * checkpoint_interval; }

  bool operator==(const SystemConfig&) const = default;
};

/// Replica state of one application thread. The word layout is owned by the
/// thread's behavior model.
struct ThreadState {
  std::vector<std::uint32_t> words;
  bool operator==(const ThreadState&) const = default;
};

enum class BehaviorKind { Counter, Mix };

/// Deterministic state transition applied once per checkpoint interval.
struct Behavior {
  BehaviorKind kind = BehaviorKind::Counter;
  std::uint32_t step = 1;

  ThreadState apply(const ThreadState& state, CheckpointSeq seq) const;
  bool operator==(const Behavior&) const = default;
};

using StateBlob = std::vector<std::uint8_t>;

/// A replicated application task together with its lockstep callbacks
/// (init, checksum, expose, update).
struct ThreadSpec {
  ThreadId id = 0;
  std::string name;
  std::uint32_t criticality = 0;  // 0 is the most critical
  std::uint32_t required_replication = 1;
  std::uint32_t load = 1;  // work units per checkpoint interval
  Behavior behavior;
  std::uint32_t state_words = 1;
  std::vector<std::uint32_t> init_words;  // zero-padded to state_words
  /// Pre-generated checksum; such threads have no update callback and are
  /// never resynchronized.
  std::optional<Checksum> fixed_checksum;
  Tick checkpoint_delay = 0;

  ThreadState init() const;
  Checksum checksum(const ThreadState& state) const;
  StateBlob expose(const ThreadState& state, CheckpointSeq seq) const;
  bool resyncable() const { return !fixed_checksum.has_value(); }

  bool operator==(const ThreadSpec&) const = default;
};

/// Canonical, field-ordered byte serialization of a thread state. The
/// checksum is the CRC-32 of these bytes.
std::vector<std::uint8_t> canonical_bytes(ThreadId thread, const ThreadState& state);

enum class TileHealth { Healthy, Suspected, Reconfiguring, Defunct };
std::string_view to_string(TileHealth health);

struct CheckpointReport {
  TileId tile = 0;
  CheckpointSeq seq = 0;
  std::vector<std::pair<ThreadId, Checksum>> checksums;  // ascending thread id
  Tick emit_time = 0;

  std::optional<Checksum> checksum_of(ThreadId thread) const;
  bool operator==(const CheckpointReport&) const = default;
};

struct MajorityDecision {
  CheckpointSeq seq = 0;
  ThreadId thread = 0;
  std::optional<Checksum> agreed;
  std::set<TileId> agreeing;
  std::set<TileId> dissenting;
  std::set<TileId> missing;
  bool undecidable = false;
  std::map<TileId, Checksum> reported;  // every checksum that arrived in time

  bool clean() const { return !undecidable && dissenting.empty() && missing.empty(); }
  bool operator==(const MajorityDecision&) const = default;
};

struct ConfigurationVariant {
  VariantId id = 0;
  RegionMask regions = 0;

  bool functions_with(RegionMask defective) const { return (regions & defective) == 0; }
  bool operator==(const ConfigurationVariant&) const = default;
};

enum class FaultKind {
  TransientStateFlip,
  ChecksumCorruption,
  Hang,
  PermanentRegionFault,
  MemoryUpset,
  BabblingTile,
};
std::string_view to_string(FaultKind kind);
std::optional<FaultKind> fault_kind_from_string(std::string_view name);

enum class Persistence { Transient, Permanent };

struct FaultTarget {
  TileId tile = 0;
  std::optional<ThreadId> thread;
  std::optional<RegionId> region;
  std::uint32_t word = 0;
  std::uint32_t bit = 0;
  bool operator==(const FaultTarget&) const = default;
};

struct FaultEvent {
  FaultId id = 0;
  Tick onset = 0;
  FaultKind kind = FaultKind::TransientStateFlip;
  Persistence persistence = Persistence::Transient;
  FaultTarget target;
  bool operator==(const FaultEvent&) const = default;
};

/// Operator preference between the three competing objectives. Always
/// normalized to sum to 1.
class ObjectiveWeights {
 public:
  ObjectiveWeights() = default;
  ObjectiveWeights(double performance, double energy, double robustness);

  double performance() const { return performance_; }
  double energy() const { return energy_; }
  double robustness() const { return robustness_; }

  bool operator==(const ObjectiveWeights&) const = default;

 private:
  double performance_ = 1.0 / 3.0;
  double energy_ = 1.0 / 3.0;
  double robustness_ = 1.0 / 3.0;
};

}  // namespace obcsim
