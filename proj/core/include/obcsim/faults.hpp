#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "obcsim/catalog.hpp"
#include "obcsim/tile.hpp"
#include "obcsim/types.hpp"

namespace obcsim {

enum class FaultDistribution { Poisson, Uniform };

/// Randomized fault source within a campaign.
struct FaultGenerator {
  FaultKind kind = FaultKind::TransientStateFlip;
  Persistence persistence = Persistence::Transient;
  FaultDistribution distribution = FaultDistribution::Poisson;
  double rate = 0.0;        // Poisson: expected events per checkpoint interval
  std::uint32_t count = 0;  // Uniform: number of events
  Tick start = 0;
  std::optional<Tick> end;  // defaults to the scenario end time
  std::vector<TileId> tiles;      // empty: all tiles
  std::vector<ThreadId> threads;  // empty: all threads
  std::vector<RegionId> regions;  // empty: all regions

  bool operator==(const FaultGenerator&) const = default;
};

struct CampaignSpec {
  std::vector<FaultEvent> events;  // explicit faults
  std::vector<FaultGenerator> generators;

  bool empty() const { return events.empty() && generators.empty(); }
  bool operator==(const CampaignSpec&) const = default;
};

class CampaignError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Expands a campaign into an onset-ordered event list. The result depends
/// only on (spec, seed, config, threads). Event ids are assigned in the final
/// order. Throws CampaignError when a target filter matches nothing.
std::vector<FaultEvent> schedule_campaign(const CampaignSpec& spec, std::uint64_t seed,
                                          const SystemConfig& config, const ThreadCatalog& threads);

/// Shared main memory as seen by fault injection and the scrubber. Upsets
/// manifest lazily: only when the owning replica reads its segment.
class MemorySubsystem {
 public:
  struct Upset {
    FaultId fault = 0;
    TileId tile = 0;
    ThreadId thread = 0;
    std::uint32_t word = 0;
    std::uint32_t bit = 0;
    Tick onset = 0;
    std::optional<Tick> scrubbed_at;
  };

  void flag(const Upset& upset) { upsets_.push_back(upset); }

  /// Corrects every pending upset; returns how many were newly corrected.
  std::size_t scrub(Tick now, Tick retain_for);

  /// Upsets of `tile` that a read at `read_time` observes (onset before the
  /// read, not scrubbed before it). Upsets with onset at or before the read
  /// are consumed either way.
  std::vector<Upset> take_manifesting(TileId tile, Tick read_time);

  std::size_t pending() const;

 private:
  std::vector<Upset> upsets_;
};

struct InjectionRecord {
  bool applied = false;
  std::string note;
};

/// Applies fault effects to tiles and memory.
class FaultInjector {
 public:
  static InjectionRecord inject(const FaultEvent& event, Tile& tile, MemorySubsystem& memory);
};

}  // namespace obcsim
