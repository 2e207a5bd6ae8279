#include "obcsim/faults.hpp"

#include <algorithm>
#include <numeric>

#include "obcsim/rng.hpp"

namespace obcsim {

namespace {

bool needs_thread(FaultKind kind) {
  return kind == FaultKind::TransientStateFlip || kind == FaultKind::MemoryUpset ||
         kind == FaultKind::ChecksumCorruption;
}

template <typename T>
std::vector<T> filtered(const std::vector<T>& filter, const std::vector<T>& universe) {
  if (filter.empty()) return universe;
  std::vector<T> out;
  for (const auto& v : filter) {
    if (std::find(universe.begin(), universe.end(), v) != universe.end()) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

std::vector<FaultEvent> schedule_campaign(const CampaignSpec& spec, std::uint64_t seed,
                                          const SystemConfig& config, const ThreadCatalog& threads) {
  std::vector<TileId> all_tiles(config.tile_count);
  std::iota(all_tiles.begin(), all_tiles.end(), 0);
  std::vector<ThreadId> all_threads;
  for (const auto& t : threads.all()) all_threads.push_back(t.id);
  std::vector<RegionId> all_regions(config.region_count);
  std::iota(all_regions.begin(), all_regions.end(), 0);

  std::vector<FaultEvent> out;
  for (const auto& e : spec.events) {
    if (e.target.tile >= config.tile_count) {
      throw CampaignError("fault targets tile " + std::to_string(e.target.tile) +
                          " outside the system");
    }
    if (e.target.thread && !threads.find(*e.target.thread)) {
      throw CampaignError("fault targets unknown thread " + std::to_string(*e.target.thread));
    }
    if (needs_thread(e.kind) && e.kind != FaultKind::ChecksumCorruption && !e.target.thread) {
      throw CampaignError(std::string(to_string(e.kind)) + " fault needs a target thread");
    }
    if (e.kind == FaultKind::PermanentRegionFault &&
        (!e.target.region || *e.target.region >= config.region_count)) {
      throw CampaignError("PermanentRegionFault needs a region below region_count");
    }
    out.push_back(e);
  }

  for (std::size_t g = 0; g < spec.generators.size(); ++g) {
    const auto& gen = spec.generators[g];
    const auto tiles = filtered(gen.tiles, all_tiles);
    const auto thread_ids = filtered(gen.threads, all_threads);
    const auto regions = filtered(gen.regions, all_regions);
    if (tiles.empty()) throw CampaignError("fault generator tile filter matches nothing");
    if (needs_thread(gen.kind) && thread_ids.empty()) {
      throw CampaignError("fault generator thread filter matches nothing");
    }
    if (gen.kind == FaultKind::PermanentRegionFault && regions.empty()) {
      throw CampaignError("fault generator region filter matches nothing");
    }

    Rng rng(mix_seed(seed, g));
    const Tick begin = gen.start;
    const Tick end = gen.end.value_or(config.end_time());
    std::vector<Tick> onsets;
    if (gen.distribution == FaultDistribution::Poisson) {
      if (gen.rate > 0) {
        const double per_tick = gen.rate / static_cast<double>(config.checkpoint_interval);
        double t = static_cast<double>(begin);
        for (;;) {
          t += rng.exponential(per_tick);
          if (t >= static_cast<double>(end)) break;
          onsets.push_back(static_cast<Tick>(t));
        }
      }
    } else if (end > begin) {
      for (std::uint32_t k = 0; k < gen.count; ++k) {
        onsets.push_back(begin + static_cast<Tick>(rng.below(static_cast<std::uint64_t>(end - begin))));
      }
      std::sort(onsets.begin(), onsets.end());
    }

    for (auto onset : onsets) {
      FaultEvent e;
      e.onset = onset;
      e.kind = gen.kind;
      e.persistence = gen.kind == FaultKind::PermanentRegionFault ? Persistence::Permanent
                                                                    : gen.persistence;
      e.target.tile = tiles[rng.below(tiles.size())];
      if (needs_thread(gen.kind)) {
        const auto thread = thread_ids[rng.below(thread_ids.size())];
        e.target.thread = thread;
        e.target.word = static_cast<std::uint32_t>(rng.below(std::max(1u, threads.at(thread).state_words)));
      }
      e.target.bit = static_cast<std::uint32_t>(rng.below(32));
      if (gen.kind == FaultKind::PermanentRegionFault) e.target.region = regions[rng.below(regions.size())];
      out.push_back(e);
    }
  }

  std::stable_sort(out.begin(), out.end(),
                   [](const FaultEvent& a, const FaultEvent& b) { return a.onset < b.onset; });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].id = static_cast<FaultId>(i);
  return out;
}

std::size_t MemorySubsystem::scrub(Tick now, Tick retain_for) {
  std::size_t corrected = 0;
  for (auto& u : upsets_) {
    if (!u.scrubbed_at && u.onset <= now) {
      u.scrubbed_at = now;
      ++corrected;
    }
  }
  // Keep corrected upsets long enough to settle read-versus-scrub races.
  std::erase_if(upsets_, [&](const Upset& u) { return u.scrubbed_at && *u.scrubbed_at + retain_for < now; });
  return corrected;
}

std::vector<MemorySubsystem::Upset> MemorySubsystem::take_manifesting(TileId tile, Tick read_time) {
  std::vector<Upset> out;
  std::erase_if(upsets_, [&](const Upset& u) {
    if (u.tile != tile || u.onset > read_time) return false;
    if (!u.scrubbed_at || *u.scrubbed_at > read_time) out.push_back(u);
    return true;
  });
  return out;
}

std::size_t MemorySubsystem::pending() const {
  return static_cast<std::size_t>(
      std::count_if(upsets_.begin(), upsets_.end(), [](const Upset& u) { return !u.scrubbed_at; }));
}

InjectionRecord FaultInjector::inject(const FaultEvent& event, Tile& tile, MemorySubsystem& memory) {
  if (tile.health() == TileHealth::Defunct) return {false, "tile defunct"};
  auto& fx = tile.effects_;
  const bool permanent = event.persistence == Persistence::Permanent;
  const auto& target = event.target;
  switch (event.kind) {
    case FaultKind::TransientStateFlip:
      if (!target.thread || !tile.holds(*target.thread)) return {false, "thread not held"};
      if (permanent) {
        fx.stuck_bits.push_back({*target.thread, target.word, target.bit});
      } else {
        tile.flip_bit(*target.thread, target.word, target.bit);
      }
      return {true, ""};
    case FaultKind::ChecksumCorruption: {
      const auto corruption = std::make_pair(target.thread, Checksum{1u} << (target.bit % 32));
      (permanent ? fx.checksum_corruption_permanent : fx.checksum_corruption_once) = corruption;
      return {true, ""};
    }
    case FaultKind::Hang:
      fx.hung = true;
      fx.hang_permanent = fx.hang_permanent || permanent;
      return {true, ""};
    case FaultKind::PermanentRegionFault:
      if (!target.region) return {false, "no region"};
      fx.defective_regions |= region_bit(*target.region);
      return {true, ""};
    case FaultKind::MemoryUpset:
      if (!target.thread) return {false, "no thread"};
      memory.flag({event.id, tile.id(), *target.thread, target.word, target.bit, event.onset, std::nullopt});
      return {true, ""};
    case FaultKind::BabblingTile:
      fx.babbling = true;
      fx.babbling_permanent = fx.babbling_permanent || permanent;
      return {true, ""};
  }
  return {false, "unknown kind"};
}

}  // namespace obcsim
