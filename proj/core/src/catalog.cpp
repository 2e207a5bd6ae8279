#include "obcsim/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "obcsim/rng.hpp"

namespace obcsim {

ThreadCatalog::ThreadCatalog(std::vector<ThreadSpec> threads) : threads_(std::move(threads)) {
  std::sort(threads_.begin(), threads_.end(),
            [](const ThreadSpec& a, const ThreadSpec& b) { return a.id < b.id; });
}

const ThreadSpec* ThreadCatalog::find(ThreadId id) const {
  auto it = std::lower_bound(threads_.begin(), threads_.end(), id,
                             [](const ThreadSpec& t, ThreadId v) { return t.id < v; });
  if (it == threads_.end() || it->id != id) return nullptr;
  return &*it;
}

const ThreadSpec& ThreadCatalog::at(ThreadId id) const {
  const auto* spec = find(id);
  if (!spec) throw std::out_of_range("unknown thread id " + std::to_string(id));
  return *spec;
}

std::vector<ConfigurationVariant> make_variants(const SystemConfig& config, TileId tile) {
  std::vector<ConfigurationVariant> out;
  if (!config.variants.empty()) {
    for (VariantId v = 0; v < config.variants.size(); ++v) {
      RegionMask mask = 0;
      for (auto r : config.variants[v]) mask |= region_bit(r);
      out.push_back({v, mask});
    }
    return out;
  }

  const auto regions = config.region_count;
  const auto per_variant = static_cast<std::uint32_t>(
      std::ceil(config.variant_region_fraction * regions - 1e-9));
  // Number of distinct subsets bounds how many variants can differ.
  double distinct = 1.0;
  for (std::uint32_t i = 0; i < per_variant; ++i) distinct = distinct * (regions - i) / (i + 1);

  Rng rng(mix_seed(config.rng_seed, 0x7A51ull + tile));
  std::vector<RegionId> pool(regions);
  for (VariantId v = 0; v < config.variant_count; ++v) {
    RegionMask mask = 0;
    for (;;) {
      std::iota(pool.begin(), pool.end(), 0);
      mask = 0;
      for (std::uint32_t i = 0; i < per_variant; ++i) {
        auto j = i + rng.below(regions - i);
        std::swap(pool[i], pool[j]);
        mask |= region_bit(pool[i]);
      }
      bool duplicate = std::any_of(out.begin(), out.end(),
                                   [&](const ConfigurationVariant& c) { return c.regions == mask; });
      if (!duplicate || out.size() >= distinct) break;
    }
    out.push_back({v, mask});
  }
  return out;
}

}  // namespace obcsim
