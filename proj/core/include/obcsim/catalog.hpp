#pragma once

#include <span>
#include <vector>

#include "obcsim/types.hpp"

namespace obcsim {

/// Immutable lookup of thread specs, sorted by thread id.
class ThreadCatalog {
 public:
  ThreadCatalog() = default;
  explicit ThreadCatalog(std::vector<ThreadSpec> threads);

  const ThreadSpec* find(ThreadId id) const;
  const ThreadSpec& at(ThreadId id) const;
  std::span<const ThreadSpec> all() const { return threads_; }
  std::size_t size() const { return threads_.size(); }

 private:
  std::vector<ThreadSpec> threads_;
};

/// Region sets for each configuration variant of one tile. Explicit variants
/// from the config win; otherwise each variant uses a seeded subset of
/// ceil(variant_region_fraction * region_count) regions, distinct per variant
/// where the region count allows it.
std::vector<ConfigurationVariant> make_variants(const SystemConfig& config, TileId tile);

}  // namespace obcsim
