#include "obcsim/mapper.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <numeric>

namespace obcsim::mapping {

namespace {

std::uint32_t level_count(std::span<const ThreadSpec> threads) {
  std::uint32_t levels = 0;
  for (const auto& t : threads) levels = std::max(levels, t.criticality + 1);
  return levels;
}

std::vector<const ThreadSpec*> service_order(std::span<const ThreadSpec> threads) {
  std::vector<const ThreadSpec*> order;
  for (const auto& t : threads) order.push_back(&t);
  std::sort(order.begin(), order.end(), [](const ThreadSpec* a, const ThreadSpec* b) {
    return a->criticality != b->criticality ? a->criticality < b->criticality : a->id < b->id;
  });
  return order;
}

const ThreadSpec& spec_of(std::span<const ThreadSpec> threads, ThreadId id) {
  for (const auto& t : threads) {
    if (t.id == id) return t;
  }
  throw InvalidMappingError("mapping references unknown thread " + std::to_string(id));
}

void add_replica(ThreadMapping& m, ThreadId thread, TileId tile) {
  auto& tiles = m.placements[thread];
  tiles.insert(std::upper_bound(tiles.begin(), tiles.end(), tile), tile);
}

void remove_replica(ThreadMapping& m, ThreadId thread, TileId tile) {
  auto& tiles = m.placements[thread];
  tiles.erase(std::remove(tiles.begin(), tiles.end(), tile), tiles.end());
}

bool hosts(const ThreadMapping& m, ThreadId thread, TileId tile) {
  auto it = m.placements.find(thread);
  return it != m.placements.end() &&
         std::binary_search(it->second.begin(), it->second.end(), tile);
}

// Exact branch-and-bound over replica counts per tile-load class. Tiles with
// equal load are interchangeable for every later thread, so only the number
// taken from each class is branched on.
class ImprovementSearch {
 public:
  ImprovementSearch(std::vector<const ThreadSpec*> order, std::size_t tile_count,
                    std::uint32_t capacity, std::uint32_t levels, std::uint64_t budget)
      : order_(std::move(order)),
        capacity_(capacity),
        budget_(budget),
        loads_(tile_count, 0),
        current_(order_.size()),
        prefix_(levels, 0) {}

  void seed(std::vector<std::vector<std::size_t>> placement, SatisfactionVector value) {
    best_ = std::move(placement);
    best_value_ = std::move(value);
  }

  void run() {
    root_bound_ = bound(0);
    if (best_value_ == root_bound_) return;
    dfs(0);
  }

  const std::vector<std::vector<std::size_t>>& best() const { return best_; }

 private:
  SatisfactionVector bound(std::size_t from) const {
    SatisfactionVector b = prefix_;
    std::uint64_t free_total = 0;
    for (auto l : loads_) free_total += capacity_ - l;
    std::vector<std::vector<std::uint32_t>> slots(b.size());
    for (std::size_t j = from; j < order_.size(); ++j) {
      const auto* t = order_[j];
      std::uint32_t fits = 0;
      for (auto l : loads_) fits += (l + t->load <= capacity_) ? 1 : 0;
      const auto cap = std::min(t->required_replication, fits);
      for (std::uint32_t k = 0; k < cap; ++k) slots[t->criticality].push_back(t->load);
    }
    for (std::size_t level = 0; level < b.size(); ++level) {
      auto& s = slots[level];
      std::sort(s.begin(), s.end());
      std::uint64_t used = 0;
      for (auto load : s) {
        if (used + load > free_total) break;
        used += load;
        ++b[level];
      }
    }
    return b;
  }

  void dfs(std::size_t i) {
    if (done_ || nodes_ >= budget_) return;
    ++nodes_;
    if (i == order_.size()) {
      if (lex_less(best_value_, prefix_)) {
        best_value_ = prefix_;
        best_ = current_;
        if (best_value_ == root_bound_) done_ = true;
      }
      return;
    }
    if (!lex_less(best_value_, bound(i))) return;

    const auto* t = order_[i];
    std::map<std::uint32_t, std::vector<std::size_t>> classes;
    for (std::size_t k = 0; k < loads_.size(); ++k) {
      if (loads_[k] + t->load <= capacity_) classes[loads_[k]].push_back(k);
    }
    std::vector<std::vector<std::size_t>> groups;
    std::size_t eligible = 0;
    for (auto& [load, members] : classes) {
      eligible += members.size();
      groups.push_back(std::move(members));
    }
    const auto want = std::min<std::size_t>(t->required_replication, eligible);
    for (std::size_t k = want + 1; k-- > 0;) {
      choose(i, groups, 0, k);
      if (done_ || nodes_ >= budget_) return;
    }
  }

  void choose(std::size_t i, const std::vector<std::vector<std::size_t>>& groups, std::size_t g,
              std::size_t remaining) {
    if (remaining == 0) {
      const auto* t = order_[i];
      for (auto k : current_[i]) loads_[k] += t->load;
      prefix_[t->criticality] += static_cast<std::uint32_t>(current_[i].size());
      dfs(i + 1);
      prefix_[t->criticality] -= static_cast<std::uint32_t>(current_[i].size());
      for (auto k : current_[i]) loads_[k] -= t->load;
      return;
    }
    if (g == groups.size()) return;
    std::size_t rest = 0;
    for (auto h = g + 1; h < groups.size(); ++h) rest += groups[h].size();
    const auto take_max = std::min(remaining, groups[g].size());
    const auto take_min = remaining > rest ? remaining - rest : 0;
    for (auto take = take_max + 1; take-- > take_min;) {
      for (std::size_t k = 0; k < take; ++k) current_[i].push_back(groups[g][k]);
      choose(i, groups, g + 1, remaining - take);
      current_[i].resize(current_[i].size() - take);
      if (done_ || nodes_ >= budget_) return;
    }
  }

  std::vector<const ThreadSpec*> order_;
  std::uint32_t capacity_;
  std::uint64_t budget_;
  std::vector<std::uint32_t> loads_;
  std::vector<std::vector<std::size_t>> current_;
  SatisfactionVector prefix_;
  std::vector<std::vector<std::size_t>> best_;
  SatisfactionVector best_value_;
  SatisfactionVector root_bound_;
  std::uint64_t nodes_ = 0;
  bool done_ = false;
};

void repair_dominance(ThreadMapping& m, std::span<const ThreadSpec> threads, std::uint32_t capacity) {
  while (auto v = find_dominance_violation(m, threads, capacity)) {
    remove_replica(m, v->lower, v->tile);
    add_replica(m, v->higher, v->tile);
  }
}

std::map<TileId, std::uint32_t> tile_loads(const ThreadMapping& m, std::span<const ThreadSpec> threads) {
  std::map<TileId, std::uint32_t> loads;
  for (auto tile : m.tiles) loads[tile] = 0;
  for (const auto& [thread, tiles] : m.placements) {
    const auto load = spec_of(threads, thread).load;
    for (auto tile : tiles) loads[tile] += load;
  }
  return loads;
}

// Adds replicas of the most critical threads beyond their requirement while
// capacity allows, up to one per tile.
void raise_top_replication(ThreadMapping& m, std::span<const ThreadSpec> threads,
                           std::uint32_t capacity) {
  if (threads.empty()) return;
  auto order = service_order(threads);
  const auto top = order.front()->criticality;
  auto loads = tile_loads(m, threads);
  for (const auto* t : order) {
    if (t->criticality != top) break;
    for (;;) {
      std::optional<TileId> pick;
      for (auto tile : m.tiles) {
        if (hosts(m, t->id, tile) || loads[tile] + t->load > capacity) continue;
        if (!pick || loads[tile] < loads[*pick]) pick = tile;
      }
      if (!pick) break;
      add_replica(m, t->id, *pick);
      loads[*pick] += t->load;
    }
  }
}

// Moves single-replica threads to the least-loaded tile when that lowers the
// load they share.
void spread_single_replicas(ThreadMapping& m, std::span<const ThreadSpec> threads,
                            std::uint32_t capacity) {
  auto loads = tile_loads(m, threads);
  for (const auto* t : service_order(threads)) {
    auto it = m.placements.find(t->id);
    if (it == m.placements.end() || it->second.size() != 1) continue;
    const auto from = it->second.front();
    std::optional<TileId> to;
    for (auto tile : m.tiles) {
      if (tile == from || loads[tile] + t->load > capacity) continue;
      if (!to || loads[tile] < loads[*to]) to = tile;
    }
    if (to && loads[*to] + t->load < loads[from]) {
      remove_replica(m, t->id, from);
      add_replica(m, t->id, *to);
      loads[from] -= t->load;
      loads[*to] += t->load;
    }
  }
}

// Empties lightly loaded tiles by moving their replicas onto the fullest
// tiles that can take them, then gates every empty tile.
void consolidate_and_gate(ThreadMapping& m, std::span<const ThreadSpec> threads,
                          std::uint32_t capacity) {
  for (bool changed = true; changed;) {
    changed = false;
    auto loads = tile_loads(m, threads);
    std::vector<TileId> candidates;
    for (auto [tile, load] : loads) {
      if (load > 0) candidates.push_back(tile);
    }
    std::sort(candidates.begin(), candidates.end(), [&](TileId a, TileId b) {
      return loads[a] != loads[b] ? loads[a] < loads[b] : a > b;
    });
    for (auto victim : candidates) {
      ThreadMapping trial = m;
      auto trial_loads = loads;
      bool ok = true;
      for (auto thread : m.threads_on(victim)) {
        const auto load = spec_of(threads, thread).load;
        std::optional<TileId> dest;
        for (auto tile : m.tiles) {
          if (tile == victim || trial_loads[tile] == 0 || hosts(trial, thread, tile) ||
              trial_loads[tile] + load > capacity) {
            continue;
          }
          if (!dest || trial_loads[tile] > trial_loads[*dest]) dest = tile;
        }
        if (!dest) {
          ok = false;
          break;
        }
        remove_replica(trial, thread, victim);
        add_replica(trial, thread, *dest);
        trial_loads[victim] -= load;
        trial_loads[*dest] += load;
      }
      if (ok) {
        m = std::move(trial);
        changed = true;
        break;
      }
    }
  }
  m.gated.clear();
  for (auto [tile, load] : tile_loads(m, threads)) {
    if (load == 0) m.gated.insert(tile);
  }
}

constexpr double kDominantWeight = 0.5;

}  // namespace

std::uint32_t ThreadMapping::replicas_of(ThreadId thread) const {
  auto it = placements.find(thread);
  return it == placements.end() ? 0 : static_cast<std::uint32_t>(it->second.size());
}

std::vector<ThreadId> ThreadMapping::threads_on(TileId tile) const {
  std::vector<ThreadId> out;
  for (const auto& [thread, tiles] : placements) {
    if (std::binary_search(tiles.begin(), tiles.end(), tile)) out.push_back(thread);
  }
  return out;
}

std::uint32_t ThreadMapping::load_on(TileId tile, std::span<const ThreadSpec> threads) const {
  std::uint32_t load = 0;
  for (auto thread : threads_on(tile)) load += spec_of(threads, thread).load;
  return load;
}

bool ThreadMapping::uses(TileId tile) const {
  for (const auto& [thread, tiles] : placements) {
    if (std::binary_search(tiles.begin(), tiles.end(), tile)) return true;
  }
  return false;
}

bool lex_less(const SatisfactionVector& a, const SatisfactionVector& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

SatisfactionVector satisfaction_vector(const ThreadMapping& mapping,
                                       std::span<const ThreadSpec> threads) {
  SatisfactionVector v(level_count(threads), 0);
  for (const auto& t : threads) {
    v[t.criticality] += std::min(mapping.replicas_of(t.id), t.required_replication);
  }
  return v;
}

std::optional<Transfer> find_dominance_violation(const ThreadMapping& mapping,
                                                 std::span<const ThreadSpec> threads,
                                                 std::uint32_t capacity) {
  const auto loads = tile_loads(mapping, threads);
  for (const auto* high : service_order(threads)) {
    if (mapping.replicas_of(high->id) >= high->required_replication) continue;
    for (const auto* low : service_order(threads)) {
      if (low->criticality <= high->criticality) continue;
      auto it = mapping.placements.find(low->id);
      if (it == mapping.placements.end()) continue;
      for (auto tile : it->second) {
        if (hosts(mapping, high->id, tile)) continue;
        if (loads.at(tile) - low->load + high->load <= capacity) {
          return Transfer{high->id, low->id, tile};
        }
      }
    }
  }
  return std::nullopt;
}

ThreadMapping compute_mapping(std::span<const TileId> healthy_tiles,
                              std::span<const ThreadSpec> threads, const ObjectiveWeights& weights,
                              const MapperOptions& options) {
  if (healthy_tiles.empty()) throw TotalLossError();

  std::vector<TileId> tiles(healthy_tiles.begin(), healthy_tiles.end());
  std::sort(tiles.begin(), tiles.end());
  tiles.erase(std::unique(tiles.begin(), tiles.end()), tiles.end());
  const auto order = service_order(threads);
  const auto capacity = options.capacity;

  // Greedy construction: least-loaded tiles first, ties by tile id.
  std::vector<std::uint32_t> loads(tiles.size(), 0);
  std::vector<std::vector<std::size_t>> greedy(order.size());
  SatisfactionVector greedy_value(level_count(threads), 0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto* t = order[i];
    std::vector<std::size_t> candidates(tiles.size());
    std::iota(candidates.begin(), candidates.end(), 0);
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](std::size_t a, std::size_t b) { return loads[a] < loads[b]; });
    for (auto k : candidates) {
      if (greedy[i].size() >= t->required_replication) break;
      if (loads[k] + t->load > capacity) continue;
      greedy[i].push_back(k);
      loads[k] += t->load;
    }
    greedy_value[t->criticality] += static_cast<std::uint32_t>(greedy[i].size());
  }

  ImprovementSearch search(order, tiles.size(), capacity, level_count(threads),
                           options.search_budget);
  search.seed(greedy, greedy_value);
  search.run();

  ThreadMapping mapping;
  mapping.tiles = tiles;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& placed = mapping.placements[order[i]->id];
    for (auto k : search.best()[i]) placed.push_back(tiles[k]);
    std::sort(placed.begin(), placed.end());
  }
  repair_dominance(mapping, threads, capacity);

  if (weights.robustness() >= kDominantWeight) raise_top_replication(mapping, threads, capacity);
  if (weights.performance() >= kDominantWeight) spread_single_replicas(mapping, threads, capacity);
  if (weights.energy() >= kDominantWeight && weights.energy() > weights.performance()) {
    consolidate_and_gate(mapping, threads, capacity);
  }
  return mapping;
}

MappingScore score_mapping(const ThreadMapping& mapping, std::span<const ThreadSpec> threads,
                           const ObjectiveWeights& weights, std::span<const TileId> defunct_tiles) {
  for (auto tile : defunct_tiles) {
    if (mapping.uses(tile)) {
      throw InvalidMappingError("mapping places replicas on defunct tile " + std::to_string(tile));
    }
  }
  MappingScore score;
  score.satisfaction = satisfaction_vector(mapping, threads);

  double robust_num = 0, robust_den = 0, perf_num = 0, perf_den = 0;
  for (const auto& t : threads) {
    const auto achieved = std::min(mapping.replicas_of(t.id), t.required_replication);
    score.achieved[t.id] = achieved;
    score.placed_workload += std::uint64_t{achieved} * t.load;
    const double w = std::ldexp(1.0, -static_cast<int>(t.criticality));
    robust_num += w * achieved / t.required_replication;
    robust_den += w;
    perf_num += static_cast<double>(achieved) * t.load;
    perf_den += static_cast<double>(t.required_replication) * t.load;
  }
  for (auto tile : mapping.tiles) {
    if (!mapping.gated.contains(tile) && mapping.uses(tile)) ++score.active_tiles;
  }
  score.robustness = robust_den > 0 ? robust_num / robust_den : 1.0;
  score.performance = perf_den > 0 ? perf_num / perf_den : 0.0;
  score.energy = mapping.tiles.empty()
                     ? 1.0
                     : 1.0 - static_cast<double>(score.active_tiles) / mapping.tiles.size();
  score.scalar = weights.performance() * score.performance + weights.energy() * score.energy +
                 weights.robustness() * score.robustness;
  return score;
}

OracleResult oracle_exhaustive(std::span<const TileId> healthy_tiles,
                               std::span<const ThreadSpec> threads, std::uint32_t capacity) {
  if (healthy_tiles.size() > 4 || threads.size() > 5) {
    throw std::invalid_argument("oracle_exhaustive: instance too large (max 4 tiles, 5 threads)");
  }
  std::vector<TileId> tiles(healthy_tiles.begin(), healthy_tiles.end());
  std::sort(tiles.begin(), tiles.end());
  const auto n = tiles.size();
  const auto levels = level_count(threads);
  std::vector<const ThreadSpec*> list;
  for (const auto& t : threads) list.push_back(&t);

  // Best suffix value keyed on (thread index, sorted tile loads): every
  // feasible subset choice is visited once per distinct key.
  std::map<std::pair<std::size_t, std::vector<std::uint32_t>>, SatisfactionVector> memo;
  auto add = [](SatisfactionVector a, const SatisfactionVector& b) {
    for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
    return a;
  };
  auto apply_subset = [&](std::vector<std::uint32_t> loads, unsigned subset, std::uint32_t load)
      -> std::optional<std::vector<std::uint32_t>> {
    for (std::size_t k = 0; k < n; ++k) {
      if (!(subset & (1u << k))) continue;
      loads[k] += load;
      if (loads[k] > capacity) return std::nullopt;
    }
    return loads;
  };
  auto sorted = [](std::vector<std::uint32_t> v) {
    std::sort(v.begin(), v.end());
    return v;
  };

  std::function<SatisfactionVector(std::size_t, const std::vector<std::uint32_t>&)> best =
      [&](std::size_t i, const std::vector<std::uint32_t>& loads) -> SatisfactionVector {
    if (i == list.size()) return SatisfactionVector(levels, 0);
    auto key = std::make_pair(i, sorted(loads));
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const auto* t = list[i];
    SatisfactionVector top;
    bool have = false;
    for (unsigned subset = 0; subset < (1u << n); ++subset) {
      const auto count = static_cast<std::uint32_t>(std::popcount(subset));
      if (count > t->required_replication) continue;
      auto next = apply_subset(loads, subset, t->load);
      if (!next) continue;
      SatisfactionVector gain(levels, 0);
      gain[t->criticality] = count;
      auto value = add(gain, best(i + 1, sorted(*next)));
      if (!have || lex_less(top, value)) {
        top = std::move(value);
        have = true;
      }
    }
    memo.emplace(std::move(key), top);
    return top;
  };

  OracleResult result;
  result.mapping.tiles = tiles;
  std::vector<std::uint32_t> loads(n, 0);
  result.satisfaction = best(0, loads);
  SatisfactionVector so_far(levels, 0);
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto* t = list[i];
    const auto target = best(i, loads);
    for (unsigned subset = 0; subset < (1u << n); ++subset) {
      const auto count = static_cast<std::uint32_t>(std::popcount(subset));
      if (count > t->required_replication) continue;
      auto next = apply_subset(loads, subset, t->load);
      if (!next) continue;
      SatisfactionVector gain(levels, 0);
      gain[t->criticality] = count;
      if (add(gain, best(i + 1, sorted(*next))) != target) continue;
      auto& placed = result.mapping.placements[t->id];
      for (std::size_t k = 0; k < n; ++k) {
        if (subset & (1u << k)) placed.push_back(tiles[k]);
      }
      loads = *next;
      break;
    }
  }
  return result;
}

}  // namespace obcsim::mapping
