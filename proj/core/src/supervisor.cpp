#include "obcsim/supervisor.hpp"

#include <algorithm>

namespace obcsim {

namespace {

bool subset_of(const std::vector<ThreadId>& a, const std::vector<ThreadId>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

std::vector<ThreadId> merged(const std::vector<ThreadId>& a, const std::vector<ThreadId>& b) {
  std::vector<ThreadId> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

Supervisor::Supervisor(const SystemConfig& config, const ThreadCatalog& catalog, SupervisorPort& port,
                       ObjectiveWeights weights)
    : config_(&config), catalog_(&catalog), port_(&port), weights_(weights) {
  state_.fault_counters.assign(config.tile_count, 0);
  for (const auto& t : catalog.all()) required_[t.id] = t.required_replication;
}

void Supervisor::initialize(const mapping::ThreadMapping& mapping, const std::set<TileId>& spares) {
  mapping_ = mapping;
  state_.spare_pool = spares;
  for (auto t : mapping.tiles) {
    if (!spares.contains(t)) state_.active.insert(t);
  }
  for (auto t : mapping.gated) {
    port_->tile(t).set_clock_enabled(false);
    state_.gated.insert(t);
  }
  for (auto t : spares) port_->tile(t).set_spare(true);
  update_stage3();
}

std::uint32_t Supervisor::required(ThreadId thread) const {
  auto it = required_.find(thread);
  return it == required_.end() ? 0 : it->second;
}

bool Supervisor::below_required() const {
  return std::any_of(required_.begin(), required_.end(), [&](const auto& entry) {
    return mapping_.replicas_of(entry.first) < entry.second;
  });
}

std::vector<ThreadSpec> Supervisor::effective_threads() const {
  std::vector<ThreadSpec> out(catalog_->all().begin(), catalog_->all().end());
  for (auto& t : out) t.required_replication = required(t.id);
  return out;
}

bool Supervisor::usable(TileId tile) const {
  if (!state_.active.contains(tile) || state_.operator_gated.contains(tile)) return false;
  const Tile& t = port_->tile(tile);
  return t.connected() && t.health() != TileHealth::Defunct && t.health() != TileHealth::Reconfiguring;
}

std::vector<TileId> Supervisor::usable_tiles() const {
  std::vector<TileId> out;
  for (auto t : state_.active) {
    if (usable(t)) out.push_back(t);
  }
  return out;
}

std::optional<TileId> Supervisor::source_for(ThreadId thread, const std::set<TileId>& excluded) const {
  auto eligible = [&](TileId t) {
    if (excluded.contains(t) || t >= port_->tile_count()) return false;
    const Tile& tile = port_->tile(t);
    return tile.holds(thread) && tile.running() && tile.connected();
  };
  if (auto it = last_good_.find(thread); it != last_good_.end() && eligible(it->second)) {
    return it->second;
  }
  auto placed = mapping_.placements.find(thread);
  if (placed == mapping_.placements.end()) return std::nullopt;
  for (auto t : placed->second) {
    if (eligible(t) && port_->tile(t).health() == TileHealth::Healthy) return t;
  }
  return std::nullopt;
}

void Supervisor::emit(std::string kind, std::optional<TileId> tile, Fields fields, TraceLevel level) {
  port_->trace({port_->now(), tile, std::move(kind), fields.take(), level});
}

void Supervisor::count_fault(TileId tile, std::string_view reason) {
  const auto value = ++state_.fault_counters[tile];
  port_->tile(tile).set_fault_counter(value);
  flagged_at_[tile] = port_->completed_seq();
  emit("counter", tile,
       std::move(Fields{}
                     .add("value", value)
                     .add("threshold", config_->fault_counter_threshold)
                     .add("reason", reason)));
}

void Supervisor::handle_disagreement(std::span<const MajorityDecision> decisions) {
  std::map<TileId, Flag> flags;
  std::map<ThreadId, TileId> sources;

  for (const auto& d : decisions) {
    for (auto t : d.missing) flags[t].missing = true;
    if (!d.undecidable) {
      if (!d.agreeing.empty()) {
        sources[d.thread] = *d.agreeing.begin();
        last_good_[d.thread] = *d.agreeing.begin();
      }
      for (auto t : d.dissenting) flags[t].dissent.insert(d.thread);
      continue;
    }
    if (d.reported.empty()) continue;

    // No majority: the self-test picks which reporters are trusted.
    std::set<TileId> passing;
    for (const auto& [t, sum] : d.reported) {
      const auto result = port_->tile(t).run_self_test(port_->rng(), config_->selftest_detection_probability);
      emit("self_test", t,
           std::move(Fields{}.add("thread", d.thread).add("pass", result.pass).list("detected", regions_of(result.detected))));
      if (result.pass) passing.insert(t);
    }
    std::vector<TileId> pool;
    for (const auto& [t, sum] : d.reported) {
      if (passing.empty() || passing.contains(t)) pool.push_back(t);
    }
    std::map<Checksum, std::pair<std::size_t, TileId>> tally;  // value -> (holders, lowest holder)
    for (auto t : pool) {
      auto [it, fresh] = tally.try_emplace(d.reported.at(t), 0, t);
      ++it->second.first;
      it->second.second = std::min(it->second.second, t);
    }
    auto best = tally.begin();
    for (auto it = tally.begin(); it != tally.end(); ++it) {
      const auto& [count, lowest] = it->second;
      if (count > best->second.first || (count == best->second.first && lowest < best->second.second)) {
        best = it;
      }
    }
    const Checksum value = best->first;
    const TileId survivor = best->second.second;
    sources[d.thread] = survivor;
    last_good_[d.thread] = survivor;
    emit("survivor", survivor,
         std::move(Fields{}.add("thread", d.thread).add("checksum", value).list("passing", passing)));
    for (const auto& [t, sum] : d.reported) {
      if (sum != value) flags[t].dissent.insert(d.thread);
    }
  }

  std::vector<TileId> to_replace;
  for (const auto& [tile, flag] : flags) {
    if (!state_.active.contains(tile)) continue;
    count_fault(tile, flag.missing ? "missing" : "dissent");
    if (state_.fault_counters[tile] >= config_->fault_counter_threshold) {
      to_replace.push_back(tile);
    } else {
      recover_in_place(tile, flag, sources);
    }
  }
  for (auto tile : to_replace) replace_with_spare(tile);
}

void Supervisor::recover_in_place(TileId tile, const Flag& flag,
                                  const std::map<ThreadId, TileId>& sources) {
  port_->tile(tile).set_health(TileHealth::Suspected);
  auto source = [&](ThreadId thread) -> std::optional<TileId> {
    if (auto it = sources.find(thread); it != sources.end() && it->second != tile) return it->second;
    return source_for(thread, {tile});
  };
  if (flag.missing) {
    port_->send(tile, Reboot{});
    port_->send(tile, AdjustMapping{mapping_.threads_on(tile)});
    emit("reboot", tile, Fields{});
    for (auto thread : mapping_.threads_on(tile)) resync(tile, thread, source(thread));
  } else {
    for (auto thread : flag.dissent) resync(tile, thread, source(thread));
  }
}

void Supervisor::resync(TileId tile, ThreadId thread, std::optional<TileId> source) {
  if (!catalog_->at(thread).resyncable()) return;
  if (!source || *source == tile) {
    emit("state_lost", tile, std::move(Fields{}.add("thread", thread)));
    port_->thread_state_lost(thread);
    return;
  }
  port_->send(tile, InduceStateUpdate{thread, *source});
}

std::vector<TileId> Supervisor::watchdog_check(Tick now) {
  std::vector<TileId> silent;
  for (TileId t = 0; t < port_->tile_count(); ++t) {
    if (!state_.active.contains(t) && !state_.spare_pool.contains(t)) continue;
    const Tile& tile = port_->tile(t);
    if (!tile.running() || state_.gated.contains(t)) continue;
    if (auto it = flagged_at_.find(t); it != flagged_at_.end() && it->second == port_->completed_seq()) continue;
    if (now - tile.last_report_time() <= config_->watchdog_timeout) continue;
    silent.push_back(t);
  }
  for (auto t : silent) {
    emit("watchdog", t, std::move(Fields{}.add("silent_for", now - port_->tile(t).last_report_time())));
    count_fault(t, "watchdog");
    if (state_.fault_counters[t] >= config_->fault_counter_threshold) {
      replace_with_spare(t);
    } else {
      recover_in_place(t, Flag{true, {}}, {});
    }
  }
  return silent;
}

std::size_t Supervisor::scrub_tick(MemorySubsystem& memory, Tick now) {
  const auto corrected = memory.scrub(now, 2 * config_->checkpoint_interval);
  if (corrected > 0) emit("scrub", std::nullopt, std::move(Fields{}.add("corrected", std::uint64_t{corrected})), TraceLevel::Normal);
  return corrected;
}

void Supervisor::replace_with_spare(TileId faulty) {
  emit("replace", faulty,
       std::move(Fields{}
                     .add("counter", state_.fault_counters[faulty])
                     .add("threshold", config_->fault_counter_threshold)));
  const bool was_spare = state_.spare_pool.erase(faulty) > 0;
  state_.active.erase(faulty);
  state_.gated.erase(faulty);
  state_.operator_gated.erase(faulty);
  port_->tile(faulty).set_connected(false);
  emit("disconnect", faulty, Fields{});

  std::optional<TileId> spare;
  if (!state_.spare_pool.empty()) spare = *state_.spare_pool.begin();

  if (!was_spare) {
    auto next = mapping_;
    for (auto& [thread, tiles] : next.placements) {
      auto it = std::find(tiles.begin(), tiles.end(), faulty);
      if (it == tiles.end()) continue;
      tiles.erase(it);
      if (spare) {
        tiles.push_back(*spare);
        std::sort(tiles.begin(), tiles.end());
      }
    }
    std::erase(next.tiles, faulty);
    next.gated.erase(faulty);
    if (spare) {
      state_.spare_pool.erase(*spare);
      state_.active.insert(*spare);
      Tile& s = port_->tile(*spare);
      s.set_spare(false);
      if (state_.gated.erase(*spare) > 0) {
        state_.operator_gated.erase(*spare);
        s.set_clock_enabled(true);
        s.boot({}, port_->completed_seq(), port_->now());
        s.set_fault_counter(state_.fault_counters[*spare]);
      }
      next.tiles.push_back(*spare);
      std::sort(next.tiles.begin(), next.tiles.end());
      emit("spare_activated", *spare, std::move(Fields{}.add("replaces", faulty)));
    }
    apply_mapping(next, {faulty}, spare ? "replacement" : "replacement_without_spare");
  }
  start_ladder(faulty);
  rebalance(spare ? "replacement" : "stage3", false);
}

void Supervisor::start_ladder(TileId tile) {
  Tile& t = port_->tile(tile);
  state_.fault_counters[tile] = 0;
  t.set_fault_counter(0);
  emit("counter", tile, std::move(Fields{}.add("value", 0).add("threshold", config_->fault_counter_threshold).add("reason", "reset")));
  auto [it, fresh] = state_.recovering.insert_or_assign(
      tile, RecoveryLadder(t.active_variant(), static_cast<std::uint32_t>(t.variants().size())));
  const auto step = it->second.current();
  emit("ladder_attempt", tile,
       std::move(Fields{}.add("step", to_string(step.kind)).add("variant", step.variant).add("attempt", it->second.partial_attempts())));
  port_->reconfigure(tile, step);
}

void Supervisor::on_reconfiguration_done(TileId tile) {
  auto it = state_.recovering.find(tile);
  if (it == state_.recovering.end()) return;
  Tile& t = port_->tile(tile);
  const auto result = t.run_self_test(port_->rng(), config_->selftest_detection_probability);
  emit("self_test", tile,
       std::move(Fields{}.add("variant", t.active_variant()).add("pass", result.pass).list("detected", regions_of(result.detected))));
  const LadderStep next = it->second.advance(result.pass);
  const auto partial = it->second.partial_attempts();
  const auto full = it->second.full_attempts();

  switch (next.kind) {
    case LadderStepKind::PartialReconfiguration:
    case LadderStepKind::FullReconfiguration:
      emit("ladder_attempt", tile,
           std::move(Fields{}.add("step", to_string(next.kind)).add("variant", next.variant).add("attempt", next.kind == LadderStepKind::FullReconfiguration ? full : partial)));
      port_->reconfigure(tile, next);
      return;
    case LadderStepKind::Recovered:
      state_.recovering.erase(it);
      emit("ladder_result", tile,
           std::move(Fields{}.add("result", "recovered").add("variant", t.active_variant()).add("partial_attempts", partial).add("full_attempts", full)));
      t.boot({}, port_->completed_seq(), port_->now());
      t.set_spare(true);
      t.set_connected(true);
      state_.fault_counters[tile] = 0;
      emit("reconnect", tile, Fields{});
      state_.spare_pool.insert(tile);
      rebalance("ladder_recovered", false);
      return;
    case LadderStepKind::Defunct:
      state_.recovering.erase(it);
      emit("ladder_result", tile,
           std::move(Fields{}.add("result", "defunct").add("variant", t.active_variant()).add("partial_attempts", partial).add("full_attempts", full)));
      t.mark_defunct();
      state_.defunct.insert(tile);
      update_stage3();
      return;
  }
}

void Supervisor::apply_mapping(const mapping::ThreadMapping& next, const std::set<TileId>& excluded,
                               std::string_view reason) {
  const auto old = mapping_;
  std::set<TileId> tiles(old.tiles.begin(), old.tiles.end());
  tiles.insert(next.tiles.begin(), next.tiles.end());
  for (const auto& [thread, on] : old.placements) tiles.insert(on.begin(), on.end());
  for (const auto& [thread, on] : next.placements) tiles.insert(on.begin(), on.end());
  for (auto t : excluded) tiles.erase(t);

  // Tiles that receive replicas must be clocked.
  for (auto t : tiles) {
    if (next.uses(t) && state_.gated.contains(t)) {
      state_.gated.erase(t);
      state_.operator_gated.erase(t);
      Tile& tile = port_->tile(t);
      tile.set_clock_enabled(true);
      tile.boot(old.threads_on(t), port_->completed_seq(), port_->now());
      tile.set_fault_counter(state_.fault_counters[t]);
      emit("ungate", t, Fields{});
    }
  }

  // Additions first, then state transfers, then removals.
  for (auto t : tiles) {
    const auto before = old.threads_on(t);
    const auto after = next.threads_on(t);
    if (!subset_of(after, before)) port_->send(t, AdjustMapping{merged(before, after)});
  }
  mapping_ = next;
  for (const auto& [thread, on] : next.placements) {
    auto previous = old.placements.find(thread);
    for (auto t : on) {
      if (excluded.contains(t)) continue;
      if (previous != old.placements.end() &&
          std::find(previous->second.begin(), previous->second.end(), t) != previous->second.end()) {
        continue;
      }
      std::optional<TileId> src;
      if (previous != old.placements.end()) {
        auto eligible = [&](TileId holder) {
          const Tile& h = port_->tile(holder);
          return holder != t && !excluded.contains(holder) && h.holds(thread) && h.running() &&
                 h.connected();
        };
        const auto& holders = previous->second;
        if (auto good = last_good_.find(thread);
            good != last_good_.end() && eligible(good->second) &&
            std::find(holders.begin(), holders.end(), good->second) != holders.end()) {
          src = good->second;
        }
        for (auto holder : holders) {
          if (src) break;
          if (eligible(holder)) src = holder;
        }
      }
      resync(t, thread, src);
    }
  }
  for (auto t : tiles) {
    const auto before = old.threads_on(t);
    const auto after = next.threads_on(t);
    if (!subset_of(before, after)) port_->send(t, AdjustMapping{after});
  }

  for (auto t : next.gated) {
    if (state_.gated.insert(t).second) {
      port_->tile(t).set_clock_enabled(false);
      emit("gate", t, std::move(Fields{}.add("by", "mapper")));
    }
  }

  Fields f;
  f.add("reason", reason).list("tiles", next.tiles);
  for (const auto& [thread, on] : next.placements) f.list("thread_" + std::to_string(thread), on);
  f.list("gated", state_.gated);
  emit("mapping", std::nullopt, std::move(f));
}

void Supervisor::remap(std::string_view reason) {
  const auto tiles = usable_tiles();
  mapping::ThreadMapping next;
  if (tiles.empty()) {
    emit("total_loss", std::nullopt, Fields{});
    for (const auto& t : catalog_->all()) next.placements[t.id] = {};
  } else {
    next = mapping::compute_mapping(tiles, effective_threads(), weights_, {config_->tile_capacity});
  }
  apply_mapping(next, {}, reason);
}

void Supervisor::rebalance(std::string_view reason, bool force) {
  bool remapped = false;
  while (below_required() && !state_.spare_pool.empty()) {
    const TileId spare = *state_.spare_pool.begin();
    state_.spare_pool.erase(spare);
    state_.active.insert(spare);
    Tile& s = port_->tile(spare);
    s.set_spare(false);
    if (state_.operator_gated.erase(spare) > 0) state_.gated.erase(spare);
    if (!s.clock_enabled()) {
      s.set_clock_enabled(true);
      s.boot({}, port_->completed_seq(), port_->now());
      s.set_fault_counter(state_.fault_counters[spare]);
    }
    emit("spare_activated", spare, std::move(Fields{}.add("reason", reason)));
    remap(reason);
    remapped = true;
  }
  if (!remapped && (force || below_required())) remap(below_required() ? "stage3" : reason);
  update_stage3();
}

void Supervisor::update_stage3() {
  const bool active = state_.spare_pool.empty() && below_required();
  if (active != state_.stage3_active) {
    state_.stage3_active = active;
    emit("stage3", std::nullopt, std::move(Fields{}.add("active", active)));
  }
}

void Supervisor::observe_round(std::span<const TileId> reporters,
                               std::span<const MajorityDecision> decisions) {
  std::set<TileId> flagged;
  for (const auto& d : decisions) {
    flagged.insert(d.missing.begin(), d.missing.end());
    flagged.insert(d.dissenting.begin(), d.dissenting.end());
    if (d.undecidable) {
      for (const auto& [t, sum] : d.reported) flagged.insert(t);
    } else if (d.clean() && !d.agreeing.empty()) {
      last_good_[d.thread] = *d.agreeing.begin();
    }
  }
  for (auto t : reporters) {
    Tile& tile = port_->tile(t);
    if (!flagged.contains(t) && tile.health() == TileHealth::Suspected) {
      tile.set_health(TileHealth::Healthy);
      emit("healthy", t, Fields{}, TraceLevel::Normal);
    }
  }
}

void Supervisor::set_weights(const ObjectiveWeights& weights) {
  weights_ = weights;
  rebalance("objective_weights", true);
}

void Supervisor::set_thread_replication(ThreadId thread, std::uint32_t replication) {
  required_[thread] = replication;
  rebalance("thread_replication", true);
}

bool Supervisor::gate_tile(TileId tile) {
  if (tile >= port_->tile_count() || state_.defunct.contains(tile) || state_.recovering.contains(tile)) {
    return false;
  }
  if (mapping_.uses(tile)) return false;
  state_.operator_gated.insert(tile);
  if (state_.gated.insert(tile).second) {
    port_->tile(tile).set_clock_enabled(false);
    emit("gate", tile, std::move(Fields{}.add("by", "operator")));
  }
  return true;
}

bool Supervisor::ungate_tile(TileId tile) {
  if (!state_.gated.contains(tile)) return false;
  state_.gated.erase(tile);
  state_.operator_gated.erase(tile);
  Tile& t = port_->tile(tile);
  t.set_clock_enabled(true);
  t.boot({}, port_->completed_seq(), port_->now());
  t.set_fault_counter(state_.fault_counters[tile]);
  emit("ungate", tile, Fields{});
  rebalance("ungate", false);
  return true;
}

}  // namespace obcsim
