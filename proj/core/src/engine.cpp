#include "obcsim/engine.hpp"

#include <algorithm>

namespace obcsim {

namespace {

constexpr const char* kCounterNames[] = {
    "checkpoints",       "stalled_slots",     "decisions",          "disagreements",
    "sdc_decisions",     "unvoted_corruptions", "false_alarms",     "faults_injected",
    "replacements",      "spare_activations", "reboots",            "state_updates",
    "states_lost",       "ladder_attempts_partial", "ladder_attempts_full", "ladder_recovered",
    "ladder_defunct",    "stage3_activations", "watchdog_flags",    "scrub_corrections",
    "mapping_changes",   "operator_commands", "conservation_violations",
};

std::string fault_target_label(const FaultTarget& t) {
  std::string out = "tile" + std::to_string(t.tile);
  if (t.thread) out += "/thread" + std::to_string(*t.thread);
  if (t.region) out += "/region" + std::to_string(*t.region);
  return out;
}

}  // namespace

std::string RunResult::trace_text() const {
  std::string out = trace_header_line() + "\n";
  for (const auto& r : trace) out += format_trace_line(r) + "\n";
  return out;
}

Simulation::Simulation(Scenario scenario, RunOptions options)
    : scenario_(std::move(scenario)), options_(options), rng_(0) {
  if (options_.seed) scenario_.system.rng_seed = *options_.seed;
  if (auto errors = validate_scenario(scenario_); !errors.empty()) throw ScenarioError(std::move(errors));

  const auto& sys = scenario_.system;
  catalog_ = ThreadCatalog(scenario_.threads);
  rng_ = Rng(mix_seed(sys.rng_seed, 0x5EED));
  faults_ = schedule_campaign(scenario_.faults, sys.rng_seed, sys, catalog_);
  records_.resize(faults_.size());
  end_time_ = sys.end_time();
  for (const auto* name : kCounterNames) counters_[name] = 0;

  tiles_.reserve(sys.tile_count);
  for (TileId t = 0; t < sys.tile_count; ++t) tiles_.emplace_back(t, sys, catalog_, make_variants(sys, t));

  const auto spares = initial_spares(sys);
  std::vector<TileId> nominal;
  for (TileId t = 0; t < sys.tile_count; ++t) {
    if (std::find(spares.begin(), spares.end(), t) == spares.end()) nominal.push_back(t);
  }
  const auto weights = scenario_.weights.normalized();
  auto initial = mapping::compute_mapping(nominal, catalog_.all(), weights, {sys.tile_capacity});

  supervisor_.emplace(sys, catalog_, *this, weights);
  for (auto& tile : tiles_) {
    tile.boot(initial.threads_on(tile.id()), 0, 0);
    emit("boot", tile.id(),
         std::move(Fields{}.list("threads", tile.assigned_threads()).add("variant", tile.active_variant())),
         TraceLevel::Summary);
  }
  supervisor_->initialize(initial, {spares.begin(), spares.end()});
  {
    Fields f;
    f.add("reason", "boot");
    for (const auto& [thread, on] : initial.placements) f.list("thread_" + std::to_string(thread), on);
    f.list("gated", supervisor_->state().gated);
    emit("mapping", std::nullopt, std::move(f), TraceLevel::Summary);
  }
  for (const auto& t : catalog_.all()) {
    golden_[t.id] = t.init();
    availability_[t.id] = {};
  }

  power_since_ = 0;
  update_power();

  schedule(sys.checkpoint_interval, EventKind::Slot);
  for (std::size_t i = 0; i < faults_.size(); ++i) schedule(faults_[i].onset, EventKind::FaultOnset, 0, 0, i);
  for (std::size_t i = 0; i < scenario_.commands.size(); ++i) {
    schedule(scenario_.commands[i].time, EventKind::OperatorCommand, 0, 0, i);
  }
  if (sys.scrub_period > 0) schedule(sys.scrub_period, EventKind::ScrubTick);

  for (const auto& fixture : scenario_.line_fixtures) {
    try {
      const auto result = io::vote_lines(fixture.streams, sys.fifo_depth);
      io_stats_.line_transactions += result.transactions.size();
      io_stats_.line_overflows += result.overflows;
      io_stats_.outvoted_bits += result.outvoted_bits;
      emit("io_lines", std::nullopt,
           std::move(Fields{}
                         .add("fixture", fixture.name)
                         .add("transactions", std::uint64_t{result.transactions.size()})
                         .add("overflows", result.overflows)
                         .add("outvoted_bits", result.outvoted_bits)
                         .add("pass_through", result.pass_through)),
           TraceLevel::Summary);
    } catch (const io::VoterError& e) {
      emit("io_lines", std::nullopt, std::move(Fields{}.add("fixture", fixture.name).add("error", e.what())),
           TraceLevel::Summary);
    }
  }
  for (const auto& fixture : scenario_.packet_fixtures) {
    const auto result = io::dedup_packets(fixture.packets, fixture.policy);
    io_stats_.packets_accepted += result.accepted.size();
    io_stats_.packet_conflicts += result.conflicts.size();
    io_stats_.packet_dissents += result.dissents.size();
    io_stats_.packets_expired += result.expired.size();
    std::vector<std::uint64_t> accepted;
    for (const auto& a : result.accepted) accepted.push_back(a.sequence);
    emit("io_packets", std::nullopt,
         std::move(Fields{}
                       .add("fixture", fixture.name)
                       .list("accepted", accepted)
                       .list("conflicts", result.conflicts)
                       .list("expired", result.expired)
                       .add("dissents", std::uint64_t{result.dissents.size()})),
         TraceLevel::Summary);
  }
}

void Simulation::schedule(Tick time, EventKind kind, TileId tile, CheckpointSeq seq, std::size_t index) {
  queue_.push({time, next_ordinal_++, kind, tile, seq, index});
}

void Simulation::emit(std::string kind, std::optional<TileId> tile, Fields fields, TraceLevel level) {
  trace({now_, tile, std::move(kind), fields.take(), level});
}

void Simulation::trace(TraceRecord record) {
  const auto& k = record.kind;
  if (k == "replace") {
    ++counters_["replacements"];
    for (std::size_t i = 0; i < faults_.size(); ++i) {
      if (record.tile && faults_[i].target.tile == *record.tile && records_[i].detected && !records_[i].recovered) {
        records_[i].replaced = true;
      }
    }
  } else if (k == "spare_activated") {
    ++counters_["spare_activations"];
  } else if (k == "reboot") {
    ++counters_["reboots"];
  } else if (k == "ladder_attempt") {
    const auto step = record.string_field("step");
    ++counters_[step == "full" ? "ladder_attempts_full" : "ladder_attempts_partial"];
  } else if (k == "ladder_result") {
    ++counters_[record.string_field("result") == "recovered" ? "ladder_recovered" : "ladder_defunct"];
  } else if (k == "stage3") {
    if (record.int_field("active").value_or(0) != 0) ++counters_["stage3_activations"];
  } else if (k == "watchdog") {
    ++counters_["watchdog_flags"];
  } else if (k == "mapping") {
    ++counters_["mapping_changes"];
  } else if (k == "state_lost") {
    ++counters_["states_lost"];
  }
  if (record.level <= options_.level) trace_.push_back(std::move(record));
}

Tick Simulation::checkpoint_delay(const Tile& tile) const {
  Tick delay = 0;
  for (auto thread : tile.assigned_threads()) delay = std::max(delay, catalog_.at(thread).checkpoint_delay);
  const auto load = tile.assigned_load();
  const auto capacity = scenario_.system.tile_capacity;
  if (load > capacity) {
    delay += (static_cast<Tick>(load - capacity) * scenario_.system.checkpoint_interval) / capacity;
  }
  return delay;
}

void Simulation::update_power() {
  const auto& sys = scenario_.system;
  double power = sys.static_power;
  for (const auto& t : tiles_) power += t.clock_enabled() ? sys.per_tile_active_power : sys.per_tile_gated_power;
  const double seconds_per_tick = sys.interval_seconds / static_cast<double>(sys.checkpoint_interval);
  const Tick until = std::min(now_, end_time_);
  if (until > power_since_) {
    energy_joules_ += power_watts_ * static_cast<double>(until - power_since_) * seconds_per_tick;
    power_since_ = until;
  }
  power_watts_ = power;
}

void Simulation::run_until(Tick until) {
  while (!queue_.empty() && queue_.top().time <= until && queue_.top().time <= end_time_) {
    const Event e = queue_.top();
    queue_.pop();
    now_ = e.time;
    dispatch(e);
    update_power();
  }
}

RunResult Simulation::run() {
  run_until(end_time_);
  now_ = end_time_;
  update_power();
  return {trace_, metrics()};
}

void Simulation::dispatch(const Event& e) {
  switch (e.kind) {
    case EventKind::Slot: on_slot(e); break;
    case EventKind::CheckpointDue: on_checkpoint(e.tile, e.seq); break;
    case EventKind::VoteCollect: on_vote(e.seq); break;
    case EventKind::FaultOnset: on_fault(e.index); break;
    case EventKind::SupervisorCommand: on_supervisor_command(e.index); break;
    case EventKind::OperatorCommand: on_operator_command(e.index); break;
    case EventKind::ScrubTick: {
      if (!stalled_) counters_["scrub_corrections"] += supervisor_->scrub_tick(memory_, now_);
      schedule(now_ + scenario_.system.scrub_period, EventKind::ScrubTick);
      break;
    }
    case EventKind::WatchdogTick: on_watchdog(); break;
    case EventKind::ReconfigDone: supervisor_->on_reconfiguration_done(e.tile); break;
  }
}

void Simulation::on_slot(const Event&) {
  const auto& sys = scenario_.system;
  const Tick next = now_ + sys.checkpoint_interval;
  if (next < end_time_) schedule(next, EventKind::Slot);

  if (now_ < stall_until_) {
    stalled_ = true;
    ++counters_["stalled_slots"];
    for (auto& [thread, a] : availability_) ++a.total;
    emit("stalled", std::nullopt, std::move(Fields{}.add("until", stall_until_)), TraceLevel::Normal);
    return;
  }
  if (stalled_) {
    stalled_ = false;
    for (auto& t : tiles_) t.restart_watchdog(now_);
    emit("resume", std::nullopt, Fields{}, TraceLevel::Summary);
  }
  check_conservation();
  start_round(false);
}

void Simulation::start_round(bool forced) {
  const auto& sys = scenario_.system;
  ++seq_;
  ++counters_["checkpoints"];
  round_start_[seq_] = now_;
  last_round_ = now_;
  while (round_start_.size() > 8) round_start_.erase(round_start_.begin());
  for (const auto& t : catalog_.all()) golden_[t.id] = t.behavior.apply(golden_[t.id], seq_);

  for (auto& tile : tiles_) {
    if (!tile.running()) continue;
    if (sys.checkpoint_trigger == CheckpointTrigger::Supervisor) {
      send(tile.id(), TriggerCheckpoint{});
    } else {
      schedule(now_ + sys.phase_of(tile.id()) + checkpoint_delay(tile), EventKind::CheckpointDue, tile.id(), seq_);
    }
  }
  schedule(now_ + sys.vote_window, EventKind::VoteCollect, 0, seq_);
  if (!forced) schedule(now_ + sys.vote_window + 1, EventKind::WatchdogTick);
}

void Simulation::on_checkpoint(TileId id, CheckpointSeq seq) {
  Tile& tile = tiles_[id];
  if (!tile.running() || stalled_) return;
  const auto& sys = scenario_.system;

  // Main-memory reads happen once per interval, at a fixed offset.
  const Tick read_time = round_start_[seq] - sys.checkpoint_interval + sys.memory_read_offset;
  for (const auto& upset : memory_.take_manifesting(id, read_time)) {
    if (!tile.holds(upset.thread) || tile.hung()) continue;
    tile.flip_bit(upset.thread, upset.word, upset.bit);
    emit("upset_manifest", id,
         std::move(Fields{}.add("fault", upset.fault).add("thread", upset.thread).add("read_time", read_time)),
         TraceLevel::Normal);
  }

  tile.execute_interval(seq);
  const bool babble = std::any_of(tiles_.begin(), tiles_.end(), [&](const Tile& other) {
    return other.id() != id && other.babbling() && other.connected() && other.clock_enabled();
  });
  const Tick emit_time = now_ + (babble ? sys.babble_latency : 0);
  if (const auto report = tile.run_checkpoint(seq, emit_time)) {
    latency_sum_ += static_cast<double>(emit_time - round_start_[seq]);
    ++latency_count_;
    Fields f;
    f.add("seq", seq).add("latency", emit_time - round_start_[seq]);
    std::vector<std::uint64_t> threads, sums;
    for (const auto& [thread, sum] : report->checksums) {
      threads.push_back(thread);
      sums.push_back(sum);
    }
    f.list("threads", threads).list("checksums", sums);
    emit("report", id, std::move(f), TraceLevel::Verbose);
  }
}

void Simulation::on_vote(CheckpointSeq seq) {
  const auto& mapping = supervisor_->mapping();
  std::vector<MajorityDecision> decisions;
  std::set<TileId> flagged;
  bool all_clean = true;

  // Faults that could have put a wrong value into `thread`'s result.
  auto may_corrupt = [&](std::size_t i, ThreadId thread, CheckpointSeq at) {
    const auto& r = records_[i];
    const auto& e = faults_[i];
    if (!r.applied || r.recovered || r.next_seq > at) return false;
    if (e.kind == FaultKind::Hang || e.kind == FaultKind::BabblingTile) return false;
    return !e.target.thread || *e.target.thread == thread;
  };

  for (const auto& spec : catalog_.all()) {
    const auto thread = spec.id;
    const Checksum golden = spec.checksum(golden_[thread]);
    auto placed = mapping.placements.find(thread);
    const std::vector<TileId> members = placed == mapping.placements.end() ? std::vector<TileId>{} : placed->second;
    auto& avail = availability_[thread];
    ++avail.total;
    const auto required = supervisor_->required(thread);

    if (members.size() >= 2) {
      voting::LockstepGroup group{thread, members};
      const auto entries = voting::collect_reports(seq, group, tiles_, now_);
      auto decision = voting::decide_majority(seq, thread, entries, members);

      bool fault_injected = false;
      for (std::size_t i = 0; i < faults_.size(); ++i) {
        if (records_[i].applied && !records_[i].recovered &&
            std::find(members.begin(), members.end(), faults_[i].target.tile) != members.end()) {
          fault_injected = true;
        }
      }
      const auto outcome = voting::classify_outcome(decision, {golden, fault_injected});
      ++counters_["decisions"];
      if (!decision.clean()) {
        ++counters_["disagreements"];
        all_clean = false;
      }
      if (outcome == voting::Outcome::FalseAlarm) ++counters_["false_alarms"];
      if (outcome == voting::Outcome::SilentDataCorruption) {
        ++counters_["sdc_decisions"];
        all_clean = false;
        for (std::size_t i = 0; i < faults_.size(); ++i) {
          if (may_corrupt(i, thread, seq) && decision.agreeing.contains(faults_[i].target.tile)) {
            records_[i].silent = true;
          }
        }
      }
      flagged.insert(decision.dissenting.begin(), decision.dissenting.end());
      flagged.insert(decision.missing.begin(), decision.missing.end());
      if (decision.undecidable) {
        for (const auto& [t, sum] : decision.reported) flagged.insert(t);
      }
      if (!decision.undecidable && decision.agreeing.size() >= required && decision.agreed == golden) {
        ++avail.satisfied;
      }
      for (auto t : members) tiles_[t].cache_vote(decision);

      Fields f;
      f.add("seq", seq).add("thread", thread).list("members", members);
      if (decision.agreed) f.add("agreed", std::uint64_t{*decision.agreed});
      f.list("agreeing", decision.agreeing)
          .list("dissenting", decision.dissenting)
          .list("missing", decision.missing)
          .add("undecidable", decision.undecidable)
          .add("outcome", voting::to_string(outcome));
      emit("decision", std::nullopt, std::move(f), TraceLevel::Normal);
      decisions.push_back(std::move(decision));
    } else if (members.size() == 1) {
      const Tile& tile = tiles_[members.front()];
      const auto* report = tile.connected() ? tile.state_memory().report_for(seq) : nullptr;
      const bool visible = report && report->emit_time <= now_;
      const bool present = visible && report->checksum_of(thread).has_value();
      const Checksum value = present ? *report->checksum_of(thread) : 0;
      if (present && value == golden) {
        if (required <= 1) ++avail.satisfied;
      } else if (present) {
        ++counters_["unvoted_corruptions"];
        all_clean = false;
        for (std::size_t i = 0; i < faults_.size(); ++i) {
          if (may_corrupt(i, thread, seq) && faults_[i].target.tile == tile.id()) {
            records_[i].silent = true;
          }
        }
      }
      Fields f;
      f.add("seq", seq).add("thread", thread).list("members", members).add("present", present);
      if (present) f.add("checksum", std::uint64_t{value});
      f.add("matches_reference", present && value == golden);
      emit("unvoted", std::nullopt, std::move(f), TraceLevel::Normal);
    } else {
      emit("unscheduled", std::nullopt, std::move(Fields{}.add("seq", seq).add("thread", thread)), TraceLevel::Normal);
    }
  }

  for (auto t : flagged) attribute_detection(t, seq);

  std::vector<TileId> reporters;
  for (const auto& tile : tiles_) {
    const auto* report = tile.state_memory().report_for(seq);
    if (tile.connected() && report && report->emit_time <= now_) reporters.push_back(tile.id());
  }
  const bool disagreement = std::any_of(decisions.begin(), decisions.end(),
                                        [](const MajorityDecision& d) { return !d.clean(); });
  if (disagreement) supervisor_->handle_disagreement(decisions);
  supervisor_->observe_round(reporters, decisions);

  if (all_clean) {
    for (std::size_t i = 0; i < faults_.size(); ++i) {
      auto& r = records_[i];
      if (r.detected && !r.recovered && *r.detected < seq) {
        r.recovered = seq;
        ++recovery_histogram_[static_cast<std::uint32_t>(seq - r.next_seq + 1)];
      }
    }
  }
}

void Simulation::attribute_detection(TileId tile, CheckpointSeq seq) {
  bool found = false;
  bool ongoing = false;
  for (std::size_t i = 0; i < faults_.size(); ++i) {
    auto& r = records_[i];
    if (faults_[i].target.tile != tile || !r.applied || r.next_seq > seq) continue;
    if (!r.detected) {
      r.detected = seq;
      found = true;
    } else if (!r.recovered) {
      ongoing = true;
    }
  }
  if (!found && !ongoing) {
    emit("unattributed_flag", tile, std::move(Fields{}.add("seq", seq)), TraceLevel::Normal);
  }
}

void Simulation::on_fault(std::size_t index) {
  const auto& e = faults_[index];
  Tile& tile = tiles_[e.target.tile];
  const auto result = FaultInjector::inject(e, tile, memory_);
  auto& r = records_[index];
  r.applied = result.applied;
  r.next_seq = (tile.last_seq() >= seq_ || seq_ == 0 || now_ < last_round_) ? seq_ + 1 : seq_;
  if (tile.last_seq() < seq_ && tile.running() && now_ >= last_round_ && seq_ > 0) r.next_seq = seq_;
  if (r.applied) ++counters_["faults_injected"];
  Fields f;
  f.add("id", e.id)
      .add("kind", to_string(e.kind))
      .add("persistence", e.persistence == Persistence::Permanent ? "permanent" : "transient")
      .add("target", fault_target_label(e.target))
      .add("applied", result.applied);
  if (!result.note.empty()) f.add("note", result.note);
  emit("fault", e.target.tile, std::move(f), TraceLevel::Summary);
}

void Simulation::send(TileId tile, TileCommand command) {
  const auto index = next_command_++;
  in_flight_.emplace(index, std::make_pair(tile, std::move(command)));
  schedule(now_ + scenario_.system.command_latency, EventKind::SupervisorCommand, tile, 0, index);
}

void Simulation::on_supervisor_command(std::size_t index) {
  auto node = in_flight_.extract(index);
  const TileId id = node.mapped().first;
  const TileCommand& command = node.mapped().second;
  Tile& tile = tiles_[id];

  if (const auto* update = std::get_if<InduceStateUpdate>(&command)) {
    const Tile& source = tiles_[update->source];
    CommandStatus status = CommandStatus::Rejected;
    if (source.holds(update->thread)) status = tile.apply_state_update(update->thread, source.expose_state(update->thread));
    if (status == CommandStatus::Applied) ++counters_["state_updates"];
    emit("state_update", id,
         std::move(Fields{}
                       .add("thread", update->thread)
                       .add("source", update->source)
                       .add("status", status == CommandStatus::Applied    ? "applied"
                                      : status == CommandStatus::Deferred ? "deferred"
                                      : status == CommandStatus::Ignored  ? "ignored"
                                                                          : "rejected")),
         TraceLevel::Summary);
    return;
  }
  if (std::holds_alternative<TriggerCheckpoint>(command)) {
    on_checkpoint(id, seq_);
    return;
  }
  const auto status = tile.handle(command, seq_, now_);
  Fields f;
  f.add("command", command_name(command))
      .add("status", status == CommandStatus::Applied ? "applied" : status == CommandStatus::Ignored ? "ignored" : "rejected");
  if (const auto* adjust = std::get_if<AdjustMapping>(&command)) f.list("threads", adjust->threads);
  emit("command", id, std::move(f), TraceLevel::Normal);
}

void Simulation::reconfigure(TileId id, const LadderStep& step) {
  const auto& sys = scenario_.system;
  Tile& tile = tiles_[id];
  tile.set_connected(false);
  tile.begin_reconfiguration(step.variant);
  const bool full = step.kind == LadderStepKind::FullReconfiguration;
  const Tick duration = static_cast<Tick>(full ? sys.full_reconfig_intervals : sys.partial_reconfig_intervals) *
                        sys.checkpoint_interval;
  if (full) {
    stall_until_ = std::max(stall_until_, now_ + duration);
    emit("stall", std::nullopt, std::move(Fields{}.add("until", stall_until_)), TraceLevel::Summary);
  }
  schedule(now_ + duration, EventKind::ReconfigDone, id);
}

void Simulation::thread_state_lost(ThreadId thread) {
  const auto& spec = catalog_.at(thread);
  golden_[thread] = spec.init();
  if (spec.criticality == 0) critical_loss_ = true;
  for (std::size_t i = 0; i < faults_.size(); ++i) {
    if (records_[i].applied && records_[i].detected && !records_[i].recovered) records_[i].lost = true;
  }
}

void Simulation::on_watchdog() {
  if (stalled_) return;
  for (auto t : supervisor_->watchdog_check(now_)) attribute_detection(t, seq_);
}

void Simulation::on_operator_command(std::size_t index) {
  const auto& c = scenario_.commands[index];
  const auto& sys = scenario_.system;
  ++counters_["operator_commands"];
  Fields f;
  f.add("command", to_string(c.kind));
  bool accepted = true;
  switch (c.kind) {
    case OperatorCommandKind::SetObjectiveWeights: {
      const auto w = c.weights.normalized();
      f.add("performance", w.performance()).add("energy", w.energy()).add("robustness", w.robustness());
      emit("operator", std::nullopt, std::move(f), TraceLevel::Summary);
      supervisor_->set_weights(w);
      return;
    }
    case OperatorCommandKind::SetThreadReplication:
      f.add("thread", c.thread).add("replication", c.replication);
      emit("operator", std::nullopt, std::move(f), TraceLevel::Summary);
      supervisor_->set_thread_replication(c.thread, c.replication);
      return;
    case OperatorCommandKind::GateTile:
      accepted = supervisor_->gate_tile(c.tile);
      f.add("tile", c.tile);
      break;
    case OperatorCommandKind::UngateTile:
      accepted = supervisor_->ungate_tile(c.tile);
      f.add("tile", c.tile);
      break;
    case OperatorCommandKind::ForceCheckpoint: {
      // The forced round and its recovery commands must settle between two
      // regular rounds.
      Tick max_phase = 0;
      for (TileId t = 0; t < sys.tile_count; ++t) max_phase = std::max(max_phase, sys.phase_of(t));
      const Tick settle = sys.vote_window + sys.command_latency + 1;
      const Tick next_slot = last_round_ + sys.checkpoint_interval;
      accepted = !stalled_ && now_ >= stall_until_ && seq_ > 0 && now_ >= last_round_ + settle &&
                 now_ + settle + max_phase < next_slot;
      if (accepted) {
        emit("operator", std::nullopt, std::move(f.add("accepted", true)), TraceLevel::Summary);
        start_round(true);
        return;
      }
      break;
    }
  }
  f.add("accepted", accepted);
  emit("operator", std::nullopt, std::move(f), TraceLevel::Summary);
}

void Simulation::check_conservation() {
  if (!in_flight_.empty()) return;
  const auto& state = supervisor_->state();
  for (const auto& tile : tiles_) {
    if (state.recovering.contains(tile.id()) || state.defunct.contains(tile.id())) {
      if (!tile.replicas().empty()) {
        ++conservation_violations_;
        emit("conservation_violation", tile.id(), Fields{}, TraceLevel::Summary);
      }
      continue;
    }
    if (tile.assigned_threads() != supervisor_->mapping().threads_on(tile.id())) {
      ++conservation_violations_;
      emit("conservation_violation", tile.id(),
           std::move(Fields{}.list("held", tile.assigned_threads()).list("mapped", supervisor_->mapping().threads_on(tile.id()))),
           TraceLevel::Summary);
    }
  }
}

Checksum Simulation::golden_checksum(ThreadId thread) const {
  return catalog_.at(thread).checksum(golden_.at(thread));
}

RunMetrics Simulation::metrics() const {
  RunMetrics m;
  const auto& sys = scenario_.system;
  for (std::size_t i = 0; i < faults_.size(); ++i) {
    const auto& r = records_[i];
    FaultOutcomeRow row;
    row.event = faults_[i];
    if (r.silent) {
      row.outcome = FaultOutcome::Silent;
    } else if (!r.applied || !r.detected) {
      row.outcome = FaultOutcome::NoEffect;
    } else if (r.lost || !r.recovered) {
      row.outcome = FaultOutcome::Unrecovered;
    } else if (r.replaced) {
      row.outcome = FaultOutcome::Recovered;
    } else {
      row.outcome = FaultOutcome::Masked;
    }
    if (r.detected) row.detection_latency = static_cast<std::uint32_t>(*r.detected - r.next_seq + 1);
    if (r.recovered && row.outcome != FaultOutcome::Unrecovered) row.recovery_latency = static_cast<std::uint32_t>(*r.recovered - r.next_seq + 1);
    m.faults.push_back(row);
  }
  m.availability = availability_;
  m.recovery_latency_histogram = recovery_histogram_;
  m.counters = counters_;
  m.counters["conservation_violations"] = conservation_violations_;
  m.counters["defunct_tiles"] = supervisor_->state().defunct.size();
  m.counters["stage3_active_at_end"] = supervisor_->state().stage3_active ? 1 : 0;
  const Tick elapsed = std::min(now_, end_time_);
  m.duration_seconds = static_cast<double>(elapsed) * sys.interval_seconds / static_cast<double>(sys.checkpoint_interval);
  m.energy_joules = energy_joules_;
  m.mean_power_watts = m.duration_seconds > 0 ? energy_joules_ / m.duration_seconds : power_watts_;
  m.mean_report_latency = latency_count_ ? latency_sum_ / static_cast<double>(latency_count_) : 0.0;
  m.io = io_stats_;
  bool critical_loss = critical_loss_;
  for (const auto& t : catalog_.all()) {
    if (t.criticality == 0 && supervisor_->mapping().replicas_of(t.id) == 0) critical_loss = true;
  }
  m.critical_loss = critical_loss;
  return m;
}

RunResult run(const Scenario& scenario, const RunOptions& options) {
  Simulation sim(scenario, options);
  return sim.run();
}

}  // namespace obcsim
