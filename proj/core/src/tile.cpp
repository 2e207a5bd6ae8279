#include "obcsim/tile.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace obcsim {

namespace {

std::uint32_t get_u32(const StateBlob& b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{b[at + i]} << (8 * i);
  return v;
}

std::uint64_t get_u64(const StateBlob& b, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[at + i]} << (8 * i);
  return v;
}

constexpr Checksum kBabbleMask = 0xB0BB1E55u;

}  // namespace

const CheckpointReport* StateMemoryImage::report_for(CheckpointSeq seq) const {
  for (auto it = reports_.rbegin(); it != reports_.rend(); ++it) {
    if (it->seq == seq) return &*it;
  }
  return nullptr;
}

void StateMemoryImage::publish(CheckpointReport report, StateMemoryWriteKey) {
  reports_.push_back(std::move(report));
  while (reports_.size() > ring_size_) reports_.pop_front();
}

std::string_view command_name(const TileCommand& command) {
  struct Visitor {
    std::string_view operator()(const InduceStateUpdate&) const { return "induce_state_update"; }
    std::string_view operator()(const AdjustMapping&) const { return "adjust_mapping"; }
    std::string_view operator()(const Reboot&) const { return "reboot"; }
    std::string_view operator()(const Disconnect&) const { return "disconnect"; }
    std::string_view operator()(const Reconnect&) const { return "reconnect"; }
    std::string_view operator()(const RunSelfTest&) const { return "run_self_test"; }
    std::string_view operator()(const TriggerCheckpoint&) const { return "trigger_checkpoint"; }
  };
  return std::visit(Visitor{}, command);
}

std::optional<std::pair<CheckpointSeq, ThreadState>> decode_blob(const ThreadSpec& spec,
                                                                  const StateBlob& blob) {
  if (blob.size() < 16) return std::nullopt;
  if (get_u32(blob, 0) != spec.id) return std::nullopt;
  const auto seq = get_u64(blob, 4);
  const auto words = get_u32(blob, 12);
  if (words != spec.state_words || blob.size() != 16 + 4 * std::size_t{words}) return std::nullopt;
  ThreadState state;
  state.words.resize(words);
  for (std::uint32_t i = 0; i < words; ++i) state.words[i] = get_u32(blob, 16 + 4 * std::size_t{i});
  return std::make_pair(seq, std::move(state));
}

Tile::Tile(TileId id, const SystemConfig& config, const ThreadCatalog& catalog,
           std::vector<ConfigurationVariant> variants)
    : id_(id),
      config_(&config),
      catalog_(&catalog),
      variants_(std::move(variants)),
      memory_(id, config.report_ring_size) {
  if (variants_.empty()) throw std::invalid_argument("tile needs at least one configuration variant");
}

Replica* Tile::find(ThreadId thread) {
  for (auto& r : replicas_) {
    if (r.thread == thread) return &r;
  }
  return nullptr;
}

const Replica* Tile::find(ThreadId thread) const {
  for (const auto& r : replicas_) {
    if (r.thread == thread) return &r;
  }
  return nullptr;
}

const ThreadState* Tile::replica_state(ThreadId thread) const {
  const auto* r = find(thread);
  return r ? &r->state : nullptr;
}

std::vector<ThreadId> Tile::assigned_threads() const {
  std::vector<ThreadId> out;
  for (const auto& r : replicas_) out.push_back(r.thread);
  return out;
}

std::uint32_t Tile::assigned_load() const {
  std::uint32_t load = 0;
  for (const auto& r : replicas_) load += catalog_->at(r.thread).load;
  return load;
}

void Tile::set_assignment(std::span<const ThreadId> threads) {
  std::vector<ThreadId> sorted(threads.begin(), threads.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<Replica> next;
  next.reserve(sorted.size());
  for (auto id : sorted) {
    if (const auto* existing = find(id)) {
      next.push_back(*existing);
    } else {
      next.push_back({id, catalog_->at(id).init(), last_seq_});
    }
  }
  replicas_ = std::move(next);
  memory_.set_assignment(sorted, StateMemoryWriteKey{});
}

bool Tile::boot(std::span<const ThreadId> assignment, CheckpointSeq completed_seq, Tick now) {
  if (health_ == TileHealth::Defunct) return false;
  replicas_.clear();
  last_seq_ = completed_seq;
  set_assignment(assignment);  // init callbacks, ascending thread id
  health_ = TileHealth::Healthy;
  fault_counter_ = 0;
  clock_enabled_ = true;
  last_report_time_ = now;
  flush_deferred();
  return true;
}

void Tile::reboot(CheckpointSeq completed_seq, Tick now) {
  if (!effects_.hang_permanent) effects_.hung = false;
  if (!effects_.babbling_permanent) effects_.babbling = false;
  effects_.checksum_corruption_once.reset();
  for (auto& r : replicas_) {
    r.state = catalog_->at(r.thread).init();
    r.seq = completed_seq;
  }
  if (health_ == TileHealth::Suspected) health_ = TileHealth::Healthy;
  last_seq_ = completed_seq;
  last_report_time_ = now;
}

void Tile::flush_deferred() {
  auto pending = std::move(deferred_updates_);
  deferred_updates_.clear();
  for (const auto& [thread, blob] : pending) apply_state_update(thread, blob);
}

void Tile::flip_bit(ThreadId thread, std::uint32_t word, std::uint32_t bit) {
  auto* r = find(thread);
  if (!r || r->state.words.empty()) return;
  r->state.words[word % r->state.words.size()] ^= std::uint32_t{1} << (bit % 32);
}

void Tile::execute_interval(CheckpointSeq seq) {
  if (effects_.hung) return;
  for (const auto& stuck : effects_.stuck_bits) flip_bit(stuck.thread, stuck.word, stuck.bit);

  // A defect inside the active variant corrupts the data flow of the first
  // stateful replica every interval.
  const RegionMask active_defects = effects_.defective_regions & variants_[active_variant_].regions;
  if (active_defects != 0) {
    const auto region = static_cast<std::uint32_t>(std::countr_zero(active_defects));
    for (const auto& r : replicas_) {
      if (catalog_->at(r.thread).resyncable()) {
        flip_bit(r.thread, region, region);
        break;
      }
    }
  }

  for (auto& r : replicas_) {
    const auto& behavior = catalog_->at(r.thread).behavior;
    while (r.seq < seq) r.state = behavior.apply(r.state, ++r.seq);
  }
}

std::optional<CheckpointReport> Tile::run_checkpoint(CheckpointSeq seq, Tick emit_time) {
  if (effects_.hung) return std::nullopt;
  CheckpointReport report;
  report.tile = id_;
  report.seq = seq;
  report.emit_time = emit_time;
  for (const auto& r : replicas_) {
    report.checksums.emplace_back(r.thread, catalog_->at(r.thread).checksum(r.state));
  }

  auto corrupt = [&report](const std::optional<ThreadId>& target, Checksum mask) {
    for (auto& [thread, sum] : report.checksums) {
      if (!target || *target == thread) sum ^= mask;
    }
  };
  if (effects_.checksum_corruption_once) {
    corrupt(effects_.checksum_corruption_once->first, effects_.checksum_corruption_once->second);
    effects_.checksum_corruption_once.reset();
  }
  if (effects_.checksum_corruption_permanent) {
    corrupt(effects_.checksum_corruption_permanent->first,
            effects_.checksum_corruption_permanent->second);
  }
  if (effects_.babbling) corrupt(std::nullopt, kBabbleMask ^ static_cast<Checksum>(seq));

  last_seq_ = seq;
  last_report_time_ = emit_time;
  memory_.publish(report, StateMemoryWriteKey{});
  return report;
}

StateBlob Tile::expose_state(ThreadId thread) const {
  const auto* r = find(thread);
  if (!r) throw std::out_of_range("tile " + std::to_string(id_) + " holds no replica of thread " +
                                  std::to_string(thread));
  return catalog_->at(thread).expose(r->state, r->seq);
}

CommandStatus Tile::apply_state_update(ThreadId thread, const StateBlob& blob) {
  if (health_ == TileHealth::Defunct) return CommandStatus::Rejected;
  if (health_ == TileHealth::Reconfiguring) {
    deferred_updates_.emplace_back(thread, blob);
    return CommandStatus::Deferred;
  }
  if (effects_.hung) return CommandStatus::Ignored;
  auto* r = find(thread);
  const auto* spec = catalog_->find(thread);
  if (!r || !spec || !spec->resyncable()) return CommandStatus::Rejected;
  auto decoded = decode_blob(*spec, blob);
  if (!decoded) return CommandStatus::Rejected;
  r->seq = decoded->first;
  r->state = std::move(decoded->second);
  return CommandStatus::Applied;
}

SelfTestResult Tile::run_self_test(Rng& rng, double detection_probability) const {
  SelfTestResult result;
  const RegionMask exposed = effects_.defective_regions & variants_[active_variant_].regions;
  for (auto region : regions_of(exposed)) {
    if (rng.bernoulli(detection_probability)) result.detected |= region_bit(region);
  }
  result.pass = result.detected == 0;
  return result;
}

CommandStatus Tile::handle(const TileCommand& command, CheckpointSeq completed_seq, Tick now) {
  if (health_ == TileHealth::Defunct) return CommandStatus::Rejected;
  // The interconnect port is switched by the supervisor, not by the tile.
  if (std::holds_alternative<Disconnect>(command)) {
    connected_ = false;
    return CommandStatus::Applied;
  }
  if (std::holds_alternative<Reconnect>(command)) {
    connected_ = true;
    return CommandStatus::Applied;
  }
  if (std::holds_alternative<Reboot>(command)) {
    if (health_ == TileHealth::Reconfiguring) return CommandStatus::Rejected;
    reboot(completed_seq, now);
    return CommandStatus::Applied;
  }
  if (effects_.hung) return CommandStatus::Ignored;
  if (const auto* adjust = std::get_if<AdjustMapping>(&command)) {
    if (health_ == TileHealth::Reconfiguring) return CommandStatus::Rejected;
    set_assignment(adjust->threads);
    return CommandStatus::Applied;
  }
  return CommandStatus::Rejected;
}

void Tile::begin_reconfiguration(VariantId variant) {
  health_ = TileHealth::Reconfiguring;
  spare_ = false;
  replicas_.clear();
  memory_.set_assignment({}, StateMemoryWriteKey{});
  deferred_updates_.clear();
  active_variant_ = variant % static_cast<VariantId>(variants_.size());
  effects_.clear_repairable();
}

void Tile::mark_defunct() {
  health_ = TileHealth::Defunct;
  spare_ = false;
  replicas_.clear();
  memory_.set_assignment({}, StateMemoryWriteKey{});
  deferred_updates_.clear();
  clock_enabled_ = false;
  connected_ = false;
}

}  // namespace obcsim
