#include "obcsim/scenario.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace obcsim {

using nlohmann::ordered_json;

namespace {

constexpr std::array<std::pair<OperatorCommandKind, std::string_view>, 5> kCommandNames{{
    {OperatorCommandKind::SetObjectiveWeights, "SetObjectiveWeights"},
    {OperatorCommandKind::SetThreadReplication, "SetThreadReplication"},
    {OperatorCommandKind::GateTile, "GateTile"},
    {OperatorCommandKind::UngateTile, "UngateTile"},
    {OperatorCommandKind::ForceCheckpoint, "ForceCheckpoint"},
}};

std::optional<OperatorCommandKind> command_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kCommandNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

/// Reads an object while tracking which keys were consumed.
class Reader {
 public:
  Reader(const ordered_json& j, std::string where, std::vector<std::string>& errors)
      : j_(j), where_(std::move(where)), errors_(&errors) {
    if (!j_.is_object()) fail(where_ + ": expected an object");
  }

  ~Reader() {
    if (!j_.is_object()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.contains(it.key())) errors_->push_back(where_ + ": unknown key '" + it.key() + "'");
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.is_object() || !j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const ordered_json::exception& e) {
      fail(where_ + "." + key + ": " + e.what());
    }
  }

  template <typename T>
  void get_optional(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    if (!j_.is_object() || !j_.contains(key) || j_.at(key).is_null()) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const ordered_json::exception& e) {
      fail(where_ + "." + key + ": " + e.what());
    }
  }

  const ordered_json* child(const char* key) {
    seen_.insert(key);
    if (!j_.is_object() || !j_.contains(key) || j_.at(key).is_null()) return nullptr;
    return &j_.at(key);
  }

  void fail(std::string message) { errors_->push_back(std::move(message)); }
  const std::string& where() const { return where_; }

 private:
  const ordered_json& j_;
  std::string where_;
  std::vector<std::string>* errors_;
  std::set<std::string> seen_;
};

template <typename F>
void each(const ordered_json* array, const std::string& where, std::vector<std::string>& errors, F&& f) {
  if (!array) return;
  if (!array->is_array()) {
    errors.push_back(where + ": expected an array");
    return;
  }
  for (std::size_t i = 0; i < array->size(); ++i) f((*array)[i], where + "[" + std::to_string(i) + "]");
}

std::string_view persistence_name(Persistence p) { return p == Persistence::Permanent ? "permanent" : "transient"; }

std::optional<Persistence> persistence_from(std::string_view s) {
  if (s == "transient") return Persistence::Transient;
  if (s == "permanent") return Persistence::Permanent;
  return std::nullopt;
}

void read_system(const ordered_json& j, SystemConfig& c, std::vector<std::string>& errors) {
  Reader r(j, "system", errors);
  r.get("tile_count", c.tile_count);
  r.get("spare_count", c.spare_count);
  r.get("checkpoint_interval", c.checkpoint_interval);
  r.get("watchdog_timeout", c.watchdog_timeout);
  r.get("fault_counter_threshold", c.fault_counter_threshold);
  r.get("variant_count", c.variant_count);
  r.get("region_count", c.region_count);
  r.get("variant_region_fraction", c.variant_region_fraction);
  r.get("variants", c.variants);
  r.get("fifo_depth", c.fifo_depth);
  r.get("per_tile_active_power", c.per_tile_active_power);
  r.get("per_tile_gated_power", c.per_tile_gated_power);
  r.get("static_power", c.static_power);
  r.get("rng_seed", c.rng_seed);
  r.get("report_ring_size", c.report_ring_size);
  r.get("tile_capacity", c.tile_capacity);
  r.get("vote_window", c.vote_window);
  r.get("command_latency", c.command_latency);
  r.get("partial_reconfig_intervals", c.partial_reconfig_intervals);
  r.get("full_reconfig_intervals", c.full_reconfig_intervals);
  r.get("selftest_detection_probability", c.selftest_detection_probability);
  r.get("scrub_period", c.scrub_period);
  r.get("memory_read_offset", c.memory_read_offset);
  r.get("babble_latency", c.babble_latency);
  std::string trigger = c.checkpoint_trigger == CheckpointTrigger::Time ? "time" : "supervisor";
  r.get("checkpoint_trigger", trigger);
  if (trigger == "time") {
    c.checkpoint_trigger = CheckpointTrigger::Time;
  } else if (trigger == "supervisor") {
    c.checkpoint_trigger = CheckpointTrigger::Supervisor;
  } else {
    r.fail("system.checkpoint_trigger: unknown trigger '" + trigger + "'");
  }
  r.get("phase_offsets", c.phase_offsets);
  r.get("checkpoints", c.checkpoints);
  r.get("interval_seconds", c.interval_seconds);
}

ordered_json write_system(const SystemConfig& c) {
  ordered_json j;
  j["tile_count"] = c.tile_count;
  j["spare_count"] = c.spare_count;
  j["checkpoint_interval"] = c.checkpoint_interval;
  j["watchdog_timeout"] = c.watchdog_timeout;
  j["fault_counter_threshold"] = c.fault_counter_threshold;
  j["variant_count"] = c.variant_count;
  j["region_count"] = c.region_count;
  j["variant_region_fraction"] = c.variant_region_fraction;
  j["variants"] = c.variants;
  j["fifo_depth"] = c.fifo_depth;
  j["per_tile_active_power"] = c.per_tile_active_power;
  j["per_tile_gated_power"] = c.per_tile_gated_power;
  j["static_power"] = c.static_power;
  j["rng_seed"] = c.rng_seed;
  j["report_ring_size"] = c.report_ring_size;
  j["tile_capacity"] = c.tile_capacity;
  j["vote_window"] = c.vote_window;
  j["command_latency"] = c.command_latency;
  j["partial_reconfig_intervals"] = c.partial_reconfig_intervals;
  j["full_reconfig_intervals"] = c.full_reconfig_intervals;
  j["selftest_detection_probability"] = c.selftest_detection_probability;
  j["scrub_period"] = c.scrub_period;
  j["memory_read_offset"] = c.memory_read_offset;
  j["babble_latency"] = c.babble_latency;
  j["checkpoint_trigger"] = c.checkpoint_trigger == CheckpointTrigger::Time ? "time" : "supervisor";
  j["phase_offsets"] = c.phase_offsets;
  j["checkpoints"] = c.checkpoints;
  j["interval_seconds"] = c.interval_seconds;
  return j;
}

ThreadSpec read_thread(const ordered_json& j, const std::string& where, std::vector<std::string>& errors) {
  ThreadSpec t;
  Reader r(j, where, errors);
  r.get("id", t.id);
  r.get("name", t.name);
  r.get("criticality", t.criticality);
  r.get("replication", t.required_replication);
  r.get("load", t.load);
  if (const auto* b = r.child("behavior")) {
    Reader br(*b, where + ".behavior", errors);
    std::string kind = "counter";
    br.get("kind", kind);
    br.get("step", t.behavior.step);
    if (kind == "counter") {
      t.behavior.kind = BehaviorKind::Counter;
    } else if (kind == "mix") {
      t.behavior.kind = BehaviorKind::Mix;
    } else {
      br.fail(where + ".behavior.kind: unknown behavior '" + kind + "'");
    }
  }
  r.get("state_words", t.state_words);
  r.get("init", t.init_words);
  r.get_optional("fixed_checksum", t.fixed_checksum);
  r.get("checkpoint_delay", t.checkpoint_delay);
  return t;
}

ordered_json write_thread(const ThreadSpec& t) {
  ordered_json j;
  j["id"] = t.id;
  j["name"] = t.name;
  j["criticality"] = t.criticality;
  j["replication"] = t.required_replication;
  j["load"] = t.load;
  j["behavior"] = {{"kind", t.behavior.kind == BehaviorKind::Counter ? "counter" : "mix"},
                   {"step", t.behavior.step}};
  j["state_words"] = t.state_words;
  j["init"] = t.init_words;
  j["fixed_checksum"] = t.fixed_checksum ? ordered_json(*t.fixed_checksum) : ordered_json(nullptr);
  j["checkpoint_delay"] = t.checkpoint_delay;
  return j;
}

void read_kind(Reader& r, const char* key, FaultKind& kind) {
  std::string name(to_string(kind));
  r.get(key, name);
  if (auto k = fault_kind_from_string(name)) {
    kind = *k;
  } else {
    r.fail(r.where() + ": unknown fault kind '" + name + "'");
  }
}

void read_persistence(Reader& r, Persistence& p) {
  std::string name(persistence_name(p));
  r.get("persistence", name);
  if (auto v = persistence_from(name)) {
    p = *v;
  } else {
    r.fail(r.where() + ": unknown persistence '" + name + "'");
  }
}

FaultEvent read_event(const ordered_json& j, const std::string& where, std::vector<std::string>& errors) {
  FaultEvent e;
  Reader r(j, where, errors);
  r.get("id", e.id);
  r.get("onset", e.onset);
  read_kind(r, "kind", e.kind);
  read_persistence(r, e.persistence);
  r.get("tile", e.target.tile);
  r.get_optional("thread", e.target.thread);
  r.get_optional("region", e.target.region);
  r.get("word", e.target.word);
  r.get("bit", e.target.bit);
  return e;
}

ordered_json write_event(const FaultEvent& e) {
  ordered_json j;
  j["id"] = e.id;
  j["onset"] = e.onset;
  j["kind"] = to_string(e.kind);
  j["persistence"] = persistence_name(e.persistence);
  j["tile"] = e.target.tile;
  j["thread"] = e.target.thread ? ordered_json(*e.target.thread) : ordered_json(nullptr);
  j["region"] = e.target.region ? ordered_json(*e.target.region) : ordered_json(nullptr);
  j["word"] = e.target.word;
  j["bit"] = e.target.bit;
  return j;
}

FaultGenerator read_generator(const ordered_json& j, const std::string& where, std::vector<std::string>& errors) {
  FaultGenerator g;
  Reader r(j, where, errors);
  read_kind(r, "kind", g.kind);
  read_persistence(r, g.persistence);
  std::string dist = g.distribution == FaultDistribution::Poisson ? "poisson" : "uniform";
  r.get("distribution", dist);
  if (dist == "poisson") {
    g.distribution = FaultDistribution::Poisson;
  } else if (dist == "uniform") {
    g.distribution = FaultDistribution::Uniform;
  } else {
    r.fail(where + ": unknown distribution '" + dist + "'");
  }
  r.get("rate", g.rate);
  r.get("count", g.count);
  r.get("start", g.start);
  r.get_optional("end", g.end);
  r.get("tiles", g.tiles);
  r.get("threads", g.threads);
  r.get("regions", g.regions);
  return g;
}

ordered_json write_generator(const FaultGenerator& g) {
  ordered_json j;
  j["kind"] = to_string(g.kind);
  j["persistence"] = persistence_name(g.persistence);
  j["distribution"] = g.distribution == FaultDistribution::Poisson ? "poisson" : "uniform";
  j["rate"] = g.rate;
  j["count"] = g.count;
  j["start"] = g.start;
  j["end"] = g.end ? ordered_json(*g.end) : ordered_json(nullptr);
  j["tiles"] = g.tiles;
  j["threads"] = g.threads;
  j["regions"] = g.regions;
  return j;
}

void read_weights(Reader& r, WeightSpec& w) {
  r.get("performance", w.performance);
  r.get("energy", w.energy);
  r.get("robustness", w.robustness);
}

OperatorCommand read_command(const ordered_json& j, const std::string& where, std::vector<std::string>& errors) {
  OperatorCommand c;
  Reader r(j, where, errors);
  r.get("time", c.time);
  std::string kind(to_string(c.kind));
  r.get("kind", kind);
  if (auto k = command_kind_from_string(kind)) {
    c.kind = *k;
  } else {
    r.fail(where + ": unknown command kind '" + kind + "'");
  }
  read_weights(r, c.weights);
  r.get("thread", c.thread);
  r.get("replication", c.replication);
  r.get("tile", c.tile);
  return c;
}

ordered_json write_command(const OperatorCommand& c) {
  ordered_json j;
  j["time"] = c.time;
  j["kind"] = to_string(c.kind);
  j["performance"] = c.weights.performance;
  j["energy"] = c.weights.energy;
  j["robustness"] = c.weights.robustness;
  j["thread"] = c.thread;
  j["replication"] = c.replication;
  j["tile"] = c.tile;
  return j;
}

io::LineStream read_stream(const ordered_json& j, const std::string& where, std::vector<std::string>& errors) {
  io::LineStream s;
  Reader r(j, where, errors);
  r.get("tile", s.tile);
  std::vector<std::pair<io::Cycle, int>> samples;
  r.get("samples", samples);
  for (const auto& [cycle, level] : samples) s.samples.emplace_back(cycle, level != 0);
  std::vector<std::pair<io::Cycle, io::Cycle>> windows;
  r.get("activity", windows);
  for (const auto& [b, e] : windows) s.activity.push_back({b, e});
  return s;
}

ordered_json write_stream(const io::LineStream& s) {
  ordered_json j;
  j["tile"] = s.tile;
  ordered_json samples = ordered_json::array();
  for (const auto& [cycle, level] : s.samples) samples.push_back({cycle, level ? 1 : 0});
  j["samples"] = samples;
  ordered_json windows = ordered_json::array();
  for (const auto& w : s.activity) windows.push_back({w.begin, w.end});
  j["activity"] = windows;
  return j;
}

}  // namespace

std::string_view to_string(OperatorCommandKind kind) {
  for (const auto& [k, name] : kCommandNames) {
    if (k == kind) return name;
  }
  return "?";
}

ScenarioError::ScenarioError(std::vector<std::string> errors)
    : std::runtime_error([&] {
        std::string msg = "invalid scenario";
        for (const auto& e : errors) msg += "\n  " + e;
        return msg;
      }()),
      errors_(std::move(errors)) {}

std::vector<TileId> initial_spares(const SystemConfig& config) {
  std::vector<TileId> out;
  for (std::uint32_t k = 0; k < config.spare_count && k < config.tile_count; ++k) {
    out.insert(out.begin(), config.tile_count - 1 - k);
  }
  return out;
}

std::vector<std::string> validate_config(const SystemConfig& c, std::span<const ThreadSpec> threads) {
  std::vector<std::string> errors;
  auto check = [&](bool ok, std::string message) {
    if (!ok) errors.push_back(std::move(message));
  };
  check(c.tile_count >= 2, "tile_count must be at least 2");
  check(c.spare_count < c.tile_count, "spare_count must leave at least one active tile");
  check(c.checkpoint_interval > 0, "non-positive checkpoint interval");
  check(c.watchdog_timeout > 0, "non-positive watchdog timeout");
  check(c.watchdog_timeout > c.checkpoint_interval, "watchdog must exceed checkpoint interval");
  check(c.fault_counter_threshold >= 1, "fault_counter_threshold must be at least 1");
  check(c.variant_count >= 1, "variant_count must be at least 1");
  check(c.region_count >= 1 && c.region_count <= kMaxRegions, "region_count must be in 1..64");
  check(c.variant_region_fraction > 0 && c.variant_region_fraction <= 1,
        "variant_region_fraction must be in (0, 1]");
  if (!c.variants.empty()) {
    check(c.variants.size() == c.variant_count, "explicit variants must match variant_count");
    for (const auto& v : c.variants) {
      for (auto r : v) check(r < c.region_count, "variant region " + std::to_string(r) + " outside region_count");
    }
  }
  check(c.per_tile_active_power >= 0 && c.per_tile_gated_power >= 0 && c.static_power >= 0,
        "powers must be non-negative");
  check(c.report_ring_size >= 1, "report_ring_size must be at least 1");
  check(c.tile_capacity >= 1, "tile_capacity must be at least 1");
  check(c.vote_window > 0, "non-positive vote window");
  check(c.command_latency > 0, "non-positive command latency");
  check(c.vote_window + c.command_latency < c.checkpoint_interval,
        "vote window plus command latency must fit in one checkpoint interval");
  check(c.partial_reconfig_intervals >= 1 && c.full_reconfig_intervals >= 1,
        "reconfiguration downtime must be at least one interval");
  check(c.selftest_detection_probability >= 0 && c.selftest_detection_probability <= 1,
        "selftest_detection_probability must be in [0, 1]");
  check(c.scrub_period >= 0, "negative scrub period");
  check(c.memory_read_offset >= 0 && c.memory_read_offset < c.checkpoint_interval,
        "memory_read_offset must lie within one checkpoint interval");
  check(c.babble_latency >= 0, "negative babble latency");
  check(c.phase_offsets.size() <= c.tile_count, "more phase offsets than tiles");
  for (auto p : c.phase_offsets) {
    check(p >= 0 && p < c.vote_window, "phase offset " + std::to_string(p) + " outside [0, vote_window)");
  }
  check(c.checkpoints >= 1, "checkpoints must be at least 1");
  check(c.interval_seconds > 0, "non-positive interval_seconds");

  std::set<ThreadId> ids;
  for (const auto& t : threads) {
    const auto name = "thread " + std::to_string(t.id);
    check(ids.insert(t.id).second, "duplicate thread id " + std::to_string(t.id));
    check(t.required_replication >= 1, name + ": replication must be at least 1");
    check(t.required_replication <= c.tile_count,
          name + ": infeasible replication " + std::to_string(t.required_replication) + " > tile_count " +
              std::to_string(c.tile_count));
    check(t.required_replication <= c.tile_count - std::min(c.spare_count, c.tile_count),
          name + ": infeasible replication " + std::to_string(t.required_replication) +
              " > active tiles at boot");
    check(t.load >= 1, name + ": load must be at least 1");
    check(t.state_words >= 1, name + ": state_words must be at least 1");
    check(t.init_words.size() <= t.state_words, name + ": more init words than state_words");
    check(t.checkpoint_delay >= 0, name + ": negative checkpoint delay");
  }
  return errors;
}

std::vector<std::string> validate_scenario(const Scenario& s) {
  auto errors = validate_config(s.system, s.threads);
  if (!errors.empty()) return errors;
  try {
    (void)s.weights.normalized();
  } catch (const std::invalid_argument& e) {
    errors.push_back(std::string("weights: ") + e.what());
  }
  try {
    ThreadCatalog catalog(s.threads);
    (void)schedule_campaign(s.faults, s.system.rng_seed, s.system, catalog);
  } catch (const CampaignError& e) {
    errors.push_back(std::string("faults: ") + e.what());
  }
  for (const auto& e : s.faults.events) {
    if (e.onset < 0) errors.push_back("faults: negative onset");
  }
  for (const auto& c : s.commands) {
    const auto where = "command at t=" + std::to_string(c.time);
    if (c.time < 0) errors.push_back(where + ": negative time");
    switch (c.kind) {
      case OperatorCommandKind::SetObjectiveWeights:
        try {
          (void)c.weights.normalized();
        } catch (const std::invalid_argument& e) {
          errors.push_back(where + ": " + e.what());
        }
        break;
      case OperatorCommandKind::SetThreadReplication: {
        const bool known = std::any_of(s.threads.begin(), s.threads.end(),
                                       [&](const ThreadSpec& t) { return t.id == c.thread; });
        if (!known) errors.push_back(where + ": unknown thread " + std::to_string(c.thread));
        if (c.replication < 1 || c.replication > s.system.tile_count) {
          errors.push_back(where + ": infeasible replication");
        }
        break;
      }
      case OperatorCommandKind::GateTile:
      case OperatorCommandKind::UngateTile:
        if (c.tile >= s.system.tile_count) errors.push_back(where + ": unknown tile");
        break;
      case OperatorCommandKind::ForceCheckpoint:
        break;
    }
  }
  for (const auto& f : s.line_fixtures) {
    if (f.streams.empty()) errors.push_back("line fixture " + f.name + ": no streams");
  }
  return errors;
}

Scenario parse_scenario(std::string_view text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw ScenarioError({std::string("syntax: ") + e.what()});
  }
  std::vector<std::string> errors;
  Scenario s;
  {
    Reader r(j, "scenario", errors);
    int version = 0;
    r.get("schema_version", version);
    if (version != kScenarioSchemaVersion) {
      throw ScenarioError({"unsupported schema_version " + std::to_string(version) + " (expected " +
                           std::to_string(kScenarioSchemaVersion) + ")"});
    }
    r.get("name", s.name);
    if (const auto* sys = r.child("system")) read_system(*sys, s.system, errors);
    each(r.child("threads"), "threads", errors,
         [&](const ordered_json& t, const std::string& w) { s.threads.push_back(read_thread(t, w, errors)); });
    if (const auto* w = r.child("weights")) {
      Reader wr(*w, "weights", errors);
      read_weights(wr, s.weights);
    }
    if (const auto* f = r.child("faults")) {
      Reader fr(*f, "faults", errors);
      each(fr.child("events"), "faults.events", errors, [&](const ordered_json& e, const std::string& w) {
        s.faults.events.push_back(read_event(e, w, errors));
      });
      each(fr.child("generators"), "faults.generators", errors, [&](const ordered_json& g, const std::string& w) {
        s.faults.generators.push_back(read_generator(g, w, errors));
      });
    }
    each(r.child("commands"), "commands", errors, [&](const ordered_json& c, const std::string& w) {
      s.commands.push_back(read_command(c, w, errors));
    });
    if (const auto* io = r.child("io")) {
      Reader ior(*io, "io", errors);
      each(ior.child("line_fixtures"), "io.line_fixtures", errors, [&](const ordered_json& f, const std::string& w) {
        LineFixture fx;
        Reader fr(f, w, errors);
        fr.get("name", fx.name);
        each(fr.child("streams"), w + ".streams", errors, [&](const ordered_json& st, const std::string& sw) {
          fx.streams.push_back(read_stream(st, sw, errors));
        });
        s.line_fixtures.push_back(std::move(fx));
      });
      each(ior.child("packet_fixtures"), "io.packet_fixtures", errors, [&](const ordered_json& f, const std::string& w) {
        PacketFixture fx;
        Reader fr(f, w, errors);
        fr.get("name", fx.name);
        fr.get("timeout", fx.policy.timeout);
        each(fr.child("packets"), w + ".packets", errors, [&](const ordered_json& p, const std::string& pw) {
          io::Packet packet;
          Reader pr(p, pw, errors);
          pr.get("sequence", packet.sequence);
          pr.get("payload", packet.payload);
          pr.get("source", packet.source);
          pr.get("arrival", packet.arrival);
          fx.packets.push_back(std::move(packet));
        });
        s.packet_fixtures.push_back(std::move(fx));
      });
    }
  }
  if (!errors.empty()) throw ScenarioError(std::move(errors));
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError({"cannot open " + path.string()});
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str());
}

std::string dump_scenario(const Scenario& s) {
  ordered_json j;
  j["schema_version"] = kScenarioSchemaVersion;
  j["name"] = s.name;
  j["system"] = write_system(s.system);
  j["threads"] = ordered_json::array();
  for (const auto& t : s.threads) j["threads"].push_back(write_thread(t));
  j["weights"] = {{"performance", s.weights.performance},
                  {"energy", s.weights.energy},
                  {"robustness", s.weights.robustness}};
  ordered_json faults;
  faults["events"] = ordered_json::array();
  for (const auto& e : s.faults.events) faults["events"].push_back(write_event(e));
  faults["generators"] = ordered_json::array();
  for (const auto& g : s.faults.generators) faults["generators"].push_back(write_generator(g));
  j["faults"] = faults;
  j["commands"] = ordered_json::array();
  for (const auto& c : s.commands) j["commands"].push_back(write_command(c));
  ordered_json io;
  io["line_fixtures"] = ordered_json::array();
  for (const auto& f : s.line_fixtures) {
    ordered_json fx;
    fx["name"] = f.name;
    fx["streams"] = ordered_json::array();
    for (const auto& st : f.streams) fx["streams"].push_back(write_stream(st));
    io["line_fixtures"].push_back(fx);
  }
  io["packet_fixtures"] = ordered_json::array();
  for (const auto& f : s.packet_fixtures) {
    ordered_json fx;
    fx["name"] = f.name;
    fx["timeout"] = f.policy.timeout;
    fx["packets"] = ordered_json::array();
    for (const auto& p : f.packets) {
      fx["packets"].push_back(
          {{"sequence", p.sequence}, {"payload", p.payload}, {"source", p.source}, {"arrival", p.arrival}});
    }
    io["packet_fixtures"].push_back(fx);
  }
  j["io"] = io;
  return j.dump(2) + "\n";
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << dump_scenario(scenario);
}

}  // namespace obcsim
