#pragma once

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "obcsim/engine.hpp"
#include "obcsim/scenario.hpp"

namespace obcsim::test {

inline ThreadSpec make_thread(ThreadId id, std::uint32_t criticality, std::uint32_t replication,
                              std::uint32_t load, BehaviorKind kind = BehaviorKind::Mix,
                              std::uint32_t words = 4) {
  ThreadSpec t;
  t.id = id;
  t.name = "t" + std::to_string(id);
  t.criticality = criticality;
  t.required_replication = replication;
  t.load = load;
  t.behavior = {kind, 3 + 2 * id};
  t.state_words = words;
  for (std::uint32_t w = 0; w < words; ++w) t.init_words.push_back(0x100 * (id + 1) + w);
  return t;
}

/// Four tiles, three active plus one spare, three triplicated threads.
inline Scenario nominal_scenario(std::uint32_t checkpoints = 30) {
  Scenario s;
  s.name = "nominal";
  s.system.tile_count = 4;
  s.system.spare_count = 1;
  s.system.checkpoints = checkpoints;
  s.system.rng_seed = 42;
  s.threads = {make_thread(0, 0, 3, 1), make_thread(1, 1, 3, 1, BehaviorKind::Counter, 2),
               make_thread(2, 2, 3, 2, BehaviorKind::Mix, 8)};
  return s;
}

inline FaultEvent fault(FaultId id, Tick onset, FaultKind kind, TileId tile,
                        std::optional<ThreadId> thread = std::nullopt,
                        Persistence persistence = Persistence::Transient) {
  FaultEvent e;
  e.id = id;
  e.onset = onset;
  e.kind = kind;
  e.persistence = persistence;
  e.target.tile = tile;
  e.target.thread = thread;
  e.target.word = 1;
  e.target.bit = 5;
  return e;
}

inline std::vector<TraceRecord> of_kind(const std::vector<TraceRecord>& trace, std::string_view kind) {
  std::vector<TraceRecord> out;
  std::copy_if(trace.begin(), trace.end(), std::back_inserter(out),
               [&](const TraceRecord& r) { return r.kind == kind; });
  return out;
}

inline std::string data_path(std::string_view name) { return std::string(OBCSIM_TEST_DATA_DIR) + "/" + std::string(name); }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace obcsim::test
