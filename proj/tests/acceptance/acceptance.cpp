// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Every check compares against an oracle written here, not against
// the simulator's own bookkeeping.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "fixtures.hpp"
#include "line_oracle.hpp"
#include "obcsim/engine.hpp"
#include "obcsim/faults.hpp"
#include "obcsim/io_voter.hpp"
#include "obcsim/ladder.hpp"
#include "obcsim/mapper.hpp"
#include "obcsim/metrics.hpp"
#include "obcsim/scenario.hpp"

using namespace obcsim;
using test::of_kind;

namespace {

struct Verdict {
  std::uint64_t cases = 0;
  std::uint64_t violations = 0;
  std::string first;  // first violation, for the log
  std::string note;   // coverage summary

  void fail(std::string why) {
    if (violations++ == 0) first = std::move(why);
  }
  void check(bool ok, const std::function<std::string()>& why) {
    ++cases;
    if (!ok) fail(why());
  }
};

std::set<TileId> flagged_in(const TraceRecord& decision) {
  std::set<TileId> out;
  for (auto t : decision.list_field("dissenting")) out.insert(static_cast<TileId>(t));
  for (auto t : decision.list_field("missing")) out.insert(static_cast<TileId>(t));
  return out;
}

// Criterion 1 ---------------------------------------------------------------

std::vector<TileId> hosts_of(const Scenario& s, ThreadId thread) {
  Simulation sim(s);
  std::vector<TileId> out;
  for (const auto& t : sim.tiles()) {
    if (t.holds(thread)) out.push_back(t.id());
  }
  return out;
}

Verdict masking_sweep() {
  Verdict v;
  auto base = test::nominal_scenario(30);
  Simulation twin(base);
  const auto twin_result = twin.run();
  std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> twin_agreed;  // (seq, thread) -> checksum
  for (const auto& d : of_kind(twin_result.trace, "decision")) {
    twin_agreed[{*d.int_field("seq"), *d.int_field("thread")}] = *d.int_field("agreed");
  }

  const std::vector<std::pair<FaultKind, std::uint32_t>> kinds = {
      {FaultKind::TransientStateFlip, 1}, {FaultKind::ChecksumCorruption, 1},
      {FaultKind::Hang, 1}, {FaultKind::MemoryUpset, 2}};
  const auto interval = base.system.checkpoint_interval;
  for (const auto& [kind, bound] : kinds) {
    for (TileId tile : hosts_of(base, 0)) {
      for (std::uint32_t k = 1; k <= 20; ++k) {
        auto s = base;
        // Onset inside interval k, so checkpoint k is the first that can see it.
        s.faults.events = {test::fault(0, static_cast<Tick>(k) * interval - interval / 2, kind, tile, 0)};
        Simulation sim(s);
        const auto r = sim.run();
        const auto label = [&, kind = kind, tile = tile] {
          return fmt::format("{} tile {} checkpoint {}", to_string(kind), tile, k);
        };

        std::optional<std::int64_t> detected_seq;
        std::set<TileId> flagged;
        for (const auto& d : of_kind(r.trace, "decision")) {
          const auto f = flagged_in(d);
          if (f.empty()) continue;
          if (!detected_seq) detected_seq = *d.int_field("seq");
          if (*d.int_field("seq") == *detected_seq) flagged.insert(f.begin(), f.end());
        }
        v.check(detected_seq && *detected_seq >= k && *detected_seq - k + 1 <= bound,
                [&] { return label() + ": not detected in time"; });
        v.check(flagged == std::set<TileId>{tile}, [&] { return label() + ": dissenter is not the injected tile"; });

        // Every voted checksum from the first clean round after detection on
        // equals the twin run, and so does every replica at the end.
        bool recovered_equal = true;
        std::optional<std::int64_t> first_clean;
        for (const auto& d : of_kind(r.trace, "decision")) {
          const auto seq = *d.int_field("seq");
          if (!detected_seq || seq <= *detected_seq) continue;
          if (!flagged_in(d).empty()) {
            if (first_clean) recovered_equal = false;
            continue;
          }
          if (!first_clean) first_clean = seq;
          if (d.int_field("agreed") != twin_agreed.at({seq, *d.int_field("thread")})) recovered_equal = false;
        }
        for (const auto& t : sim.tiles()) {
          for (const auto& replica : t.replicas()) {
            if (s.threads[replica.thread].checksum(replica.state) != twin.golden_checksum(replica.thread)) {
              recovered_equal = false;
            }
          }
        }
        v.check(first_clean && recovered_equal, [&] { return label() + ": post-recovery checksums differ from twin"; });
      }
    }
  }
  return v;
}

// Criterion 2 ---------------------------------------------------------------

Verdict replacement_law(const Scenario& campaign, std::uint64_t runs) {
  Verdict v;
  const auto threshold = campaign.system.fault_counter_threshold;
  std::uint64_t replacements = 0, defunct_total = 0;
  for (std::uint64_t seed = 1; seed <= runs; ++seed) {
    const auto r = run(campaign, {TraceLevel::Normal, seed});
    std::map<TileId, std::uint32_t> increments;
    std::set<TileId> defunct;
    for (const auto& rec : r.trace) {
      if (rec.kind == "counter") {
        const auto reason = rec.string_field("reason");
        if (reason == "reset") {
          increments[*rec.tile] = 0;
        } else {
          ++increments[*rec.tile];
          v.check(*rec.int_field("value") == increments[*rec.tile],
                  [&] { return fmt::format("seed {} tile {}: counter value skips", seed, *rec.tile); });
        }
      } else if (rec.kind == "replace") {
        ++replacements;
        v.check(increments[*rec.tile] == threshold, [&] {
          return fmt::format("seed {} tile {}: replaced after {} increments", seed, *rec.tile, increments[*rec.tile]);
        });
      } else if (rec.kind == "ladder_result" && rec.string_field("result") == "defunct") {
        defunct.insert(*rec.tile);
        ++defunct_total;
      } else if (rec.kind == "mapping") {
        for (const auto& f : rec.fields) {
          if (f.key.rfind("thread_", 0) != 0) continue;
          for (auto t : std::get<std::vector<std::uint64_t>>(f.value)) {
            v.check(!defunct.contains(static_cast<TileId>(t)),
                    [&] { return fmt::format("seed {}: defunct tile {} reassigned at {}", seed, t, rec.time); });
          }
        }
      } else if ((rec.kind == "spare_activated" || rec.kind == "boot" || rec.kind == "reconnect") &&
                 rec.tile && defunct.contains(*rec.tile)) {
        v.fail(fmt::format("seed {}: defunct tile {} returned via {}", seed, *rec.tile, rec.kind));
      }
    }
  }
  if (replacements == 0 || defunct_total == 0) v.fail("campaign never replaced or retired a tile");
  v.note = fmt::format("{} replacements, {} defunct tiles", replacements, defunct_total);
  return v;
}

// Criterion 3 ---------------------------------------------------------------

Verdict ladder_exhaustive() {
  Verdict v;
  auto s = test::nominal_scenario();
  s.system.region_count = 10;
  s.system.variant_count = 3;
  s.system.variants = {{0, 1, 2, 3, 4, 5}, {4, 5, 6, 7, 8, 9}, {0, 2, 4, 6, 8, 9}};
  const ThreadCatalog catalog(s.threads);
  const auto variants = make_variants(s.system, 0);

  for (unsigned subset = 0; subset < (1u << s.system.region_count); ++subset) {
    Tile tile(0, s.system, catalog, variants);
    const std::vector<ThreadId> held{0, 1, 2};
    tile.boot(held, 0, 0);
    MemorySubsystem memory;
    for (RegionId region = 0; region < s.system.region_count; ++region) {
      if (!(subset & (1u << region))) continue;
      auto e = test::fault(region, 0, FaultKind::PermanentRegionFault, 0, std::nullopt, Persistence::Permanent);
      e.target.region = region;
      FaultInjector::inject(e, tile, memory);
    }

    // Oracle: first variant, in ladder order from variant 0, whose regions
    // avoid every defect.
    std::optional<std::uint32_t> clean_at;
    for (std::uint32_t i = 0; i < 3 && !clean_at; ++i) {
      const auto& regions = s.system.variants[i];
      if (std::none_of(regions.begin(), regions.end(), [&](RegionId r) { return (subset >> r) & 1u; })) clean_at = i;
    }

    Rng rng(subset);
    const auto out = stage2_ladder(tile, rng, 1.0);
    const auto label = [&] { return fmt::format("defects {:#05x}", subset); };
    if (clean_at) {
      v.check(out.recovered && out.variant == *clean_at && out.partial_attempts == *clean_at + 1 &&
                  out.partial_attempts <= 3 && out.full_attempts == 0 && tile.health() == TileHealth::Healthy,
              [&] { return label() + ": expected recovery on variant " + std::to_string(*clean_at); });
    } else {
      v.check(!out.recovered && out.partial_attempts == 3 && out.full_attempts == 1 &&
                  tile.health() == TileHealth::Defunct,
              [&] { return label() + ": expected Defunct after one full attempt"; });
    }
  }
  return v;
}

// Criterion 4 ---------------------------------------------------------------

struct ThreadShape {
  std::uint32_t criticality, replication, load;
};

Verdict stage3_grid() {
  std::vector<ThreadShape> shapes;
  for (std::uint32_t c = 0; c < 3; ++c)
    for (std::uint32_t r = 1; r <= 3; ++r)
      for (std::uint32_t l = 1; l <= 2; ++l) shapes.push_back({c, r, l});

  // Multisets of thread shapes, each materialized with ids in ascending and
  // in reversed shape order so id tie-breaks are exercised both ways.
  std::vector<std::vector<ThreadSpec>> instances;
  std::vector<std::size_t> pick;
  std::function<void(std::size_t)> grow = [&](std::size_t from) {
    if (!pick.empty()) {
      for (bool reversed : {false, true}) {
        std::vector<ThreadSpec> threads;
        for (std::size_t i = 0; i < pick.size(); ++i) {
          const auto& sh = shapes[pick[reversed ? pick.size() - 1 - i : i]];
          auto t = test::make_thread(static_cast<ThreadId>(i), sh.criticality, sh.replication, sh.load);
          threads.push_back(std::move(t));
        }
        instances.push_back(std::move(threads));
      }
    }
    if (pick.size() == 5) return;
    for (std::size_t k = from; k < shapes.size(); ++k) {
      pick.push_back(k);
      grow(k);
      pick.pop_back();
    }
  };
  grow(0);

  const std::vector<std::uint32_t> capacities{2, 4};
  std::vector<Verdict> partial(std::max(1u, std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  const auto total = instances.size() * 4 * capacities.size();
  auto worker = [&](Verdict& v) {
    for (std::size_t job = next++; job < total; job = next++) {
      const auto& threads = instances[job / (4 * capacities.size())];
      const auto tile_count = static_cast<std::uint32_t>(1 + (job / capacities.size()) % 4);
      const auto capacity = capacities[job % capacities.size()];
      std::vector<TileId> tiles(tile_count);
      for (TileId t = 0; t < tile_count; ++t) tiles[t] = t;
      mapping::MapperOptions options;
      options.capacity = capacity;
      const auto mapped = mapping::compute_mapping(tiles, threads, {}, options);
      const auto oracle = mapping::oracle_exhaustive(tiles, threads, capacity);
      v.check(mapping::satisfaction_vector(mapped, threads) == oracle.satisfaction, [&] {
        std::string desc;
        for (const auto& t : threads)
          desc += fmt::format("(c{} r{} l{})", t.criticality, t.required_replication, t.load);
        return fmt::format("{} tiles cap {} threads {}", tile_count, capacity, desc);
      });
    }
  };
  std::vector<std::thread> pool;
  for (auto& p : partial) pool.emplace_back(worker, std::ref(p));
  for (auto& t : pool) t.join();

  Verdict v;
  for (const auto& p : partial) {
    v.cases += p.cases;
    if (p.violations > 0 && v.violations == 0) v.first = p.first;
    v.violations += p.violations;
  }
  return v;
}

// Criterion 5 ---------------------------------------------------------------

Verdict voter_properties() {
  Verdict v;
  constexpr std::uint32_t depth = 4;
  Rng rng(2024);
  for (int i = 0; i < 10'000; ++i) {
    const auto c = test::random_line_case(rng, depth);
    const auto result = io::vote_lines(c.streams, depth);
    const auto length = static_cast<io::Cycle>(c.clean.size());
    io::LineStream voted = result.output;
    voted.activity = {{result.transactions.at(0).start, result.transactions.at(0).start + length}};
    v.check(!result.transactions[0].overflow &&
                test::window_bits(voted, 0, length) == test::aligned_majority(c.streams, 0, length) &&
                test::window_bits(voted, 0, length) == c.clean,
            [&] { return fmt::format("fixture {}: voted output differs from aligned majority", i); });
  }
  // Skew beyond the FIFO depth must always be flagged.
  for (int i = 0; i < 10'000; ++i) {
    auto c = test::random_line_case(rng, depth);
    const auto extra = static_cast<io::Cycle>(depth + 1 + rng.below(20));
    auto& late = c.streams[rng.below(3)];
    // The base spread is at most `depth`, so this shift always exceeds it.
    const auto shift = extra + static_cast<io::Cycle>(depth);
    for (auto& sample : late.samples) sample.first += shift;
    for (auto& w : late.activity) {
      w.begin += shift;
      w.end += shift;
    }
    const auto result = io::vote_lines(c.streams, depth);
    v.check(result.transactions.at(0).overflow && result.overflows == 1,
            [&] { return fmt::format("overflow fixture {}: skew not flagged", i); });
  }
  return v;
}

// Criterion 6 ---------------------------------------------------------------

std::map<std::string, std::string> run_to_files(const Scenario& s, const std::filesystem::path& dir) {
  std::filesystem::remove_all(dir);
  const auto r = run(s, {TraceLevel::Verbose});
  write_metrics(r.metrics, dir);
  {
    std::ofstream out(dir / "trace.jsonl", std::ios::binary);
    out << r.trace_text();
  }
  std::map<std::string, std::string> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    files[entry.path().filename().string()] = test::read_file(entry.path().string());
  }
  return files;
}

Verdict determinism() {
  Verdict v;
  const auto tmp = std::filesystem::temp_directory_path() / "obcsim_acceptance_determinism";
  std::vector<std::filesystem::path> corpus;
  for (const auto& e : std::filesystem::directory_iterator(OBCSIM_TEST_DATA_DIR)) {
    if (e.path().extension() == ".json" && e.path().filename().string().rfind("invalid_", 0) != 0) {
      corpus.push_back(e.path());
    }
  }
  std::sort(corpus.begin(), corpus.end());
  for (const auto& path : corpus) {
    const auto s = load_scenario(path);
    const auto a = run_to_files(s, tmp / "a");
    const auto b = run_to_files(s, tmp / "b");
    v.check(a.size() == 6 && a == b, [&] { return path.filename().string() + ": outputs differ between runs"; });
  }
  std::filesystem::remove_all(tmp);
  if (corpus.empty()) v.fail("empty corpus");
  return v;
}

// Criterion 7 ---------------------------------------------------------------

Verdict power_calibration(double& watts) {
  Verdict v;
  const auto s = load_scenario(test::data_path("all_active.json"));
  const auto r = run(s, {TraceLevel::Summary});
  watts = r.metrics.mean_power_watts;
  bool all_clocked = true;
  for (const auto& rec : r.trace) all_clocked = all_clocked && rec.kind != "gate";
  v.check(all_clocked && s.system.tile_count == 4, [] { return std::string("not every tile stayed clocked"); });
  v.check(std::abs(watts - 1.92) <= 0.01, [&] { return fmt::format("mean power {:.4f} W", watts); });
  return v;
}

// Criterion 8 ---------------------------------------------------------------

Verdict degradation() {
  Verdict v;
  const auto s = load_scenario(test::data_path("degradation.json"));
  const auto r = run(s, {TraceLevel::Normal});
  std::map<ThreadId, const ThreadSpec*> spec;
  for (const auto& t : s.threads) spec[t.id] = &t;
  const auto critical = std::min_element(s.threads.begin(), s.threads.end(), [](const auto& a, const auto& b) {
                          return a.criticality < b.criticality;
                        })->id;

  std::set<TileId> defunct;
  for (const auto& rec : of_kind(r.trace, "ladder_result")) {
    if (rec.string_field("result") == "defunct") defunct.insert(*rec.tile);
  }
  v.check(defunct.size() == 2, [&] { return fmt::format("{} tiles defunct, expected 2", defunct.size()); });

  // Everything from the Stage-3 remap on, in trace order. The remap is
  // logged just ahead of the activation record.
  std::optional<Tick> stage3_at;
  std::vector<TraceRecord> after;
  for (const auto& rec : r.trace) {
    if (!stage3_at && ((rec.kind == "stage3" && rec.int_field("active") == 1) ||
                       (rec.kind == "mapping" && rec.string_field("reason") == "stage3"))) {
      stage3_at = rec.time;
    }
    if (stage3_at) after.push_back(rec);
  }
  v.check(!of_kind(after, "stage3").empty(), [] { return std::string("no Stage-3 activation record"); });
  v.check(stage3_at.has_value(), [] { return std::string("Stage 3 never activated"); });
  if (!stage3_at) return v;

  // Spares were exhausted: no spare activation after the last one.
  const auto spares = of_kind(r.trace, "spare_activated");
  v.check(!spares.empty() && spares.back().time <= *stage3_at, [] { return std::string("spare activated after Stage 3"); });

  // Replication of the critical thread at every later checkpoint.
  std::map<std::int64_t, std::uint64_t> critical_agreeing;
  std::set<std::int64_t> checkpoints_after;
  for (const auto& d : of_kind(after, "decision")) {
    checkpoints_after.insert(*d.int_field("seq"));
    if (static_cast<ThreadId>(*d.int_field("thread")) == critical) {
      critical_agreeing[*d.int_field("seq")] = d.list_field("agreeing").size();
    }
  }
  v.check(checkpoints_after.size() >= 50, [] { return std::string("too few checkpoints after Stage 3"); });
  for (auto seq : checkpoints_after) {
    const auto it = critical_agreeing.find(seq);
    v.check(it != critical_agreeing.end() && it->second >= 2,
            [&] { return fmt::format("checkpoint {}: critical thread below 2 replicas", seq); });
  }

  // Reduction order in every mapping from Stage 3 on: a thread short of its
  // replication has no free tile it could take by evicting only less
  // critical replicas.
  for (const auto& m : of_kind(after, "mapping")) {
    mapping::ThreadMapping mapped;
    std::map<TileId, std::vector<ThreadId>> hosted;
    for (const auto& [id, t] : spec) {
      for (auto tile : m.list_field("thread_" + std::to_string(id))) {
        mapped.placements[id].push_back(static_cast<TileId>(tile));
        hosted[static_cast<TileId>(tile)].push_back(id);
        v.check(!defunct.contains(static_cast<TileId>(tile)), [&] { return std::string("defunct tile in mapping"); });
      }
    }
    for (auto tile : m.list_field("tiles")) mapped.tiles.push_back(static_cast<TileId>(tile));
    for (const auto& [a, ta] : spec) {
      if (mapped.placements[a].size() >= ta->required_replication) continue;
      for (auto tile : mapped.tiles) {
        const auto& on = hosted[tile];
        if (std::find(on.begin(), on.end(), a) != on.end()) continue;
        std::uint32_t kept = 0;
        for (auto b : on) {
          if (spec[b]->criticality <= ta->criticality) kept += spec[b]->load;
        }
        v.check(kept + ta->load > s.system.tile_capacity, [&] {
          return fmt::format("t={}: thread {} short while tile {} holds only less critical work", m.time, a, tile);
        });
      }
    }
    v.check(!mapping::find_dominance_violation(mapped, s.threads, s.system.tile_capacity),
            [&] { return fmt::format("t={}: dominance violation", m.time); });
  }
  // The first Stage-3 mapping takes replicas from the least critical thread.
  const auto least = std::max_element(s.threads.begin(), s.threads.end(), [](const auto& a, const auto& b) {
                       return a.criticality < b.criticality;
                     });
  const auto first_mapping = of_kind(after, "mapping");
  v.check(!first_mapping.empty() &&
              first_mapping.front().list_field("thread_" + std::to_string(least->id)).size() < least->required_replication,
          [] { return std::string("least critical thread kept its replication"); });
  v.check(!r.metrics.critical_loss, [] { return std::string("critical loss reported"); });
  return v;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const Verdict& v, double seconds, const std::string& extra = {}) {
    const bool ok = v.violations == 0 && v.cases > 0;
    failures += ok ? 0 : 1;
    fmt::print("[{}] criterion {} {}: {} cases, {} violations, {:.1f}s{}{}\n", ok ? "PASS" : "FAIL", id, name, v.cases,
               v.violations, seconds, v.note.empty() ? extra : ", " + v.note + extra, ok ? "" : " first: " + v.first);
    std::fflush(stdout);
  };
  auto timed = [&](int id, const char* name, auto&& body) {
    const auto start = std::chrono::steady_clock::now();
    const Verdict v = body();
    const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
    report(id, name, v, took.count());
  };

  timed(1, "single-fault masking sweep", masking_sweep);
  timed(2, "threshold/replacement law", [] {
    return replacement_law(load_scenario(test::data_path("random_campaign.json")), 1000);
  });
  timed(3, "stage-2 ladder exhaustive", ladder_exhaustive);
  timed(4, "stage-3 oracle equivalence", stage3_grid);
  timed(5, "io voter properties", voter_properties);
  timed(6, "determinism over corpus", determinism);
  {
    double watts = 0;
    const auto start = std::chrono::steady_clock::now();
    const auto v = power_calibration(watts);
    const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
    report(7, "energy calibration", v, took.count(), fmt::format(", {:.4f} W", watts));
  }
  timed(8, "degradation end-to-end", degradation);
  return failures == 0 ? 0 : 1;
}
