#include <benchmark/benchmark.h>

#include "obcsim/io_voter.hpp"
#include "obcsim/rng.hpp"
#include "obcsim/voting.hpp"

using namespace obcsim;

static void BM_DecideMajority(benchmark::State& state) {
  const std::vector<TileId> members{0, 1, 2, 3, 4};
  std::vector<voting::ReportEntry> entries;
  for (auto t : members) entries.push_back({t, Checksum{t == 3 ? 7u : 9u}, voting::Absence::None, 0});
  for (auto _ : state) benchmark::DoNotOptimize(voting::decide_majority(1, 0, entries, members));
}
BENCHMARK(BM_DecideMajority);

static void BM_VoteLines(benchmark::State& state) {
  const auto length = static_cast<io::Cycle>(state.range(0));
  Rng rng(9);
  std::vector<io::LineStream> streams(3);
  for (std::size_t s = 0; s < streams.size(); ++s) {
    streams[s].tile = static_cast<TileId>(s);
    const io::Cycle begin = 100 + static_cast<io::Cycle>(s);
    bool level = false;
    for (io::Cycle k = 0; k < length; ++k) {
      const bool bit = rng.bernoulli(0.5);
      if (bit != level) streams[s].samples.emplace_back(begin + k, bit);
      level = bit;
    }
    streams[s].activity.push_back({begin, begin + length});
  }
  for (auto _ : state) benchmark::DoNotOptimize(io::vote_lines(streams, 4));
  state.SetItemsProcessed(state.iterations() * length);
}
BENCHMARK(BM_VoteLines)->Arg(64)->Arg(1024);
