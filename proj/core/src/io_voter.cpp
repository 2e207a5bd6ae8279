#include "obcsim/io_voter.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>

namespace obcsim::io {

bool LineStream::level_at(Cycle cycle) const {
  auto it = std::upper_bound(samples.begin(), samples.end(), cycle,
                             [](Cycle c, const std::pair<Cycle, bool>& s) { return c < s.first; });
  return it == samples.begin() ? false : std::prev(it)->second;
}

VoteResult vote_lines(std::span<const LineStream> streams, std::uint32_t fifo_depth) {
  if (streams.empty()) throw VoterError("no streams to vote");
  const auto transactions = streams.front().activity.size();
  for (const auto& s : streams) {
    if (s.activity.empty()) {
      throw VoterError("stream of tile " + std::to_string(s.tile) + " has no activity signaling");
    }
    if (s.activity.size() != transactions) throw VoterError("streams disagree on the transaction count");
  }

  VoteResult result;
  const auto n = streams.size();
  result.pass_through = n < 3;
  result.output.tile = streams.front().tile;

  for (std::size_t i = 0; i < transactions; ++i) {
    TransactionReport tx;
    tx.index = i;
    tx.start = streams.front().activity[i].begin;
    for (const auto& s : streams) {
      tx.start = std::min(tx.start, s.activity[i].begin);
      tx.length = std::max(tx.length, s.activity[i].length());
    }
    Cycle max_skew = 0;
    for (const auto& s : streams) {
      tx.skew.push_back(s.activity[i].begin - tx.start);
      max_skew = std::max(max_skew, tx.skew.back());
    }
    if (max_skew > static_cast<Cycle>(fifo_depth)) {
      tx.overflow = true;
      ++result.overflows;
      result.transactions.push_back(std::move(tx));
      continue;
    }

    std::set<std::size_t> dissenting;
    std::optional<bool> previous;
    for (Cycle k = 0; k < tx.length; ++k) {
      std::vector<bool> bits(n);
      std::size_t ones = 0;
      for (std::size_t j = 0; j < n; ++j) {
        bits[j] = streams[j].level_at(streams[j].activity[i].begin + k);
        ones += bits[j] ? 1 : 0;
      }
      bool out;
      if (result.pass_through) {
        out = bits[0];
      } else if (2 * ones != n) {
        out = 2 * ones > n;
      } else {
        out = bits[0];
        tx.tie = true;
      }
      for (std::size_t j = 0; j < n; ++j) {
        if (bits[j] != out) {
          ++tx.outvoted_bits;
          dissenting.insert(j);
        }
      }
      if (!previous || *previous != out) result.output.samples.emplace_back(tx.start + k, out);
      previous = out;
    }
    // Hold the line low after the transaction.
    if (previous && *previous) result.output.samples.emplace_back(tx.start + tx.length, false);
    result.output.activity.push_back({tx.start, tx.start + tx.length});
    tx.dissenting_streams.assign(dissenting.begin(), dissenting.end());
    result.outvoted_bits += tx.outvoted_bits;
    result.mismatch = result.mismatch || !dissenting.empty();
    result.transactions.push_back(std::move(tx));
  }
  return result;
}

DedupResult dedup_packets(std::span<const Packet> packets, const DedupPolicy& policy) {
  // Canonical order first.
  std::vector<Packet> sorted(packets.begin(), packets.end());
  std::sort(sorted.begin(), sorted.end(), [](const Packet& a, const Packet& b) {
    return std::tie(a.sequence, a.payload, a.arrival, a.source) <
           std::tie(b.sequence, b.payload, b.arrival, b.source);
  });

  DedupResult result;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const auto sequence = sorted[i].sequence;
    std::map<std::vector<std::uint8_t>, std::vector<const Packet*>> by_payload;
    for (; i < sorted.size() && sorted[i].sequence == sequence; ++i) {
      by_payload[sorted[i].payload].push_back(&sorted[i]);
    }

    struct Quorum {
      const std::vector<std::uint8_t>* payload;
      Cycle accepted_at;
      std::vector<TileId> sources;
    };
    std::vector<Quorum> quorate;
    for (const auto& [payload, group] : by_payload) {
      std::optional<Cycle> earliest;
      for (std::size_t a = 0; a < group.size(); ++a) {
        for (std::size_t b = a + 1; b < group.size(); ++b) {
          if (group[a]->source == group[b]->source) continue;
          if (group[b]->arrival - group[a]->arrival > policy.timeout) continue;
          const Cycle at = std::max(group[a]->arrival, group[b]->arrival);
          earliest = earliest ? std::min(*earliest, at) : at;
        }
      }
      if (!earliest) continue;
      std::set<TileId> sources;
      for (const auto* p : group) sources.insert(p->source);
      quorate.push_back({&payload, *earliest, {sources.begin(), sources.end()}});
    }

    if (quorate.empty()) {
      result.expired.push_back(sequence);
    } else if (quorate.size() > 1) {
      result.conflicts.push_back(sequence);
    } else {
      const auto& winner = quorate.front();
      result.accepted.push_back({sequence, *winner.payload, winner.accepted_at, winner.sources});
      std::set<std::pair<TileId, std::vector<std::uint8_t>>> logged;
      for (const auto& [payload, group] : by_payload) {
        if (payload == *winner.payload) continue;
        for (const auto* p : group) {
          if (logged.emplace(p->source, payload).second) result.dissents.push_back({sequence, p->source, payload});
        }
      }
    }
  }
  return result;
}

}  // namespace obcsim::io
