#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "obcsim/types.hpp"

namespace obcsim::io {

using Cycle = std::int64_t;

/// Chip-select asserted over [begin, end).
struct ActivityWindow {
  Cycle begin = 0;
  Cycle end = 0;
  Cycle length() const { return end - begin; }
  bool operator==(const ActivityWindow&) const = default;
};

/// One replica's view of a low-speed output line. Samples are level
/// changes: the line holds its last sampled level until the next sample.
struct LineStream {
  TileId tile = 0;
  std::vector<std::pair<Cycle, bool>> samples;  // cycle ascending
  std::vector<ActivityWindow> activity;         // ascending, non-overlapping

  bool level_at(Cycle cycle) const;
  bool operator==(const LineStream&) const = default;
};

class VoterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TransactionReport {
  std::size_t index = 0;
  Cycle start = 0;                 // earliest chip-select edge
  Cycle length = 0;                // longest window among the streams
  std::vector<Cycle> skew;         // per stream, relative to start
  bool overflow = false;           // skew beyond the FIFO depth; output suppressed
  bool tie = false;                // an even split was resolved toward stream 0
  std::uint64_t outvoted_bits = 0; // stream bits differing from the output
  std::vector<std::size_t> dissenting_streams;
};

struct VoteResult {
  LineStream output;  // one sample per voted cycle
  std::vector<TransactionReport> transactions;
  bool pass_through = false;  // fewer than 3 streams: compared, not masked
  bool mismatch = false;      // some stream disagreed with the output
  std::uint64_t overflows = 0;
  std::uint64_t outvoted_bits = 0;
};

/// Per-line majority over replicated streams. The i-th activity window of
/// every stream forms transaction i; windows are aligned on their
/// chip-select edge when the skew fits in `fifo_depth` cycles.
/// Throws VoterError on an empty input, a stream without activity
/// signaling, or streams disagreeing on the transaction count.
VoteResult vote_lines(std::span<const LineStream> streams, std::uint32_t fifo_depth);

struct Packet {
  std::uint64_t sequence = 0;
  std::vector<std::uint8_t> payload;
  TileId source = 0;
  Cycle arrival = 0;
  bool operator==(const Packet&) const = default;
};

struct DedupPolicy {
  Cycle timeout = 100;  // replicas must arrive within this many cycles
  bool operator==(const DedupPolicy&) const = default;
};

struct AcceptedCommand {
  std::uint64_t sequence = 0;
  std::vector<std::uint8_t> payload;
  Cycle accepted_at = 0;
  std::vector<TileId> sources;  // ascending, distinct
  bool operator==(const AcceptedCommand&) const = default;
};

struct Dissent {
  std::uint64_t sequence = 0;
  TileId source = 0;
  std::vector<std::uint8_t> payload;
  bool operator==(const Dissent&) const = default;
};

struct DedupResult {
  std::vector<AcceptedCommand> accepted;  // ascending sequence id
  std::vector<Dissent> dissents;
  std::vector<std::uint64_t> conflicts;  // sequence ids rejected for conflict
  std::vector<std::uint64_t> expired;    // sequence ids without a timely second replica
  bool operator==(const DedupResult&) const = default;
};

/// Replica-aware command deduplication for a subsystem controller. The
/// result depends only on the packet multiset, not on arrival order in the
/// input.
DedupResult dedup_packets(std::span<const Packet> packets, const DedupPolicy& policy);

}  // namespace obcsim::io
