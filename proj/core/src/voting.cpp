#include "obcsim/voting.hpp"

#include <algorithm>
#include <map>

namespace obcsim::voting {

std::string_view to_string(Absence absence) {
  switch (absence) {
    case Absence::None: return "none";
    case Absence::NoReport: return "no_report";
    case Absence::Disconnected: return "disconnected";
    case Absence::Late: return "late";
    case Absence::NotHeld: return "not_held";
  }
  return "?";
}

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::None: return "none";
    case Outcome::Masked: return "masked";
    case Outcome::DetectedRecoveredPending: return "detected_recovery_pending";
    case Outcome::SilentDataCorruption: return "silent_data_corruption";
    case Outcome::FalseAlarm: return "false_alarm";
  }
  return "?";
}

std::vector<ReportEntry> collect_reports(CheckpointSeq seq, const LockstepGroup& group,
                                         std::span<const Tile> tiles, Tick now) {
  std::vector<ReportEntry> entries;
  entries.reserve(group.members.size());
  for (auto member : group.members) {
    ReportEntry entry{member, std::nullopt, Absence::None, 0};
    const Tile& tile = tiles[member];
    const CheckpointReport* report = tile.state_memory().report_for(seq);
    if (!tile.connected()) {
      entry.absence = Absence::Disconnected;
    } else if (!report) {
      entry.absence = Absence::NoReport;
    } else if (report->emit_time > now) {
      entry.absence = Absence::Late;
    } else if (auto sum = report->checksum_of(group.thread)) {
      entry.checksum = *sum;
      entry.emit_time = report->emit_time;
    } else {
      entry.absence = Absence::NotHeld;
    }
    entries.push_back(entry);
  }
  return entries;
}

MajorityDecision decide_majority(CheckpointSeq seq, ThreadId thread,
                                 std::span<const ReportEntry> entries,
                                 std::span<const TileId> expected_members) {
  MajorityDecision d;
  d.seq = seq;
  d.thread = thread;

  std::map<TileId, Checksum> present;
  for (const auto& e : entries) {
    if (e.present()) present.emplace(e.tile, *e.checksum);
  }
  std::map<Checksum, std::size_t> votes;
  for (auto member : expected_members) {
    auto it = present.find(member);
    if (it == present.end()) {
      d.missing.insert(member);
    } else {
      ++votes[it->second];
      d.reported.emplace(member, it->second);
    }
  }

  const std::size_t quorum = expected_members.size();
  for (const auto& [value, count] : votes) {
    if (2 * count > quorum) d.agreed = value;
  }
  if (!d.agreed) {
    d.undecidable = true;
    return d;
  }
  for (auto member : expected_members) {
    auto it = present.find(member);
    if (it == present.end()) continue;
    (it->second == *d.agreed ? d.agreeing : d.dissenting).insert(member);
  }
  return d;
}

Outcome classify_outcome(const MajorityDecision& decision, const GroundTruth& truth) {
  if (decision.undecidable) return Outcome::DetectedRecoveredPending;
  if (truth.oracle && decision.agreed && *decision.agreed != *truth.oracle) {
    return Outcome::SilentDataCorruption;
  }
  if (decision.clean()) return Outcome::None;
  return truth.fault_injected ? Outcome::Masked : Outcome::FalseAlarm;
}

}  // namespace obcsim::voting
