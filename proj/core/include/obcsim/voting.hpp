#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "obcsim/tile.hpp"
#include "obcsim/types.hpp"

namespace obcsim::voting {

/// Replicas of one thread and the tiles the mapping places them on.
struct LockstepGroup {
  ThreadId thread = 0;
  std::vector<TileId> members;  // ascending
};

enum class Absence { None, NoReport, Disconnected, Late, NotHeld };
std::string_view to_string(Absence absence);

struct ReportEntry {
  TileId tile = 0;
  std::optional<Checksum> checksum;  // nullopt when absent
  Absence absence = Absence::None;
  Tick emit_time = 0;

  bool present() const { return checksum.has_value(); }
};

/// Reads each member's published report for `seq` through the read-only state
/// memory port. Reports from disconnected tiles, or not yet visible at `now`,
/// are recorded as absences.
std::vector<ReportEntry> collect_reports(CheckpointSeq seq, const LockstepGroup& group,
                                         std::span<const Tile> tiles, Tick now);

/// Strict-majority vote over the expected members. Absent members count
/// toward the quorum, so missing reports cannot shrink it.
MajorityDecision decide_majority(CheckpointSeq seq, ThreadId thread,
                                 std::span<const ReportEntry> entries,
                                 std::span<const TileId> expected_members);

enum class Outcome { None, Masked, DetectedRecoveredPending, SilentDataCorruption, FalseAlarm };
std::string_view to_string(Outcome outcome);

/// Simulator-only knowledge used to grade a decision.
struct GroundTruth {
  std::optional<Checksum> oracle;  // fault-free checksum for this thread and seq
  bool fault_injected = false;     // some fault touched the group since the last clean vote
};

Outcome classify_outcome(const MajorityDecision& decision, const GroundTruth& truth);

}  // namespace obcsim::voting
