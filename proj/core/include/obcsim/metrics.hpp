#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "obcsim/types.hpp"

namespace obcsim {

enum class FaultOutcome { Masked, Recovered, Unrecovered, Silent, NoEffect };
std::string_view to_string(FaultOutcome outcome);

struct FaultOutcomeRow {
  FaultEvent event;
  FaultOutcome outcome = FaultOutcome::NoEffect;
  std::optional<std::uint32_t> detection_latency;  // checkpoints; 1 = first checkpoint after onset
  std::optional<std::uint32_t> recovery_latency;   // checkpoints until agreement is restored
};

struct ThreadAvailability {
  std::uint64_t satisfied = 0;  // checkpoints at required replication with agreement
  std::uint64_t total = 0;
  double fraction() const { return total == 0 ? 1.0 : static_cast<double>(satisfied) / static_cast<double>(total); }
};

struct IoVoterStats {
  std::uint64_t line_transactions = 0;
  std::uint64_t line_overflows = 0;
  std::uint64_t outvoted_bits = 0;
  std::uint64_t packets_accepted = 0;
  std::uint64_t packet_conflicts = 0;
  std::uint64_t packet_dissents = 0;
  std::uint64_t packets_expired = 0;
};

struct RunMetrics {
  std::vector<FaultOutcomeRow> faults;
  std::map<ThreadId, ThreadAvailability> availability;
  std::map<std::uint32_t, std::uint64_t> recovery_latency_histogram;
  /// Named counters (replacements, ladder outcomes, defunct tiles, ...).
  std::map<std::string, std::uint64_t> counters;
  double duration_seconds = 0;
  double energy_joules = 0;
  double mean_power_watts = 0;
  double mean_report_latency = 0;  // ticks from slot to report visibility
  IoVoterStats io;
  bool critical_loss = false;
};

/// Writes outcomes.csv, availability.csv, summary.csv,
/// recovery_latency.csv, and io_voter.csv into `dir`.
void write_metrics(const RunMetrics& metrics, const std::filesystem::path& dir);

/// Renders each metrics table as CSV text, keyed by file name.
std::map<std::string, std::string> render_metrics(const RunMetrics& metrics);

/// Reads a summary.csv back as (metric, value) pairs.
std::map<std::string, std::string> read_summary(const std::filesystem::path& file);

}  // namespace obcsim
