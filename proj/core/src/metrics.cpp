#include "obcsim/metrics.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace obcsim {

std::string_view to_string(FaultOutcome outcome) {
  switch (outcome) {
    case FaultOutcome::Masked: return "Masked";
    case FaultOutcome::Recovered: return "Recovered";
    case FaultOutcome::Unrecovered: return "Unrecovered";
    case FaultOutcome::Silent: return "Silent";
    case FaultOutcome::NoEffect: return "NoEffect";
  }
  return "?";
}

namespace {

std::string target_string(const FaultTarget& t) {
  std::string out = fmt::format("tile{}", t.tile);
  if (t.thread) out += fmt::format("/thread{}/w{}b{}", *t.thread, t.word, t.bit);
  if (t.region) out += fmt::format("/region{}", *t.region);
  return out;
}

std::string opt(const std::optional<std::uint32_t>& v) { return v ? std::to_string(*v) : std::string(); }

}  // namespace

std::map<std::string, std::string> render_metrics(const RunMetrics& m) {
  std::map<std::string, std::string> out;

  std::string outcomes = "event_id,kind,persistence,target,onset,outcome,detection_latency,recovery_latency\n";
  for (const auto& row : m.faults) {
    outcomes += fmt::format("{},{},{},{},{},{},{},{}\n", row.event.id, to_string(row.event.kind),
                            row.event.persistence == Persistence::Permanent ? "permanent" : "transient",
                            target_string(row.event.target), row.event.onset, to_string(row.outcome),
                            opt(row.detection_latency), opt(row.recovery_latency));
  }
  out["outcomes.csv"] = std::move(outcomes);

  std::string availability = "thread,satisfied,total,availability\n";
  for (const auto& [thread, a] : m.availability) {
    availability += fmt::format("{},{},{},{:.6f}\n", thread, a.satisfied, a.total, a.fraction());
  }
  out["availability.csv"] = std::move(availability);

  std::string summary = "metric,value\n";
  summary += fmt::format("duration_seconds,{:.6f}\n", m.duration_seconds);
  summary += fmt::format("energy_joules,{:.6f}\n", m.energy_joules);
  summary += fmt::format("mean_power_watts,{:.6f}\n", m.mean_power_watts);
  summary += fmt::format("mean_report_latency_ticks,{:.6f}\n", m.mean_report_latency);
  summary += fmt::format("critical_loss,{}\n", m.critical_loss ? 1 : 0);
  for (const auto& [name, value] : m.counters) summary += fmt::format("{},{}\n", name, value);
  out["summary.csv"] = std::move(summary);

  std::string histogram = "latency_checkpoints,count\n";
  for (const auto& [latency, count] : m.recovery_latency_histogram) {
    histogram += fmt::format("{},{}\n", latency, count);
  }
  out["recovery_latency.csv"] = std::move(histogram);

  std::string io = "metric,value\n";
  io += fmt::format("line_transactions,{}\n", m.io.line_transactions);
  io += fmt::format("line_overflows,{}\n", m.io.line_overflows);
  io += fmt::format("outvoted_bits,{}\n", m.io.outvoted_bits);
  io += fmt::format("packets_accepted,{}\n", m.io.packets_accepted);
  io += fmt::format("packet_conflicts,{}\n", m.io.packet_conflicts);
  io += fmt::format("packet_dissents,{}\n", m.io.packet_dissents);
  io += fmt::format("packets_expired,{}\n", m.io.packets_expired);
  out["io_voter.csv"] = std::move(io);
  return out;
}

void write_metrics(const RunMetrics& metrics, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, text] : render_metrics(metrics)) {
    std::ofstream file(dir / name, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write " + (dir / name).string());
    file << text;
  }
}

std::map<std::string, std::string> read_summary(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    out[line.substr(0, comma)] = line.substr(comma + 1);
  }
  return out;
}

}  // namespace obcsim
