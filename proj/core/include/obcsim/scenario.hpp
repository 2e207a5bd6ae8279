#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "obcsim/faults.hpp"
#include "obcsim/io_voter.hpp"
#include "obcsim/types.hpp"

namespace obcsim {

inline constexpr int kScenarioSchemaVersion = 1;

/// Operator weights as written in the scenario; normalized on use.
struct WeightSpec {
  double performance = 1.0;
  double energy = 1.0;
  double robustness = 1.0;

  ObjectiveWeights normalized() const { return {performance, energy, robustness}; }
  bool operator==(const WeightSpec&) const = default;
};

enum class OperatorCommandKind { SetObjectiveWeights, SetThreadReplication, GateTile, UngateTile, ForceCheckpoint };
std::string_view to_string(OperatorCommandKind kind);

struct OperatorCommand {
  Tick time = 0;
  OperatorCommandKind kind = OperatorCommandKind::ForceCheckpoint;
  WeightSpec weights;            // SetObjectiveWeights
  ThreadId thread = 0;           // SetThreadReplication
  std::uint32_t replication = 1; // SetThreadReplication
  TileId tile = 0;               // GateTile, UngateTile

  bool operator==(const OperatorCommand&) const = default;
};

struct LineFixture {
  std::string name;
  std::vector<io::LineStream> streams;
  bool operator==(const LineFixture&) const = default;
};

struct PacketFixture {
  std::string name;
  std::vector<io::Packet> packets;
  io::DedupPolicy policy;
  bool operator==(const PacketFixture&) const = default;
};

struct Scenario {
  std::string name;
  SystemConfig system;
  std::vector<ThreadSpec> threads;
  WeightSpec weights;
  CampaignSpec faults;
  std::vector<OperatorCommand> commands;
  std::vector<LineFixture> line_fixtures;
  std::vector<PacketFixture> packet_fixtures;

  bool operator==(const Scenario&) const = default;
};

/// Every violated constraint, empty when the configuration is valid.
std::vector<std::string> validate_config(const SystemConfig& config, std::span<const ThreadSpec> threads);

/// validate_config plus the campaign, command, and fixture sections.
std::vector<std::string> validate_scenario(const Scenario& scenario);

class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

/// Parses the JSON scenario format. Throws ScenarioError on syntax errors,
/// unknown names, or an unsupported schema_version. Does not validate.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

/// Writes every field explicitly; parse_scenario(dump_scenario(s)) == s.
std::string dump_scenario(const Scenario& scenario);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

/// Tiles held back as spares at boot: the highest `spare_count` ids.
std::vector<TileId> initial_spares(const SystemConfig& config);

}  // namespace obcsim
