// obcsim: command-line front end for the on-board computer simulator.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "obcsim/engine.hpp"
#include "obcsim/metrics.hpp"
#include "obcsim/scenario.hpp"

namespace fs = std::filesystem;
using namespace obcsim;

namespace {

constexpr int kExitError = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitCriticalLoss = 3;

struct SeedRange {
  std::uint64_t first = 0;
  std::uint64_t last = 0;
};

std::optional<SeedRange> parse_seed_range(const std::string& text) {
  const auto dots = text.find("..");
  if (dots == std::string::npos) return std::nullopt;
  SeedRange r;
  const auto parse = [](std::string_view s, std::uint64_t& out) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
  };
  const std::string_view view(text);
  if (!parse(view.substr(0, dots), r.first) || !parse(view.substr(dots + 2), r.last)) return std::nullopt;
  if (r.last < r.first) return std::nullopt;
  return r;
}

std::optional<TraceLevel> parse_level(const std::string& name) {
  if (name == "summary") return TraceLevel::Summary;
  if (name == "normal") return TraceLevel::Normal;
  if (name == "verbose") return TraceLevel::Verbose;
  return std::nullopt;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

/// Runs one scenario and writes trace.jsonl plus the metrics tables.
RunMetrics run_to(const Scenario& scenario, const RunOptions& options, const fs::path& dir) {
  const auto result = run(scenario, options);
  fs::create_directories(dir);
  write_text(dir / "trace.jsonl", result.trace_text());
  write_metrics(result.metrics, dir);
  return result.metrics;
}

std::optional<Scenario> load_valid(const std::string& path) {
  try {
    auto scenario = load_scenario(path);
    if (const auto errors = validate_scenario(scenario); !errors.empty()) {
      for (const auto& e : errors) std::cerr << path << ": " << e << "\n";
      return std::nullopt;
    }
    return scenario;
  } catch (const ScenarioError& e) {
    for (const auto& msg : e.errors()) std::cerr << path << ": " << msg << "\n";
    return std::nullopt;
  }
}

std::uint64_t counter(const RunMetrics& m, const std::string& name) {
  const auto it = m.counters.find(name);
  return it == m.counters.end() ? 0 : it->second;
}

int cmd_run(const std::string& path, const fs::path& out, TraceLevel level, std::optional<std::uint64_t> seed) {
  const auto scenario = load_valid(path);
  if (!scenario) return kExitInvalid;
  const auto metrics = run_to(*scenario, {level, seed}, out);
  std::cout << fmt::format("{}: {} faults, {} replacements, mean power {:.3f} W -> {}\n", scenario->name,
                           metrics.faults.size(), counter(metrics, "replacements"), metrics.mean_power_watts,
                           out.string());
  if (metrics.critical_loss) {
    std::cerr << "critical thread lost without recovery\n";
    return kExitCriticalLoss;
  }
  return 0;
}

int cmd_campaign(const std::string& path, const fs::path& out, TraceLevel level, const SeedRange& seeds,
                 unsigned jobs) {
  const auto scenario = load_valid(path);
  if (!scenario) return kExitInvalid;

  const std::uint64_t count = seeds.last - seeds.first + 1;
  std::vector<RunMetrics> results(count);
  std::vector<std::string> failures(count);
  std::atomic<std::uint64_t> next{0};
  const auto worker = [&] {
    for (std::uint64_t i = next++; i < count; i = next++) {
      const auto seed = seeds.first + i;
      try {
        results[i] = run_to(*scenario, {level, seed}, out / fmt::format("seed_{}", seed));
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned j = 0; j < std::max(1u, jobs); ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::string table = "seed,faults,masked,recovered,unrecovered,silent,no_effect,replacements,defunct_tiles,"
                      "stage3_activations,mean_power_watts,critical_loss\n";
  bool any_loss = false;
  bool any_failure = false;
  for (std::uint64_t i = 0; i < count; ++i) {
    if (!failures[i].empty()) {
      std::cerr << fmt::format("seed {}: {}\n", seeds.first + i, failures[i]);
      any_failure = true;
      continue;
    }
    const auto& m = results[i];
    std::array<std::uint64_t, 5> outcomes{};
    for (const auto& row : m.faults) ++outcomes[static_cast<std::size_t>(row.outcome)];
    table += fmt::format("{},{},{},{},{},{},{},{},{},{},{:.6f},{}\n", seeds.first + i, m.faults.size(),
                         outcomes[0], outcomes[1], outcomes[2], outcomes[3], outcomes[4],
                         counter(m, "replacements"), counter(m, "defunct_tiles"),
                         counter(m, "stage3_activations"), m.mean_power_watts, m.critical_loss ? 1 : 0);
    any_loss = any_loss || m.critical_loss;
  }
  fs::create_directories(out);
  write_text(out / "campaign.csv", table);
  std::cout << fmt::format("{} runs -> {}\n", count, (out / "campaign.csv").string());
  if (any_failure) return kExitError;
  return any_loss ? kExitCriticalLoss : 0;
}

int cmd_validate(const std::string& path) {
  const auto scenario = load_valid(path);
  if (!scenario) return kExitInvalid;
  std::cout << path << ": ok\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& outputs) {
  std::map<std::string, std::vector<double>> values;
  std::vector<std::string> order;
  for (const auto& dir : outputs) {
    for (const auto& [metric, text] : read_summary(fs::path(dir) / "summary.csv")) {
      if (!values.contains(metric)) order.push_back(metric);
      values[metric].push_back(std::strtod(text.c_str(), nullptr));
    }
  }
  std::cout << fmt::format("{:<32} {:>8} {:>14} {:>14} {:>14}\n", "metric", "runs", "min", "mean", "max");
  for (const auto& metric : order) {
    const auto& v = values[metric];
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    double sum = 0;
    for (double x : v) sum += x;
    std::cout << fmt::format("{:<32} {:>8} {:>14.6g} {:>14.6g} {:>14.6g}\n", metric, v.size(), *lo,
                             sum / static_cast<double>(v.size()), *hi);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic simulator of a fault-tolerant tiled on-board computer"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = "out";
  std::string verbosity = "normal";
  std::optional<std::uint64_t> seed;
  std::string seeds_text;
  unsigned jobs = 1;
  std::vector<std::string> outputs;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("-o,--output", out_dir, "Output directory")->capture_default_str();
    sub->add_option("-v,--verbosity", verbosity, "Trace verbosity: summary, normal, verbose")
        ->check(CLI::IsMember({"summary", "normal", "verbose"}))
        ->capture_default_str();
  };

  auto* run_cmd = app.add_subcommand("run", "Run one scenario");
  run_cmd->add_option("scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  add_common(run_cmd);
  run_cmd->add_option("--seed", seed, "Override the scenario seed");

  auto* campaign_cmd = app.add_subcommand("campaign", "Run one scenario over a seed range");
  campaign_cmd->add_option("spec", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  campaign_cmd->add_option("--seeds", seeds_text, "Inclusive seed range a..b")->required();
  campaign_cmd->add_option("-j,--jobs", jobs, "Parallel runs")->capture_default_str();
  add_common(campaign_cmd);

  auto* validate_cmd = app.add_subcommand("validate", "Check a scenario without running it");
  validate_cmd->add_option("scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);

  auto* report_cmd = app.add_subcommand("report", "Summarize the metrics of finished runs");
  report_cmd->add_option("outputs", outputs, "Run output directories")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto level = *parse_level(verbosity);
    if (*run_cmd) return cmd_run(scenario_path, out_dir, level, seed);
    if (*campaign_cmd) {
      const auto range = parse_seed_range(seeds_text);
      if (!range) {
        std::cerr << "--seeds expects a..b with a <= b\n";
        return kExitError;
      }
      return cmd_campaign(scenario_path, out_dir, level, *range, jobs);
    }
    if (*validate_cmd) return cmd_validate(scenario_path);
    if (*report_cmd) return cmd_report(outputs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
