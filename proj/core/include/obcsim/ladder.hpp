#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "obcsim/rng.hpp"
#include "obcsim/tile.hpp"
#include "obcsim/types.hpp"

namespace obcsim {

enum class LadderStepKind { PartialReconfiguration, FullReconfiguration, Recovered, Defunct };
std::string_view to_string(LadderStepKind kind);

struct LadderStep {
  LadderStepKind kind = LadderStepKind::PartialReconfiguration;
  VariantId variant = 0;
  bool operator==(const LadderStep&) const = default;
};

/// Stage-2 recovery ladder of one tile: partial reconfiguration with every
/// variant in turn (starting from the current one), then a single full
/// reconfiguration, then Defunct. Each attempt is judged by the self-test
/// that follows it.
class RecoveryLadder {
 public:
  RecoveryLadder(VariantId start_variant, std::uint32_t variant_count);

  const LadderStep& current() const { return current_; }
  bool finished() const {
    return current_.kind == LadderStepKind::Recovered || current_.kind == LadderStepKind::Defunct;
  }

  /// Records the self-test verdict for the attempt in progress and returns
  /// the next step.
  const LadderStep& advance(bool self_test_passed);

  std::uint32_t partial_attempts() const { return partial_attempts_; }
  std::uint32_t full_attempts() const { return full_attempts_; }

 private:
  VariantId start_;
  std::uint32_t variant_count_;
  std::uint32_t partial_attempts_ = 1;
  std::uint32_t full_attempts_ = 0;
  LadderStep current_;
};

struct LadderOutcome {
  bool recovered = false;
  VariantId variant = 0;
  std::uint32_t partial_attempts = 0;
  std::uint32_t full_attempts = 0;
  std::vector<LadderStep> steps;
};

/// Runs the whole ladder on `tile` with reconfiguration taking no simulated
/// time. A recovered tile is booted empty as a spare; otherwise it is marked
/// Defunct.
LadderOutcome stage2_ladder(Tile& tile, Rng& rng, double detection_probability,
                            CheckpointSeq completed_seq = 0, Tick now = 0);

}  // namespace obcsim
