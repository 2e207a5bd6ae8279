#include "obcsim/ladder.hpp"

#include <stdexcept>

namespace obcsim {

std::string_view to_string(LadderStepKind kind) {
  switch (kind) {
    case LadderStepKind::PartialReconfiguration: return "partial";
    case LadderStepKind::FullReconfiguration: return "full";
    case LadderStepKind::Recovered: return "recovered";
    case LadderStepKind::Defunct: return "defunct";
  }
  return "?";
}

RecoveryLadder::RecoveryLadder(VariantId start_variant, std::uint32_t variant_count)
    : start_(start_variant), variant_count_(variant_count) {
  if (variant_count == 0) throw std::invalid_argument("ladder needs at least one variant");
  current_ = {LadderStepKind::PartialReconfiguration, start_ % variant_count_};
}

const LadderStep& RecoveryLadder::advance(bool self_test_passed) {
  switch (current_.kind) {
    case LadderStepKind::PartialReconfiguration:
    case LadderStepKind::FullReconfiguration:
      if (self_test_passed) {
        current_.kind = LadderStepKind::Recovered;
      } else if (current_.kind == LadderStepKind::FullReconfiguration) {
        current_.kind = LadderStepKind::Defunct;
      } else if (partial_attempts_ < variant_count_) {
        current_.variant = (start_ + partial_attempts_) % variant_count_;
        ++partial_attempts_;
      } else {
        // The full bitstream reloads the tile's original variant.
        current_ = {LadderStepKind::FullReconfiguration, start_ % variant_count_};
        ++full_attempts_;
      }
      break;
    case LadderStepKind::Recovered:
    case LadderStepKind::Defunct:
      break;
  }
  return current_;
}

LadderOutcome stage2_ladder(Tile& tile, Rng& rng, double detection_probability,
                            CheckpointSeq completed_seq, Tick now) {
  LadderOutcome out;
  RecoveryLadder ladder(tile.active_variant(), static_cast<std::uint32_t>(tile.variants().size()));
  while (!ladder.finished()) {
    const auto step = ladder.current();
    out.steps.push_back(step);
    tile.begin_reconfiguration(step.variant);
    ladder.advance(tile.run_self_test(rng, detection_probability).pass);
  }
  out.steps.push_back(ladder.current());
  out.partial_attempts = ladder.partial_attempts();
  out.full_attempts = ladder.full_attempts();
  out.recovered = ladder.current().kind == LadderStepKind::Recovered;
  out.variant = tile.active_variant();
  if (out.recovered) {
    tile.boot({}, completed_seq, now);
    tile.set_spare(true);
  } else {
    tile.mark_defunct();
  }
  return out;
}

}  // namespace obcsim
