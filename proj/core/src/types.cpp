#include "obcsim/types.hpp"

#include <array>
#include <bit>
#include <stdexcept>

#include "obcsim/crc.hpp"

namespace obcsim {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

}  // namespace

std::vector<RegionId> regions_of(RegionMask mask) {
  std::vector<RegionId> out;
  for (RegionId r = 0; r < kMaxRegions; ++r) {
    if (mask & region_bit(r)) out.push_back(r);
  }
  return out;
}

ThreadState Behavior::apply(const ThreadState& state, CheckpointSeq seq) const {
  ThreadState next = state;
  auto& w = next.words;
  if (w.empty()) return next;
  switch (kind) {
    case BehaviorKind::Counter:
      w[0] += step;
      break;
    case BehaviorKind::Mix: {
      const auto n = w.size();
      const auto salt = static_cast<std::uint32_t>(seq) * 0x9E3779B9u + step;
      for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t x = w[i] ^ (salt + static_cast<std::uint32_t>(i) * 0x85EBCA6Bu);
        x = std::rotl(x, 13) * 0xC2B2AE35u;
        w[i] = x + w[(i + n - 1) % n];
      }
      break;
    }
  }
  return next;
}

ThreadState ThreadSpec::init() const {
  ThreadState s;
  s.words.assign(state_words, 0);
  for (std::size_t i = 0; i < init_words.size() && i < s.words.size(); ++i) {
    s.words[i] = init_words[i];
  }
  return s;
}

std::vector<std::uint8_t> canonical_bytes(ThreadId thread, const ThreadState& state) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + 4 * state.words.size());
  put_u32(out, thread);
  put_u32(out, static_cast<std::uint32_t>(state.words.size()));
  for (auto w : state.words) put_u32(out, w);
  return out;
}

Checksum ThreadSpec::checksum(const ThreadState& state) const {
  if (fixed_checksum) return *fixed_checksum;
  return crc32(canonical_bytes(id, state));
}

StateBlob ThreadSpec::expose(const ThreadState& state, CheckpointSeq seq) const {
  StateBlob blob;
  put_u32(blob, id);
  put_u64(blob, seq);
  put_u32(blob, static_cast<std::uint32_t>(state.words.size()));
  for (auto w : state.words) put_u32(blob, w);
  return blob;
}

std::optional<Checksum> CheckpointReport::checksum_of(ThreadId thread) const {
  for (const auto& [id, sum] : checksums) {
    if (id == thread) return sum;
  }
  return std::nullopt;
}

std::string_view to_string(TileHealth health) {
  switch (health) {
    case TileHealth::Healthy: return "healthy";
    case TileHealth::Suspected: return "suspected";
    case TileHealth::Reconfiguring: return "reconfiguring";
    case TileHealth::Defunct: return "defunct";
  }
  return "?";
}

namespace {
constexpr std::array<std::pair<FaultKind, std::string_view>, 6> kFaultNames{{
    {FaultKind::TransientStateFlip, "TransientStateFlip"},
    {FaultKind::ChecksumCorruption, "ChecksumCorruption"},
    {FaultKind::Hang, "Hang"},
    {FaultKind::PermanentRegionFault, "PermanentRegionFault"},
    {FaultKind::MemoryUpset, "MemoryUpset"},
    {FaultKind::BabblingTile, "BabblingTile"},
}};
}  // namespace

std::string_view to_string(FaultKind kind) {
  for (const auto& [k, name] : kFaultNames) {
    if (k == kind) return name;
  }
  return "?";
}

std::optional<FaultKind> fault_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kFaultNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

ObjectiveWeights::ObjectiveWeights(double performance, double energy, double robustness) {
  if (performance < 0 || energy < 0 || robustness < 0) {
    throw std::invalid_argument("objective weights must be non-negative");
  }
  const double sum = performance + energy + robustness;
  if (!(sum > 0)) throw std::invalid_argument("objective weights must not all be zero");
  performance_ = performance / sum;
  energy_ = energy / sum;
  robustness_ = robustness / sum;
}

}  // namespace obcsim
