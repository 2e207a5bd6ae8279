#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "obcsim/types.hpp"

namespace obcsim {

inline constexpr int kTraceSchemaVersion = 1;

using TraceValue = std::variant<std::int64_t, std::uint64_t, double, bool, std::string,
                                std::vector<std::uint64_t>>;

struct TraceField {
  std::string key;
  TraceValue value;
  bool operator==(const TraceField&) const = default;
};

enum class TraceLevel { Summary = 0, Normal = 1, Verbose = 2 };

/// One line of the run trace: (time, tile, event kind, payload).
struct TraceRecord {
  Tick time = 0;
  std::optional<TileId> tile;
  std::string kind;
  std::vector<TraceField> fields;
  TraceLevel level = TraceLevel::Normal;

  const TraceValue* field(std::string_view key) const;
  std::optional<std::int64_t> int_field(std::string_view key) const;
  std::optional<std::string> string_field(std::string_view key) const;
  std::vector<std::uint64_t> list_field(std::string_view key) const;

  bool operator==(const TraceRecord&) const = default;
};

/// Builder for trace payloads.
class Fields {
 public:
  Fields& add(std::string key, std::int64_t v) { return put(std::move(key), v); }
  Fields& add(std::string key, std::uint64_t v) { return put(std::move(key), v); }
  Fields& add(std::string key, std::uint32_t v) { return put(std::move(key), std::uint64_t{v}); }
  Fields& add(std::string key, int v) { return put(std::move(key), std::int64_t{v}); }
  Fields& add(std::string key, double v) { return put(std::move(key), v); }
  Fields& add(std::string key, bool v) { return put(std::move(key), v); }
  Fields& add(std::string key, std::string v) { return put(std::move(key), std::move(v)); }
  Fields& add(std::string key, const char* v) { return put(std::move(key), std::string(v)); }
  Fields& add(std::string key, std::string_view v) { return put(std::move(key), std::string(v)); }
  template <typename Range>
  Fields& list(std::string key, const Range& values) {
    std::vector<std::uint64_t> out;
    for (const auto& v : values) out.push_back(static_cast<std::uint64_t>(v));
    return put(std::move(key), std::move(out));
  }

  std::vector<TraceField> take() { return std::move(fields_); }

 private:
  Fields& put(std::string key, TraceValue v) {
    fields_.push_back({std::move(key), std::move(v)});
    return *this;
  }
  std::vector<TraceField> fields_;
};

/// Serializes a record as one compact JSON object (no trailing newline).
std::string format_trace_line(const TraceRecord& record);

/// The header line every trace file starts with.
std::string trace_header_line();

/// Parses a line written by format_trace_line. Integral values come back as
/// int64 when they fit, lists as uint64 vectors. Throws std::runtime_error
/// on malformed input.
TraceRecord parse_trace_line(std::string_view line);

}  // namespace obcsim
