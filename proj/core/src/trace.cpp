#include "obcsim/trace.hpp"

#include <stdexcept>

#include "json.hpp"

namespace obcsim {

using nlohmann::ordered_json;

const TraceValue* TraceRecord::field(std::string_view key) const {
  for (const auto& f : fields) {
    if (f.key == key) return &f.value;
  }
  return nullptr;
}

std::optional<std::int64_t> TraceRecord::int_field(std::string_view key) const {
  const auto* v = field(key);
  if (!v) return std::nullopt;
  if (const auto* i = std::get_if<std::int64_t>(v)) return *i;
  if (const auto* u = std::get_if<std::uint64_t>(v)) return static_cast<std::int64_t>(*u);
  if (const auto* b = std::get_if<bool>(v)) return *b ? 1 : 0;
  return std::nullopt;
}

std::optional<std::string> TraceRecord::string_field(std::string_view key) const {
  const auto* v = field(key);
  if (!v) return std::nullopt;
  if (const auto* s = std::get_if<std::string>(v)) return *s;
  return std::nullopt;
}

std::vector<std::uint64_t> TraceRecord::list_field(std::string_view key) const {
  const auto* v = field(key);
  if (!v) return {};
  if (const auto* l = std::get_if<std::vector<std::uint64_t>>(v)) return *l;
  return {};
}

std::string format_trace_line(const TraceRecord& record) {
  ordered_json j;
  j["t"] = record.time;
  j["tile"] = record.tile ? ordered_json(*record.tile) : ordered_json(nullptr);
  j["kind"] = record.kind;
  ordered_json payload = ordered_json::object();
  for (const auto& f : record.fields) {
    std::visit([&](const auto& v) { payload[f.key] = v; }, f.value);
  }
  j["data"] = std::move(payload);
  return j.dump();
}

std::string trace_header_line() {
  ordered_json j;
  j["schema_version"] = kTraceSchemaVersion;
  j["format"] = "obcsim-trace";
  return j.dump();
}

TraceRecord parse_trace_line(std::string_view line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const ordered_json::parse_error& e) {
    throw std::runtime_error(std::string("malformed trace line: ") + e.what());
  }
  if (!j.is_object() || !j.contains("t") || !j.contains("kind")) {
    throw std::runtime_error("trace line lacks t/kind");
  }
  TraceRecord r;
  r.time = j["t"].get<Tick>();
  if (j.contains("tile") && !j["tile"].is_null()) r.tile = j["tile"].get<TileId>();
  r.kind = j["kind"].get<std::string>();
  if (j.contains("data")) {
    for (auto it = j["data"].begin(); it != j["data"].end(); ++it) {
      const auto& v = it.value();
      TraceValue value;
      if (v.is_boolean()) {
        value = v.get<bool>();
      } else if (v.is_number_integer() && !v.is_number_unsigned()) {
        value = v.get<std::int64_t>();
      } else if (v.is_number_unsigned()) {
        const auto u = v.get<std::uint64_t>();
        value = u <= static_cast<std::uint64_t>(INT64_MAX) ? TraceValue{static_cast<std::int64_t>(u)}
                                                          : TraceValue{u};
      } else if (v.is_number_float()) {
        value = v.get<double>();
      } else if (v.is_string()) {
        value = v.get<std::string>();
      } else if (v.is_array()) {
        value = v.get<std::vector<std::uint64_t>>();
      } else {
        throw std::runtime_error("unsupported trace value for key " + it.key());
      }
      r.fields.push_back({it.key(), std::move(value)});
    }
  }
  return r;
}

}  // namespace obcsim
