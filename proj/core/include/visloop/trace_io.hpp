#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "visloop/session.hpp"

namespace visloop {

// Version of the trace document layout described in docs/TRACE_FORMAT.md.
inline constexpr int kTraceSchemaVersion = 1;

struct TraceWriteOptions {
  // Wall-clock fields are the only non-deterministic part of a trace; leaving
  // them out makes documents from replayed sessions byte-comparable.
  bool include_timing = true;
  // Pretty-print indent; negative for a single line.
  int indent = 2;
};

std::string serialize_trace(const SessionTrace& trace, const TraceWriteOptions& options = {});

// Throws SchemaError on malformed documents and InvariantError when the
// decoded trace violates its invariants.
SessionTrace deserialize_trace(std::string_view document);

SessionTrace read_trace_file(const std::filesystem::path& path);
void write_trace_file(const std::filesystem::path& path, const SessionTrace& trace,
                      const TraceWriteOptions& options = {});

nlohmann::json message_to_json(const Message& message);
Message message_from_json(const nlohmann::json& value);

// Dumps with invalid UTF-8 replaced rather than throwing.
std::string dump_json(const nlohmann::json& value, int indent = -1);

}  // namespace visloop
