#include "visloop/trace_io.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "visloop/errors.hpp"

namespace visloop {
namespace {

using nlohmann::json;

constexpr std::string_view kSchemaName = "visloop.trace";

const json& require(const json& obj, std::string_view key, std::string_view path) {
  if (!obj.is_object()) {
    throw SchemaError(std::string(path) + ": expected an object");
  }
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw SchemaError(std::string(path) + ": missing field '" + std::string(key) + "'");
  }
  return *it;
}

template <typename T>
T get_as(const json& value, std::string_view path) {
  try {
    return value.get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string(path) + ": " + e.what());
  }
}

template <typename T>
T field(const json& obj, std::string_view key, std::string_view path) {
  return get_as<T>(require(obj, key, path), std::string(path) + "." + std::string(key));
}

const json& array_field(const json& obj, std::string_view key, std::string_view path) {
  const json& value = require(obj, key, path);
  if (!value.is_array()) {
    throw SchemaError(std::string(path) + "." + std::string(key) + ": expected an array");
  }
  return value;
}

std::vector<ImageBlob> images_from_json(const json& array, const std::string& path) {
  std::vector<ImageBlob> out;
  out.reserve(array.size());
  for (std::size_t i = 0; i < array.size(); ++i) {
    const auto item_path = path + "[" + std::to_string(i) + "]";
    const auto text = get_as<std::string>(array[i], item_path);
    try {
      out.push_back(ImageBlob::from_base64(text));
    } catch (const InvariantError& e) {
      throw InvariantError(item_path + ": " + e.what());
    }
  }
  return out;
}

json images_to_json(const std::vector<ImageBlob>& images) {
  json out = json::array();
  for (const auto& image : images) {
    out.push_back(image.to_base64());
  }
  return out;
}

json exec_result_to_json(const ExecResult& result, bool include_timing) {
  json out = {
      {"status", std::string(to_string(result.status))},
      {"stdout", result.stdout_text},
      {"error", result.error},
      {"warnings", result.warnings},
      {"images", images_to_json(result.images)},
  };
  if (include_timing) {
    out["wall_time"] = result.wall_time;
  }
  return out;
}

ExecResult exec_result_from_json(const json& obj, const std::string& path) {
  ExecResult result;
  result.status = exec_status_from_string(field<std::string>(obj, "status", path));
  result.stdout_text = field<std::string>(obj, "stdout", path);
  result.error = field<std::string>(obj, "error", path);
  if (obj.contains("warnings")) {
    result.warnings = field<std::string>(obj, "warnings", path);
  }
  result.images = images_from_json(array_field(obj, "images", path), path + ".images");
  if (obj.contains("wall_time")) {
    result.wall_time = field<double>(obj, "wall_time", path);
  }
  return result;
}

json turn_to_json(const Turn& turn, bool include_timing) {
  json results = json::array();
  for (const auto& result : turn.exec_results) {
    results.push_back(exec_result_to_json(result, include_timing));
  }
  return {
      {"index", turn.index},
      {"model_text", turn.model_text},
      {"code_blocks", turn.code_blocks},
      {"exec_results", std::move(results)},
      {"clue_message", turn.clue_message ? message_to_json(*turn.clue_message) : json(nullptr)},
      {"warnings", turn.warnings},
  };
}

Turn turn_from_json(const json& obj, const std::string& path) {
  Turn turn;
  turn.index = field<std::size_t>(obj, "index", path);
  turn.model_text = field<std::string>(obj, "model_text", path);
  turn.code_blocks = get_as<std::vector<std::string>>(array_field(obj, "code_blocks", path), path + ".code_blocks");
  const json& results = array_field(obj, "exec_results", path);
  for (std::size_t i = 0; i < results.size(); ++i) {
    turn.exec_results.push_back(exec_result_from_json(results[i], path + ".exec_results[" + std::to_string(i) + "]"));
  }
  const json& clue = require(obj, "clue_message", path);
  if (!clue.is_null()) {
    turn.clue_message = message_from_json(clue);
  }
  if (obj.contains("warnings")) {
    turn.warnings = get_as<std::vector<std::string>>(obj["warnings"], path + ".warnings");
  }
  return turn;
}

}  // namespace

std::string dump_json(const nlohmann::json& value, int indent) {
  return value.dump(indent, ' ', false, nlohmann::json::error_handler_t::replace);
}

json message_to_json(const Message& message) {
  json parts = json::array();
  for (const auto& part : message.parts()) {
    if (part.is_text()) {
      parts.push_back({{"type", "text"}, {"text", part.as_text()}});
    } else {
      parts.push_back({{"type", "image"},
                       {"png_base64", part.as_image().to_base64()},
                       {"width", part.as_image().width()},
                       {"height", part.as_image().height()}});
    }
  }
  return {{"role", std::string(to_string(message.role()))}, {"parts", std::move(parts)}};
}

Message message_from_json(const json& value) {
  const std::string path = "message";
  const Role role = role_from_string(field<std::string>(value, "role", path));
  const json& parts_json = array_field(value, "parts", path);
  std::vector<ContentPart> parts;
  for (std::size_t i = 0; i < parts_json.size(); ++i) {
    const auto part_path = path + ".parts[" + std::to_string(i) + "]";
    const auto type = field<std::string>(parts_json[i], "type", part_path);
    if (type == "text") {
      parts.push_back(ContentPart::text(field<std::string>(parts_json[i], "text", part_path)));
    } else if (type == "image") {
      auto image = ImageBlob::from_base64(field<std::string>(parts_json[i], "png_base64", part_path));
      if (parts_json[i].contains("width") &&
          (field<std::uint32_t>(parts_json[i], "width", part_path) != image.width() ||
           field<std::uint32_t>(parts_json[i], "height", part_path) != image.height())) {
        throw InvariantError(part_path + ": declared size does not match the PNG header");
      }
      parts.push_back(ContentPart::image(std::move(image)));
    } else {
      throw SchemaError(part_path + ": unknown part type '" + type + "'");
    }
  }
  return Message(role, std::move(parts));
}

std::string serialize_trace(const SessionTrace& trace, const TraceWriteOptions& options) {
  json turns = json::array();
  for (const auto& turn : trace.turns) {
    turns.push_back(turn_to_json(turn, options.include_timing));
  }
  json faults = json::array();
  for (const auto& fault : trace.faults) {
    faults.push_back({{"turn", fault.turn ? json(*fault.turn) : json(nullptr)},
                      {"kind", fault.kind},
                      {"message", fault.message}});
  }
  const json doc = {
      {"schema", kSchemaName},
      {"schema_version", kTraceSchemaVersion},
      {"trace_id", trace.trace_id},
      {"benchmark_id", trace.benchmark_id},
      {"query", trace.query},
      {"images", images_to_json(trace.images)},
      {"turns", std::move(turns)},
      {"final_answer", trace.final_answer ? json(*trace.final_answer) : json(nullptr)},
      {"termination", std::string(to_string(trace.termination))},
      {"faults", std::move(faults)},
      {"config", trace.effective_config},
  };
  return dump_json(doc, options.indent);
}

SessionTrace deserialize_trace(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("trace is not valid JSON: ") + e.what());
  }
  const std::string path = "trace";
  if (field<std::string>(doc, "schema", path) != kSchemaName) {
    throw SchemaError("trace: not a " + std::string(kSchemaName) + " document");
  }
  const int version = field<int>(doc, "schema_version", path);
  if (version != kTraceSchemaVersion) {
    throw SchemaError("trace: unsupported schema_version " + std::to_string(version));
  }

  SessionTrace trace;
  trace.trace_id = field<std::string>(doc, "trace_id", path);
  trace.benchmark_id = field<std::string>(doc, "benchmark_id", path);
  trace.query = field<std::string>(doc, "query", path);
  trace.images = images_from_json(array_field(doc, "images", path), path + ".images");
  const json& turns = array_field(doc, "turns", path);
  for (std::size_t i = 0; i < turns.size(); ++i) {
    trace.turns.push_back(turn_from_json(turns[i], path + ".turns[" + std::to_string(i) + "]"));
  }
  const json& answer = require(doc, "final_answer", path);
  if (!answer.is_null()) {
    trace.final_answer = get_as<std::string>(answer, path + ".final_answer");
  }
  trace.termination = termination_from_string(field<std::string>(doc, "termination", path));
  const json& faults = array_field(doc, "faults", path);
  for (std::size_t i = 0; i < faults.size(); ++i) {
    const auto fault_path = path + ".faults[" + std::to_string(i) + "]";
    FaultRecord fault;
    const json& turn = require(faults[i], "turn", fault_path);
    if (!turn.is_null()) {
      fault.turn = get_as<std::size_t>(turn, fault_path + ".turn");
    }
    fault.kind = field<std::string>(faults[i], "kind", fault_path);
    fault.message = field<std::string>(faults[i], "message", fault_path);
    trace.faults.push_back(std::move(fault));
  }
  if (doc.contains("config")) {
    trace.effective_config = doc["config"];
  }
  trace.validate();
  return trace;
}

SessionTrace read_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw SchemaError("cannot read trace file " + path.string());
  }
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize_trace(text);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_trace_file(const std::filesystem::path& path, const SessionTrace& trace,
                      const TraceWriteOptions& options) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error("cannot write trace file " + path.string());
  }
  out << serialize_trace(trace, options) << '\n';
}

}  // namespace visloop
