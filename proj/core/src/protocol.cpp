#include "visloop/protocol.hpp"

#include "visloop/errors.hpp"
#include "visloop/trace_io.hpp"

namespace visloop::protocol {
namespace {

using nlohmann::json;

FrameKind kind_from_string(std::string_view text) {
  if (text == "ready") return FrameKind::Ready;
  if (text == "init") return FrameKind::Init;
  if (text == "exec") return FrameKind::Exec;
  if (text == "result") return FrameKind::Result;
  if (text == "shutdown") return FrameKind::Shutdown;
  throw ProtocolError("unknown frame kind '" + std::string(text) + "'");
}

template <typename T>
T get(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ProtocolError(std::string("frame lacks field '") + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ProtocolError(std::string("frame field '") + key + "' has the wrong type");
  }
}

}  // namespace

std::string_view to_string(FrameKind kind) {
  switch (kind) {
    case FrameKind::Ready:
      return "ready";
    case FrameKind::Init:
      return "init";
    case FrameKind::Exec:
      return "exec";
    case FrameKind::Result:
      return "result";
    case FrameKind::Shutdown:
      return "shutdown";
  }
  return "unknown";
}

Frame ready(int version) {
  Frame f;
  f.kind = FrameKind::Ready;
  f.protocol_version = version;
  return f;
}

Frame init(std::uint64_t id, std::vector<std::string> images) {
  Frame f;
  f.kind = FrameKind::Init;
  f.id = id;
  f.images = std::move(images);
  return f;
}

Frame exec(std::uint64_t id, std::string code) {
  Frame f;
  f.kind = FrameKind::Exec;
  f.id = id;
  f.code = std::move(code);
  return f;
}

Frame shutdown(std::uint64_t id) {
  Frame f;
  f.kind = FrameKind::Shutdown;
  f.id = id;
  return f;
}

Frame result(std::uint64_t id, std::string status, std::string stdout_text, std::string error,
             std::vector<std::string> images) {
  Frame f;
  f.kind = FrameKind::Result;
  f.id = id;
  f.status = std::move(status);
  f.stdout_text = std::move(stdout_text);
  f.error = std::move(error);
  f.images = std::move(images);
  return f;
}

std::string encode(const Frame& frame) {
  json doc = {{"kind", std::string(to_string(frame.kind))}, {"id", frame.id}};
  switch (frame.kind) {
    case FrameKind::Ready:
      doc["protocol_version"] = frame.protocol_version;
      if (!frame.meta.is_null()) {
        doc["meta"] = frame.meta;
      }
      break;
    case FrameKind::Init:
      doc["images"] = frame.images;
      break;
    case FrameKind::Exec:
      doc["code"] = frame.code;
      break;
    case FrameKind::Result:
      doc["status"] = frame.status;
      doc["stdout"] = frame.stdout_text;
      doc["error"] = frame.error;
      doc["images"] = frame.images;
      if (!frame.meta.is_null()) {
        doc["meta"] = frame.meta;
      }
      break;
    case FrameKind::Shutdown:
      break;
  }
  return dump_json(doc);
}

Frame decode(std::string_view line) {
  json doc;
  try {
    doc = json::parse(line.begin(), line.end());
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("unparseable frame: ") + e.what());
  }
  if (!doc.is_object()) {
    throw ProtocolError("frame is not a JSON object");
  }
  Frame f;
  f.kind = kind_from_string(get<std::string>(doc, "kind"));
  f.id = get<std::uint64_t>(doc, "id");
  switch (f.kind) {
    case FrameKind::Ready:
      f.protocol_version = get<int>(doc, "protocol_version");
      if (doc.contains("meta")) {
        f.meta = doc["meta"];
      }
      break;
    case FrameKind::Init:
      f.images = get<std::vector<std::string>>(doc, "images");
      break;
    case FrameKind::Exec:
      f.code = get<std::string>(doc, "code");
      break;
    case FrameKind::Result:
      f.status = get<std::string>(doc, "status");
      if (f.status != "ok" && f.status != "error" && f.status != "timeout") {
        throw ProtocolError("unknown result status '" + f.status + "'");
      }
      f.stdout_text = get<std::string>(doc, "stdout");
      f.error = get<std::string>(doc, "error");
      f.images = get<std::vector<std::string>>(doc, "images");
      if (doc.contains("meta")) {
        f.meta = doc["meta"];
      }
      break;
    case FrameKind::Shutdown:
      break;
  }
  return f;
}

}  // namespace visloop::protocol
