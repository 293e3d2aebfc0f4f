#include "visloop/prompting.hpp"

#include <fstream>
#include <iterator>
#include <map>

#include "visloop/errors.hpp"

namespace visloop {

namespace assets {
extern const std::string_view agent_system_template;
extern const std::string_view cot_template;
}  // namespace assets

namespace {

constexpr std::string_view kWidth = "{width}";
constexpr std::string_view kHeight = "{height}";
constexpr std::string_view kQuery = "{query}";
constexpr std::string_view kNoImageLine = "(no image provided)";

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

std::string_view template_name(TemplateId id) {
  return id == TemplateId::AgentSystem ? "agent system template" : "baseline template";
}

// Replaces every known placeholder in one left-to-right pass. Inserted values
// are copied verbatim and never rescanned.
std::string substitute(std::string_view text, const std::map<std::string_view, std::string_view>& values) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    bool replaced = false;
    if (text[pos] == '{') {
      for (const auto& [placeholder, value] : values) {
        if (text.substr(pos, placeholder.size()) == placeholder) {
          out += value;
          pos += placeholder.size();
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) {
      out += text[pos++];
    }
  }
  return out;
}

struct LineSpan {
  std::size_t begin;
  std::size_t end;  // exclusive, before the newline
};

LineSpan line_around(std::string_view text, std::size_t pos) {
  const auto nl_before = text.rfind('\n', pos);
  const std::size_t begin = nl_before == std::string_view::npos ? 0 : nl_before + 1;
  const auto nl_after = text.find('\n', pos);
  const std::size_t end = nl_after == std::string_view::npos ? text.size() : nl_after;
  return {begin, end};
}

}  // namespace

PromptTemplate::PromptTemplate(TemplateId id, std::string body) : id_(id), body_(std::move(body)) {
  const auto name = std::string(template_name(id_));
  if (count_occurrences(body_, kQuery) != 1) {
    throw TemplateError(name + " must contain {query} exactly once");
  }
  if (id_ == TemplateId::AgentSystem) {
    if (count_occurrences(body_, kWidth) != 1 || count_occurrences(body_, kHeight) != 1) {
      throw TemplateError(name + " must contain {width} and {height} exactly once");
    }
    const auto line = line_around(body_, body_.find(kWidth));
    const std::string_view line_text = std::string_view(body_).substr(line.begin, line.end - line.begin);
    if (line_text.find(kHeight) == std::string_view::npos) {
      throw TemplateError(name + ": {width} and {height} must share one line");
    }
    if (line_text.find(kQuery) != std::string_view::npos) {
      throw TemplateError(name + ": {query} must not share the resolution line");
    }
  }
}

PromptTemplate PromptTemplate::builtin(TemplateId id) {
  static const PromptTemplate agent(TemplateId::AgentSystem, std::string(assets::agent_system_template));
  static const PromptTemplate cot(TemplateId::CotBaseline, std::string(assets::cot_template));
  return id == TemplateId::AgentSystem ? agent : cot;
}

PromptTemplate PromptTemplate::from_file(TemplateId id, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw TemplateError("cannot read template file " + path.string());
  }
  std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return PromptTemplate(id, std::move(body));
}

std::string PromptTemplate::render(std::span<const ImageSize> images, std::string_view query) const {
  if (query.empty()) {
    throw UsageError("query must not be empty");
  }
  const std::map<std::string_view, std::string_view> query_only{{kQuery, query}};
  if (id_ == TemplateId::CotBaseline) {
    return substitute(body_, query_only);
  }

  for (const auto& size : images) {
    if (size.width < 1 || size.height < 1) {
      throw UsageError("image width and height must be at least 1");
    }
  }

  const std::string_view body = body_;
  const auto line = line_around(body, body.find(kWidth));
  const std::string_view line_text = body.substr(line.begin, line.end - line.begin);

  std::string resolution;
  if (images.empty()) {
    resolution = kNoImageLine;
  }
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto width = std::to_string(images[i].width);
    const auto height = std::to_string(images[i].height);
    if (i > 0) {
      resolution += '\n';
    }
    if (images.size() > 1) {
      resolution += "image_clue_" + std::to_string(i) + ": ";
    }
    resolution += substitute(line_text, {{kWidth, width}, {kHeight, height}});
  }

  return substitute(body.substr(0, line.begin), query_only) + resolution +
         substitute(body.substr(line.end), query_only);
}

std::string render_agent_prompt(std::uint32_t width, std::uint32_t height, std::string_view query) {
  const ImageSize size{width, height};
  return render_agent_prompt(std::span<const ImageSize>(&size, 1), query);
}

std::string render_agent_prompt(std::span<const ImageSize> images, std::string_view query,
                                const PromptTemplate& tmpl) {
  if (tmpl.id() != TemplateId::AgentSystem) {
    throw UsageError("render_agent_prompt needs an agent system template");
  }
  return tmpl.render(images, query);
}

std::string render_cot_prompt(std::string_view query, const PromptTemplate& tmpl) {
  if (tmpl.id() != TemplateId::CotBaseline) {
    throw UsageError("render_cot_prompt needs a baseline template");
  }
  return tmpl.render({}, query);
}

}  // namespace visloop
