#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace visloop {

enum class TemplateId { AgentSystem, CotBaseline };

struct ImageSize {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
};

// A prompt body with {width}, {height} and {query} placeholders. The agent
// template needs all three exactly once; the baseline template needs {query}.
class PromptTemplate {
 public:
  // The templates compiled in from core/assets/prompts.
  static PromptTemplate builtin(TemplateId id);
  // Throws TemplateError when the file is unreadable or malformed.
  static PromptTemplate from_file(TemplateId id, const std::filesystem::path& path);
  // Throws TemplateError when a required placeholder is missing or repeated.
  PromptTemplate(TemplateId id, std::string body);

  TemplateId id() const noexcept { return id_; }
  const std::string& body() const noexcept { return body_; }

  // Single image: the stored resolution line with {width}/{height} filled.
  // Several images: that line once per image, prefixed "image_clue_<i>: ".
  // No images: the line is replaced by a note saying so.
  // The query is inserted verbatim; braces inside it are never expanded.
  std::string render(std::span<const ImageSize> images, std::string_view query) const;

 private:
  TemplateId id_;
  std::string body_;
};

// Throws UsageError on an empty query or a zero dimension.
std::string render_agent_prompt(std::uint32_t width, std::uint32_t height, std::string_view query);
std::string render_agent_prompt(std::span<const ImageSize> images, std::string_view query,
                                const PromptTemplate& tmpl = PromptTemplate::builtin(TemplateId::AgentSystem));

std::string render_cot_prompt(std::string_view query,
                              const PromptTemplate& tmpl = PromptTemplate::builtin(TemplateId::CotBaseline));

}  // namespace visloop
