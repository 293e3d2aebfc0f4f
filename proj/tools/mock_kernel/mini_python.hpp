#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <visloop/image.hpp>

// A tiny interpreter for the straight-line Python subset used by the test
// scripts: assignments, calls, arithmetic, f-strings, imports and a handful
// of PIL / matplotlib / os / time entry points. No control flow.

namespace mini_python {

struct None {
  bool operator==(const None&) const = default;
};

struct Module {
  std::string name;  // dotted, e.g. "matplotlib.pyplot"
};

struct ExceptionValue {
  std::string type;
  std::string message;
};

struct Value;
using ValuePtr = std::shared_ptr<const Value>;

struct Sequence {
  std::vector<Value> items;
  bool is_list = false;
};

struct ImageValue {
  visloop::ImageBlob blob;
};

// A method looked up on an image, waiting for its call.
struct BoundMethod {
  std::shared_ptr<ImageValue> self;
  std::string name;
};

struct Value {
  std::variant<None, bool, std::int64_t, double, std::string, std::shared_ptr<Sequence>,
               std::shared_ptr<ImageValue>, Module, ExceptionValue, BoundMethod>
      v;
};

struct RunOutcome {
  bool ok = true;
  std::string stdout_text;
  std::string stderr_text;
  // Python-style traceback when !ok.
  std::string traceback;
  std::vector<visloop::ImageBlob> figures;
};

class Interpreter {
 public:
  void bind_image(const std::string& name, visloop::ImageBlob blob);
  RunOutcome run(const std::string& code);

  // Exposed for tests of the mock itself.
  bool has(const std::string& name) const { return globals_.count(name) != 0; }

 private:
  friend class Evaluator;

  std::map<std::string, Value> globals_;
  // Pending figure: the last image shown with imshow, or a blank canvas.
  bool figure_dirty_ = false;
  std::optional<visloop::ImageBlob> figure_image_;
};

std::string str(const Value& value);
std::string repr(const Value& value);

}  // namespace mini_python
