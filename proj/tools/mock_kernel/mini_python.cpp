#include "mini_python.hpp"

#include <visloop/errors.hpp>

#include <signal.h>
#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <numbers>
#include <thread>

namespace mini_python {
namespace {

struct PyError {
  std::string type;
  std::string message;
};

// ---------------------------------------------------------------- lexer

enum class Tok { Name, Number, String, FString, Op, Newline, End };

struct Token {
  Tok kind;
  std::string text;
  int line;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string unescape(const std::string& raw) {
  std::string out;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] != '\\' || i + 1 == raw.size()) {
      out += raw[i];
      continue;
    }
    const char c = raw[++i];
    switch (c) {
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case 'r': out += '\r'; break;
      case '0': out += '\0'; break;
      case '\\': out += '\\'; break;
      case '\'': out += '\''; break;
      case '"': out += '"'; break;
      case '\n': break;
      default:
        out += '\\';
        out += c;
    }
  }
  return out;
}

struct LexError {
  std::string type;
  std::string message;
  int line;
};

std::vector<Token> lex(const std::string& src) {
  std::vector<Token> toks;
  int line = 1;
  int depth = 0;
  bool at_line_start = true;
  std::size_t i = 0;
  const std::size_t n = src.size();
  auto emit_newline = [&] {
    if (!toks.empty() && toks.back().kind != Tok::Newline) {
      toks.push_back({Tok::Newline, "", line});
    }
  };
  while (i < n) {
    char c = src[i];
    if (at_line_start && depth == 0) {
      std::size_t j = i;
      while (j < n && (src[j] == ' ' || src[j] == '\t')) ++j;
      const bool blank = j == n || src[j] == '\n' || src[j] == '#' || src[j] == '\r';
      if (!blank && j > i) {
        throw LexError{"IndentationError", "unexpected indent", line};
      }
      at_line_start = false;
      i = j;
      continue;
    }
    if (c == '\n') {
      if (depth == 0) {
        emit_newline();
        at_line_start = true;
      }
      ++line;
      ++i;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      continue;
    }
    if (c == '\\' && i + 1 < n && src[i + 1] == '\n') {
      i += 2;
      ++line;
      continue;
    }
    if (c == '#') {
      while (i < n && src[i] != '\n') ++i;
      continue;
    }
    // String literal, possibly prefixed.
    {
      std::size_t j = i;
      bool is_f = false;
      bool is_raw = false;
      while (j < n && j - i < 2 && std::string_view("rRbBfFuU").find(src[j]) != std::string_view::npos) {
        is_f = is_f || src[j] == 'f' || src[j] == 'F';
        is_raw = is_raw || src[j] == 'r' || src[j] == 'R';
        ++j;
      }
      if (j < n && (src[j] == '"' || src[j] == '\'')) {
        const char q = src[j];
        const bool triple = j + 2 < n && src[j + 1] == q && src[j + 2] == q;
        j += triple ? 3 : 1;
        std::string raw;
        const int start_line = line;
        bool closed = false;
        while (j < n) {
          if (src[j] == '\\' && j + 1 < n) {
            raw += src[j];
            raw += src[j + 1];
            if (src[j + 1] == '\n') ++line;
            j += 2;
            continue;
          }
          if (triple && j + 2 < n && src[j] == q && src[j + 1] == q && src[j + 2] == q) {
            j += 3;
            closed = true;
            break;
          }
          if (!triple && src[j] == q) {
            ++j;
            closed = true;
            break;
          }
          if (src[j] == '\n') {
            if (!triple) break;
            ++line;
          }
          raw += src[j++];
        }
        if (!closed) {
          throw LexError{"SyntaxError", "unterminated string literal", start_line};
        }
        toks.push_back({is_f ? Tok::FString : Tok::String, is_raw ? raw : unescape(raw), start_line});
        i = j;
        continue;
      }
    }
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < n && ident_char(src[j])) ++j;
      toks.push_back({Tok::Name, src.substr(i, j - i), line});
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      while (j < n && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '.' || src[j] == '_' ||
                       ((src[j] == '+' || src[j] == '-') && (src[j - 1] == 'e' || src[j - 1] == 'E')))) {
        ++j;
      }
      toks.push_back({Tok::Number, src.substr(i, j - i), line});
      i = j;
      continue;
    }
    static const char* const kOps[] = {"**=", "//=", "==", "!=", "<=", ">=", "**", "//", "+=", "-=", "*=", "/=",
                                       "%=",  "->",  "+",  "-",  "*",  "/",  "%",  "(",  ")",  "[",  "]",  "{",
                                       "}",   ",",   ".",  "=",  "<",  ">",  ":",  ";",  "@",  "&",  "|",  "~", "^"};
    bool matched = false;
    for (const char* op : kOps) {
      const std::size_t len = std::char_traits<char>::length(op);
      if (src.compare(i, len, op) == 0) {
        const std::string text(op);
        if (text == "(" || text == "[" || text == "{") ++depth;
        if ((text == ")" || text == "]" || text == "}") && depth > 0) --depth;
        toks.push_back({Tok::Op, text, line});
        i += len;
        matched = true;
        break;
      }
    }
    if (!matched) {
      throw LexError{"SyntaxError", std::string("invalid character '") + c + "'", line};
    }
  }
  emit_newline();
  toks.push_back({Tok::End, "", line});
  return toks;
}

// ---------------------------------------------------------------- values

Value make(None) { return Value{None{}}; }
Value make_bool(bool b) { return Value{b}; }
Value make_int(std::int64_t i) { return Value{i}; }
Value make_float(double d) { return Value{d}; }
Value make_str(std::string s) { return Value{std::move(s)}; }
Value make_seq(std::vector<Value> items, bool is_list) {
  auto seq = std::make_shared<Sequence>();
  seq->items = std::move(items);
  seq->is_list = is_list;
  return Value{seq};
}
Value make_image(visloop::ImageBlob blob) { return Value{std::make_shared<ImageValue>(ImageValue{std::move(blob)})}; }

template <typename T>
const T* as(const Value& v) {
  return std::get_if<T>(&v.v);
}

std::string type_name(const Value& v) {
  switch (v.v.index()) {
    case 0: return "NoneType";
    case 1: return "bool";
    case 2: return "int";
    case 3: return "float";
    case 4: return "str";
    case 5: return as<std::shared_ptr<Sequence>>(v)->get()->is_list ? "list" : "tuple";
    case 6: return "PngImageFile";
    case 7: return "module";
    case 8: return as<ExceptionValue>(v)->type;
    case 9: return "method";
  }
  return "object";
}

bool is_number(const Value& v) { return as<bool>(v) || as<std::int64_t>(v) || as<double>(v); }
bool is_integral(const Value& v) { return as<bool>(v) || as<std::int64_t>(v); }

std::int64_t to_int(const Value& v) {
  if (auto b = as<bool>(v)) return *b ? 1 : 0;
  if (auto i = as<std::int64_t>(v)) return *i;
  throw PyError{"TypeError", "'" + type_name(v) + "' object cannot be interpreted as an integer"};
}

double to_float(const Value& v) {
  if (auto d = as<double>(v)) return *d;
  if (is_integral(v)) return static_cast<double>(to_int(v));
  throw PyError{"TypeError", "must be real number, not " + type_name(v)};
}

std::string float_repr(double d) {
  if (std::isnan(d)) return "nan";
  if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, d);
  std::string s(buf, end);
  // Python switches to exponent notation from 1e16 and below 1e-4.
  const double a = std::fabs(d);
  if (a != 0.0 && (a >= 1e16 || a < 1e-4)) {
    auto [e2, ec2] = std::to_chars(buf, buf + sizeof buf, d, std::chars_format::scientific);
    s.assign(buf, e2);
    const auto epos = s.find('e');
    std::string mant = s.substr(0, epos);
    std::string exp = s.substr(epos + 1);
    const char sign = exp[0] == '-' ? '-' : '+';
    if (exp[0] == '-' || exp[0] == '+') exp.erase(0, 1);
    while (exp.size() > 2 && exp[0] == '0') exp.erase(0, 1);
    if (exp.size() < 2) exp = "0" + exp;
    return mant + "e" + sign + exp;
  }
  if (s.find_first_of(".e") == std::string::npos) {
    s += ".0";
  }
  return s;
}

std::string quote(const std::string& s) {
  const char q = (s.find('\'') != std::string::npos && s.find('"') == std::string::npos) ? '"' : '\'';
  std::string out(1, q);
  for (char c : s) {
    switch (c) {
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\\': out += "\\\\"; break;
      default:
        if (c == q) out += '\\';
        out += c;
    }
  }
  return out + q;
}

}  // namespace

std::string repr(const Value& value) {
  if (auto s = as<std::string>(value)) return quote(*s);
  return str(value);
}

std::string str(const Value& value) {
  const auto& v = value.v;
  switch (v.index()) {
    case 0: return "None";
    case 1: return std::get<bool>(v) ? "True" : "False";
    case 2: return std::to_string(std::get<std::int64_t>(v));
    case 3: return float_repr(std::get<double>(v));
    case 4: return std::get<std::string>(v);
    case 5: {
      const auto& seq = *std::get<std::shared_ptr<Sequence>>(v);
      std::string out = seq.is_list ? "[" : "(";
      for (std::size_t i = 0; i < seq.items.size(); ++i) {
        if (i) out += ", ";
        out += repr(seq.items[i]);
      }
      if (!seq.is_list && seq.items.size() == 1) out += ",";
      return out + (seq.is_list ? "]" : ")");
    }
    case 6: {
      const auto& img = std::get<std::shared_ptr<ImageValue>>(v)->blob;
      return "<PIL.PngImagePlugin.PngImageFile image mode=RGB size=" + std::to_string(img.width()) + "x" +
             std::to_string(img.height()) + ">";
    }
    case 7: {
      const std::string& name = std::get<Module>(v).name;
      const bool handle = name.size() > 2 && name.compare(name.size() - 2, 2, "()") == 0;
      return (handle ? "<object " : "<module '") + name + (handle ? ">" : "'>");
    }
    case 8: return std::get<ExceptionValue>(v).message;
    case 9: return "<bound method " + std::get<BoundMethod>(v).name + ">";
  }
  return "<object>";
}

namespace {

// ---------------------------------------------------------------- images

struct Pixels {
  std::uint32_t w, h;
  std::vector<std::uint8_t> rgb;
};

Pixels pixels_of(const visloop::ImageBlob& blob) { return {blob.width(), blob.height(), blob.decode_rgb()}; }

visloop::ImageBlob blob_of(const Pixels& p) { return visloop::ImageBlob::from_rgb(p.w, p.h, p.rgb); }

visloop::ImageBlob crop(const visloop::ImageBlob& blob, std::int64_t l, std::int64_t t, std::int64_t r,
                        std::int64_t b) {
  if (r <= l || b <= t) {
    throw PyError{"ValueError", "Coordinate 'right' is less than 'left'"};
  }
  const Pixels src = pixels_of(blob);
  Pixels out{static_cast<std::uint32_t>(r - l), static_cast<std::uint32_t>(b - t), {}};
  out.rgb.assign(static_cast<std::size_t>(out.w) * out.h * 3, 0);
  for (std::uint32_t y = 0; y < out.h; ++y) {
    for (std::uint32_t x = 0; x < out.w; ++x) {
      const std::int64_t sx = l + x;
      const std::int64_t sy = t + y;
      if (sx < 0 || sy < 0 || sx >= src.w || sy >= src.h) continue;
      for (int c = 0; c < 3; ++c) {
        out.rgb[(static_cast<std::size_t>(y) * out.w + x) * 3 + c] =
            src.rgb[(static_cast<std::size_t>(sy) * src.w + static_cast<std::size_t>(sx)) * 3 + c];
      }
    }
  }
  return blob_of(out);
}

visloop::ImageBlob resize(const visloop::ImageBlob& blob, std::int64_t w, std::int64_t h) {
  if (w < 1 || h < 1) {
    throw PyError{"ValueError", "height and width must be > 0"};
  }
  const Pixels src = pixels_of(blob);
  Pixels out{static_cast<std::uint32_t>(w), static_cast<std::uint32_t>(h), {}};
  out.rgb.resize(static_cast<std::size_t>(w) * h * 3);
  for (std::uint32_t y = 0; y < out.h; ++y) {
    const std::size_t sy = static_cast<std::size_t>(y) * src.h / out.h;
    for (std::uint32_t x = 0; x < out.w; ++x) {
      const std::size_t sx = static_cast<std::size_t>(x) * src.w / out.w;
      for (int c = 0; c < 3; ++c) {
        out.rgb[(static_cast<std::size_t>(y) * out.w + x) * 3 + c] = src.rgb[(sy * src.w + sx) * 3 + c];
      }
    }
  }
  return blob_of(out);
}

visloop::ImageBlob rotate180(const visloop::ImageBlob& blob) {
  Pixels p = pixels_of(blob);
  const std::size_t n = static_cast<std::size_t>(p.w) * p.h;
  for (std::size_t i = 0; i < n / 2; ++i) {
    for (int c = 0; c < 3; ++c) {
      std::swap(p.rgb[i * 3 + c], p.rgb[(n - 1 - i) * 3 + c]);
    }
  }
  return blob_of(p);
}

// ---------------------------------------------------------------- evaluator

struct Arg {
  std::optional<std::string> name;
  Value value;
};

const std::set<std::string> kBuiltins = {"print", "len", "str", "int", "float", "abs", "round", "max", "min",
                                         "sum", "repr", "bool", "tuple", "list", "range"};

const std::set<std::string> kExceptions = {"Exception",   "ValueError",        "RuntimeError", "TypeError",
                                           "KeyError",    "IndexError",        "NameError",    "AttributeError",
                                           "ZeroDivisionError", "AssertionError", "OSError",   "NotImplementedError"};

std::string canonical(const std::string& dotted) {
  static const std::pair<std::string, std::string> kAliases[] = {
      {"matplotlib.pyplot", "plt"}, {"PIL.Image", "Image"}, {"numpy", "np"}};
  for (const auto& [from, to] : kAliases) {
    if (dotted == from || dotted.rfind(from + ".", 0) == 0) {
      return to + dotted.substr(from.size());
    }
  }
  return dotted;
}

}  // namespace

class Evaluator {
 public:
  Evaluator(Interpreter& interp, RunOutcome& out) : in_(interp), out_(out) {}

  void exec_statement(const std::vector<Token>& toks) {
    toks_ = &toks;
    pos_ = 0;
    const Token& first = toks[0];
    if (first.kind == Tok::Name) {
      static const std::set<std::string> kUnsupported = {"def", "class", "if", "elif", "else", "for", "while",
                                                         "with", "try", "except", "finally", "return", "lambda",
                                                         "yield", "async", "await", "global", "del", "assert"};
      if (kUnsupported.count(first.text)) {
        throw PyError{"SyntaxError", "the mock kernel does not support '" + first.text + "' statements"};
      }
      if (first.text == "pass") return;
      if (first.text == "import") return do_import();
      if (first.text == "from") return do_from_import();
      if (first.text == "raise") return do_raise();
    }
    // Assignment when a top-level '=' (or augmented operator) is present.
    int depth = 0;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      const auto& t = toks[i];
      if (t.kind != Tok::Op) continue;
      if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
      if (t.text == ")" || t.text == "]" || t.text == "}") --depth;
      if (depth != 0) continue;
      if (t.text == "=") return do_assign(i);
      if (t.text.size() >= 2 && t.text.back() == '=' && t.text != "==" && t.text != "!=" && t.text != "<=" &&
          t.text != ">=") {
        return do_aug_assign(i);
      }
    }
    Value v = parse_expr_list();
    expect_end();
    (void)v;
  }

 private:
  // ---- statements

  void do_import() {
    next();
    while (true) {
      std::string dotted = expect_name();
      while (peek_op(".")) {
        next();
        dotted += "." + expect_name();
      }
      if (peek_name("as")) {
        next();
        in_.globals_[expect_name()] = Value{Module{dotted}};
      } else {
        in_.globals_[dotted.substr(0, dotted.find('.'))] = Value{Module{dotted.substr(0, dotted.find('.'))}};
      }
      if (!peek_op(",")) break;
      next();
    }
    expect_end();
  }

  void do_from_import() {
    next();
    std::string dotted = expect_name();
    while (peek_op(".")) {
      next();
      dotted += "." + expect_name();
    }
    if (!peek_name("import")) fail_syntax();
    next();
    if (peek_op("*")) {
      next();
      expect_end();
      return;
    }
    const bool paren = peek_op("(");
    if (paren) next();
    while (true) {
      const std::string name = expect_name();
      std::string alias = name;
      if (peek_name("as")) {
        next();
        alias = expect_name();
      }
      in_.globals_[alias] = Value{Module{dotted + "." + name}};
      if (!peek_op(",")) break;
      next();
      if (paren && peek_op(")")) break;
    }
    if (paren) expect_op(")");
    expect_end();
  }

  void do_raise() {
    next();
    if (at_end()) {
      throw PyError{"RuntimeError", "No active exception to reraise"};
    }
    Value v = parse_expr();
    expect_end();
    if (auto ex = as<ExceptionValue>(v)) {
      throw PyError{ex->type, ex->message};
    }
    if (auto m = as<Module>(v); m && m->name.rfind("builtins.", 0) == 0 && kExceptions.count(m->name.substr(9))) {
      throw PyError{m->name.substr(9), ""};
    }
    throw PyError{"TypeError", "exceptions must derive from BaseException"};
  }

  void do_assign(std::size_t eq) {
    std::vector<std::string> targets;
    for (std::size_t i = 0; i < eq; ++i) {
      const auto& t = (*toks_)[i];
      const bool want_name = i % 2 == 0;
      if (want_name && t.kind == Tok::Name) {
        targets.push_back(t.text);
      } else if (!want_name && t.kind == Tok::Op && t.text == ",") {
        continue;
      } else {
        throw PyError{"SyntaxError", "the mock kernel only assigns to plain names"};
      }
    }
    if (targets.empty()) fail_syntax();
    pos_ = eq + 1;
    Value v = parse_expr_list();
    expect_end();
    if (targets.size() == 1) {
      in_.globals_[targets[0]] = std::move(v);
      return;
    }
    auto seq = as<std::shared_ptr<Sequence>>(v);
    if (!seq) {
      throw PyError{"TypeError", "cannot unpack non-iterable " + type_name(v) + " object"};
    }
    if ((*seq)->items.size() != targets.size()) {
      throw PyError{"ValueError", "not enough values to unpack (expected " + std::to_string(targets.size()) +
                                      ", got " + std::to_string((*seq)->items.size()) + ")"};
    }
    for (std::size_t i = 0; i < targets.size(); ++i) {
      in_.globals_[targets[i]] = (*seq)->items[i];
    }
  }

  void do_aug_assign(std::size_t op_pos) {
    if (op_pos != 1 || (*toks_)[0].kind != Tok::Name) {
      throw PyError{"SyntaxError", "the mock kernel only assigns to plain names"};
    }
    const std::string name = (*toks_)[0].text;
    const std::string op = (*toks_)[op_pos].text.substr(0, (*toks_)[op_pos].text.size() - 1);
    pos_ = op_pos + 1;
    Value rhs = parse_expr_list();
    expect_end();
    in_.globals_[name] = binary(op, lookup(name), rhs);
  }

  // ---- expressions

  Value parse_expr_list() {
    Value first = parse_expr();
    if (!peek_op(",")) return first;
    std::vector<Value> items{std::move(first)};
    while (peek_op(",")) {
      next();
      if (at_end() || peek_op(")")) break;
      items.push_back(parse_expr());
    }
    return make_seq(std::move(items), false);
  }

  Value parse_expr() {
    Value left = parse_additive();
    static const std::set<std::string> kCmp = {"==", "!=", "<", ">", "<=", ">="};
    if (peek().kind == Tok::Op && kCmp.count(peek().text)) {
      const std::string op = next().text;
      Value right = parse_additive();
      return compare(op, left, right);
    }
    return left;
  }

  Value parse_additive() {
    Value left = parse_term();
    while (peek_op("+") || peek_op("-")) {
      const std::string op = next().text;
      left = binary(op, left, parse_term());
    }
    return left;
  }

  Value parse_term() {
    Value left = parse_unary();
    while (peek_op("*") || peek_op("/") || peek_op("//") || peek_op("%")) {
      const std::string op = next().text;
      left = binary(op, left, parse_unary());
    }
    return left;
  }

  Value parse_unary() {
    if (peek_op("-")) {
      next();
      Value v = parse_unary();
      if (auto d = as<double>(v)) return make_float(-*d);
      if (is_integral(v)) return make_int(-to_int(v));
      throw PyError{"TypeError", "bad operand type for unary -: '" + type_name(v) + "'"};
    }
    if (peek_op("+")) {
      next();
      return parse_unary();
    }
    if (peek_name("not")) {
      next();
      return make_bool(!truthy(parse_unary()));
    }
    return parse_power();
  }

  Value parse_power() {
    Value base = parse_postfix();
    if (peek_op("**")) {
      next();
      return binary("**", base, parse_unary());
    }
    return base;
  }

  Value parse_postfix() {
    Value v = parse_atom();
    while (true) {
      if (peek_op(".")) {
        next();
        v = attribute(v, expect_name());
      } else if (peek_op("(")) {
        next();
        std::vector<Arg> args = parse_args();
        v = call(v, args);
      } else if (peek_op("[")) {
        next();
        Value index = parse_expr();
        expect_op("]");
        v = subscript(v, index);
      } else {
        return v;
      }
    }
  }

  std::vector<Arg> parse_args() {
    std::vector<Arg> args;
    while (!peek_op(")")) {
      Arg arg;
      if (peek().kind == Tok::Name && pos_ + 1 < toks_->size() && (*toks_)[pos_ + 1].kind == Tok::Op &&
          (*toks_)[pos_ + 1].text == "=") {
        arg.name = next().text;
        next();
      }
      arg.value = parse_expr();
      args.push_back(std::move(arg));
      if (!peek_op(",")) break;
      next();
    }
    expect_op(")");
    return args;
  }

  Value parse_atom() {
    const Token& t = peek();
    if (t.kind == Tok::Number) {
      next();
      return number(t.text);
    }
    if (t.kind == Tok::String || t.kind == Tok::FString) {
      std::string s;
      while (peek().kind == Tok::String || peek().kind == Tok::FString) {
        const Token& part = next();
        s += part.kind == Tok::FString ? format_fstring(part.text) : part.text;
      }
      return make_str(std::move(s));
    }
    if (t.kind == Tok::Name) {
      next();
      if (t.text == "True") return make_bool(true);
      if (t.text == "False") return make_bool(false);
      if (t.text == "None") return make(None{});
      return lookup(t.text);
    }
    if (t.kind == Tok::Op && t.text == "(") {
      next();
      if (peek_op(")")) {
        next();
        return make_seq({}, false);
      }
      Value first = parse_expr();
      if (peek_op(")")) {
        next();
        return first;
      }
      std::vector<Value> items{std::move(first)};
      while (peek_op(",")) {
        next();
        if (peek_op(")")) break;
        items.push_back(parse_expr());
      }
      expect_op(")");
      return make_seq(std::move(items), false);
    }
    if (t.kind == Tok::Op && t.text == "[") {
      next();
      std::vector<Value> items;
      while (!peek_op("]")) {
        items.push_back(parse_expr());
        if (!peek_op(",")) break;
        next();
      }
      expect_op("]");
      return make_seq(std::move(items), true);
    }
    fail_syntax();
  }

  Value number(const std::string& text) {
    std::string clean;
    for (char c : text) {
      if (c != '_') clean += c;
    }
    const bool is_float = clean.find_first_of(".eE") != std::string::npos;
    if (is_float) {
      double d = 0.0;
      auto [p, ec] = std::from_chars(clean.data(), clean.data() + clean.size(), d);
      if (ec != std::errc() || p != clean.data() + clean.size()) fail_syntax();
      return make_float(d);
    }
    std::int64_t i = 0;
    auto [p, ec] = std::from_chars(clean.data(), clean.data() + clean.size(), i);
    if (ec == std::errc::result_out_of_range) {
      throw PyError{"OverflowError", "integer literal too large for the mock kernel"};
    }
    if (ec != std::errc() || p != clean.data() + clean.size()) fail_syntax();
    return make_int(i);
  }

  std::string format_fstring(const std::string& body) {
    std::string out;
    for (std::size_t i = 0; i < body.size(); ++i) {
      const char c = body[i];
      if (c == '{' && i + 1 < body.size() && body[i + 1] == '{') {
        out += '{';
        ++i;
        continue;
      }
      if (c == '}' && i + 1 < body.size() && body[i + 1] == '}') {
        out += '}';
        ++i;
        continue;
      }
      if (c != '{') {
        out += c;
        continue;
      }
      int depth = 1;
      std::size_t j = i + 1;
      std::size_t colon = std::string::npos;
      while (j < body.size() && depth > 0) {
        if (body[j] == '{' || body[j] == '(' || body[j] == '[') ++depth;
        if (body[j] == '}' || body[j] == ')' || body[j] == ']') --depth;
        if (depth == 1 && body[j] == ':' && colon == std::string::npos) colon = j;
        if (depth == 0) break;
        ++j;
      }
      if (j >= body.size()) {
        throw PyError{"SyntaxError", "f-string: expecting '}'"};
      }
      std::string expr = body.substr(i + 1, (colon == std::string::npos ? j : colon) - i - 1);
      std::string spec = colon == std::string::npos ? "" : body.substr(colon + 1, j - colon - 1);
      bool use_repr = false;
      if (expr.size() > 2 && expr.compare(expr.size() - 2, 2, "!r") == 0) {
        use_repr = true;
        expr.resize(expr.size() - 2);
      }
      Value v = eval_fragment(expr);
      out += spec.empty() ? (use_repr ? repr(v) : str(v)) : apply_spec(v, spec);
      i = j;
    }
    return out;
  }

  Value eval_fragment(const std::string& expr) {
    std::vector<Token> sub;
    try {
      sub = lex(expr);
    } catch (const LexError& e) {
      throw PyError{"SyntaxError", "f-string: " + e.message};
    }
    const auto* saved_toks = toks_;
    const auto saved_pos = pos_;
    toks_ = &sub;
    pos_ = 0;
    Value v = parse_expr_list();
    toks_ = saved_toks;
    pos_ = saved_pos;
    return v;
  }

  std::string apply_spec(const Value& v, const std::string& spec) {
    // [width][,][.precision][type]
    std::size_t i = 0;
    char align = 0;
    if (!spec.empty() && (spec[0] == '<' || spec[0] == '>' || spec[0] == '^')) {
      align = spec[0];
      ++i;
    }
    int width = 0;
    while (i < spec.size() && std::isdigit(static_cast<unsigned char>(spec[i]))) width = width * 10 + (spec[i++] - '0');
    int precision = -1;
    if (i < spec.size() && spec[i] == '.') {
      ++i;
      precision = 0;
      while (i < spec.size() && std::isdigit(static_cast<unsigned char>(spec[i])))
        precision = precision * 10 + (spec[i++] - '0');
    }
    const char type = i < spec.size() ? spec[i] : 0;
    std::string body;
    char buf[128];
    if (type == 'f' || type == 'e' || type == '%' || type == 'g') {
      double d = to_float(v);
      const int p = precision < 0 ? 6 : precision;
      if (type == '%') {
        std::snprintf(buf, sizeof buf, "%.*f%%", p, d * 100.0);
      } else {
        const char fmt[] = {'%', '.', '*', type, 0};
        std::snprintf(buf, sizeof buf, fmt, p, d);
      }
      body = buf;
    } else if (type == 'd') {
      body = std::to_string(to_int(v));
    } else if (type == 'x') {
      std::snprintf(buf, sizeof buf, "%llx", static_cast<long long>(to_int(v)));
      body = buf;
    } else if (precision >= 0 && as<double>(v)) {
      std::snprintf(buf, sizeof buf, "%.*g", precision, to_float(v));
      body = buf;
    } else {
      body = str(v);
    }
    if (static_cast<int>(body.size()) < width) {
      const std::size_t pad = static_cast<std::size_t>(width) - body.size();
      const bool right = align == '>' || (align == 0 && is_number(v));
      body = right ? std::string(pad, ' ') + body : body + std::string(pad, ' ');
    }
    return body;
  }

  Value lookup(const std::string& name) {
    auto it = in_.globals_.find(name);
    if (it != in_.globals_.end()) return it->second;
    if (kBuiltins.count(name) || kExceptions.count(name)) return Value{Module{"builtins." + name}};
    throw PyError{"NameError", "name '" + name + "' is not defined"};
  }

  Value attribute(const Value& v, const std::string& name) {
    if (auto m = as<Module>(v)) {
      const std::string full = canonical(m->name + "." + name);
      if (full == "math.pi") return make_float(std::numbers::pi);
      if (full == "math.e") return make_float(std::numbers::e);
      return Value{Module{m->name + "." + name}};
    }
    if (auto img = as<std::shared_ptr<ImageValue>>(v)) {
      const auto& blob = (*img)->blob;
      if (name == "size") return make_seq({make_int(blob.width()), make_int(blob.height())}, false);
      if (name == "width") return make_int(blob.width());
      if (name == "height") return make_int(blob.height());
      if (name == "mode") return make_str("RGB");
      static const std::set<std::string> kMethods = {"crop", "resize", "rotate", "convert", "getpixel", "copy"};
      if (kMethods.count(name)) return Value{BoundMethod{*img, name}};
    }
    throw PyError{"AttributeError", "'" + type_name(v) + "' object has no attribute '" + name + "'"};
  }

  Value subscript(const Value& v, const Value& index) {
    std::int64_t i = to_int(index);
    if (auto s = as<std::string>(v)) {
      const auto n = static_cast<std::int64_t>(s->size());
      if (i < 0) i += n;
      if (i < 0 || i >= n) throw PyError{"IndexError", "string index out of range"};
      return make_str(std::string(1, (*s)[static_cast<std::size_t>(i)]));
    }
    if (auto seq = as<std::shared_ptr<Sequence>>(v)) {
      const auto n = static_cast<std::int64_t>((*seq)->items.size());
      if (i < 0) i += n;
      if (i < 0 || i >= n) {
        throw PyError{"IndexError", std::string((*seq)->is_list ? "list" : "tuple") + " index out of range"};
      }
      return (*seq)->items[static_cast<std::size_t>(i)];
    }
    throw PyError{"TypeError", "'" + type_name(v) + "' object is not subscriptable"};
  }

  static bool truthy(const Value& v) {
    if (as<None>(v)) return false;
    if (auto b = as<bool>(v)) return *b;
    if (auto i = as<std::int64_t>(v)) return *i != 0;
    if (auto d = as<double>(v)) return *d != 0.0;
    if (auto s = as<std::string>(v)) return !s->empty();
    if (auto seq = as<std::shared_ptr<Sequence>>(v)) return !(*seq)->items.empty();
    return true;
  }

  Value compare(const std::string& op, const Value& a, const Value& b) {
    int c = 0;
    if (is_number(a) && is_number(b)) {
      const double x = to_float(a), y = to_float(b);
      c = x < y ? -1 : (x > y ? 1 : 0);
    } else if (as<std::string>(a) && as<std::string>(b)) {
      c = as<std::string>(a)->compare(*as<std::string>(b));
      c = c < 0 ? -1 : (c > 0 ? 1 : 0);
    } else if (op == "==" || op == "!=") {
      const bool eq = a.v.index() == b.v.index() && repr(a) == repr(b);
      return make_bool(op == "==" ? eq : !eq);
    } else {
      throw PyError{"TypeError", "'" + op + "' not supported between instances of '" + type_name(a) + "' and '" +
                                     type_name(b) + "'"};
    }
    if (op == "==") return make_bool(c == 0);
    if (op == "!=") return make_bool(c != 0);
    if (op == "<") return make_bool(c < 0);
    if (op == ">") return make_bool(c > 0);
    if (op == "<=") return make_bool(c <= 0);
    return make_bool(c >= 0);
  }

  Value binary(const std::string& op, const Value& a, const Value& b) {
    if (is_integral(a) && is_integral(b)) {
      const std::int64_t x = to_int(a), y = to_int(b);
      std::int64_t r = 0;
      if (op == "+" && !__builtin_add_overflow(x, y, &r)) return make_int(r);
      if (op == "-" && !__builtin_sub_overflow(x, y, &r)) return make_int(r);
      if (op == "*" && !__builtin_mul_overflow(x, y, &r)) return make_int(r);
      if (op == "+" || op == "-" || op == "*") throw PyError{"OverflowError", "integer overflow in the mock kernel"};
      if (op == "//" || op == "%") {
        if (y == 0) {
          throw PyError{"ZeroDivisionError", op == "//" ? "integer division or modulo by zero" : "integer modulo by zero"};
        }
        std::int64_t q = x / y;
        std::int64_t m = x % y;
        if (m != 0 && ((m < 0) != (y < 0))) {
          --q;
          m += y;
        }
        return make_int(op == "//" ? q : m);
      }
      if (op == "/") {
        if (y == 0) throw PyError{"ZeroDivisionError", "division by zero"};
        return make_float(static_cast<double>(x) / static_cast<double>(y));
      }
      if (op == "**") {
        if (y < 0) return make_float(std::pow(static_cast<double>(x), static_cast<double>(y)));
        std::int64_t acc = 1;
        for (std::int64_t k = 0; k < y; ++k) {
          if (__builtin_mul_overflow(acc, x, &acc)) throw PyError{"OverflowError", "integer overflow in the mock kernel"};
        }
        return make_int(acc);
      }
    }
    if (is_number(a) && is_number(b)) {
      const double x = to_float(a), y = to_float(b);
      if (op == "+") return make_float(x + y);
      if (op == "-") return make_float(x - y);
      if (op == "*") return make_float(x * y);
      if (op == "/" || op == "//" || op == "%") {
        if (y == 0.0) {
          throw PyError{"ZeroDivisionError", op == "/" ? "float division by zero" : "float modulo"};
        }
        if (op == "/") return make_float(x / y);
        const double q = std::floor(x / y);
        return make_float(op == "//" ? q : x - q * y);
      }
      if (op == "**") return make_float(std::pow(x, y));
    }
    if (op == "+" && as<std::string>(a) && as<std::string>(b)) {
      return make_str(*as<std::string>(a) + *as<std::string>(b));
    }
    if (op == "*" && as<std::string>(a) && is_integral(b)) {
      std::string out;
      for (std::int64_t k = 0; k < to_int(b); ++k) out += *as<std::string>(a);
      return make_str(out);
    }
    if (op == "%" && as<std::string>(a)) {
      throw PyError{"TypeError", "the mock kernel does not support %-formatting"};
    }
    auto sa = as<std::shared_ptr<Sequence>>(a);
    auto sb = as<std::shared_ptr<Sequence>>(b);
    if (op == "+" && sa && sb && (*sa)->is_list == (*sb)->is_list) {
      std::vector<Value> items = (*sa)->items;
      items.insert(items.end(), (*sb)->items.begin(), (*sb)->items.end());
      return make_seq(std::move(items), (*sa)->is_list);
    }
    throw PyError{"TypeError", "unsupported operand type(s) for " + op + ": '" + type_name(a) + "' and '" +
                                   type_name(b) + "'"};
  }

  static const Value* kwarg(const std::vector<Arg>& args, const std::string& name) {
    for (const auto& a : args) {
      if (a.name && *a.name == name) return &a.value;
    }
    return nullptr;
  }

  static std::vector<Value> positional(const std::vector<Arg>& args) {
    std::vector<Value> out;
    for (const auto& a : args) {
      if (!a.name) out.push_back(a.value);
    }
    return out;
  }

  static std::vector<Value> items_of(const Value& v) {
    if (auto seq = as<std::shared_ptr<Sequence>>(v)) return (*seq)->items;
    if (auto s = as<std::string>(v)) {
      std::vector<Value> out;
      for (char c : *s) out.push_back(make_str(std::string(1, c)));
      return out;
    }
    throw PyError{"TypeError", "'" + type_name(v) + "' object is not iterable"};
  }

  Value call(const Value& callee, const std::vector<Arg>& args) {
    if (auto bm = as<BoundMethod>(callee)) return call_image_method(*bm, positional(args));
    auto m = as<Module>(callee);
    if (!m) {
      throw PyError{"TypeError", "'" + type_name(callee) + "' object is not callable"};
    }
    const std::string name = canonical(m->name);
    const std::vector<Value> pos = positional(args);
    auto arg = [&](std::size_t i) -> const Value& {
      if (i >= pos.size()) {
        throw PyError{"TypeError", name.substr(name.rfind('.') + 1) + "() missing required argument"};
      }
      return pos[i];
    };

    if (name.rfind("builtins.", 0) == 0) {
      const std::string fn = name.substr(9);
      if (kExceptions.count(fn)) {
        return Value{ExceptionValue{fn, pos.empty() ? "" : str(pos[0])}};
      }
      return call_builtin(fn, pos, args);
    }
    if (name == "plt.imshow") {
      in_.figure_dirty_ = true;
      if (auto img = as<std::shared_ptr<ImageValue>>(arg(0))) in_.figure_image_ = (*img)->blob;
      return make(None{});
    }
    if (name == "plt.show") {
      if (in_.figure_dirty_) {
        out_.figures.push_back(in_.figure_image_ ? *in_.figure_image_ : visloop::ImageBlob::solid(64, 48, 255, 255, 255));
      }
      in_.figure_dirty_ = false;
      in_.figure_image_.reset();
      return make(None{});
    }
    if (name == "plt.close" || name == "plt.clf") {
      in_.figure_dirty_ = false;
      in_.figure_image_.reset();
      return make(None{});
    }
    if (name.rfind("plt.", 0) == 0) {
      in_.figure_dirty_ = true;
      return make(None{});
    }
    if (name == "Image.open") {
      throw PyError{"FileNotFoundError", "[Errno 2] No such file or directory: " + repr(arg(0))};
    }
    if (name == "Image.new") {
      auto size = items_of(arg(1));
      if (size.size() != 2) throw PyError{"ValueError", "size must be a (width, height) tuple"};
      std::uint8_t rgb[3] = {0, 0, 0};
      if (pos.size() > 2) {
        if (auto s = as<std::string>(pos[2]); s && *s == "white") rgb[0] = rgb[1] = rgb[2] = 255;
        if (auto seq = as<std::shared_ptr<Sequence>>(pos[2]); seq && (*seq)->items.size() >= 3) {
          for (int c = 0; c < 3; ++c) rgb[c] = static_cast<std::uint8_t>(to_int((*seq)->items[c]));
        }
      }
      const auto w = to_int(size[0]), h = to_int(size[1]);
      if (w < 1 || h < 1) throw PyError{"ValueError", "width and height must be > 0"};
      return make_image(visloop::ImageBlob::solid(static_cast<std::uint32_t>(w), static_cast<std::uint32_t>(h), rgb[0],
                                                  rgb[1], rgb[2]));
    }
    if (name == "os._exit") {
      std::_Exit(static_cast<int>(to_int(arg(0))));
    }
    if (name == "os.abort") {
      std::abort();
    }
    if (name == "os.getpid") return make_int(::getpid());
    if (name == "os.kill") {
      ::kill(static_cast<pid_t>(to_int(arg(0))), static_cast<int>(to_int(arg(1))));
      return make(None{});
    }
    if (name == "time.sleep") {
      std::this_thread::sleep_for(std::chrono::duration<double>(to_float(arg(0))));
      return make(None{});
    }
    if (name == "time.time") {
      return make_float(std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count());
    }
    if (name == "sys.exit") {
      throw PyError{"SystemExit", pos.empty() ? "" : str(pos[0])};
    }
    if (name == "sys.stderr.write" || name == "sys.stdout.write") {
      const auto* s = as<std::string>(arg(0));
      if (!s) throw PyError{"TypeError", "write() argument must be str, not " + type_name(arg(0))};
      (name == "sys.stderr.write" ? out_.stderr_text : out_.stdout_text) += *s;
      return make_int(static_cast<std::int64_t>(s->size()));
    }
    if (name.rfind("math.", 0) == 0) return call_math(name.substr(5), pos);
    // Anything else is accepted and does nothing; the result is an opaque
    // handle so chained calls on it are no-ops too.
    return Value{Module{m->name + "()"}};
  }

  Value call_math(const std::string& fn, const std::vector<Value>& pos) {
    auto x = [&](std::size_t i) {
      if (i >= pos.size()) throw PyError{"TypeError", fn + "() missing required argument"};
      return to_float(pos[i]);
    };
    if (fn == "sqrt") {
      if (x(0) < 0) throw PyError{"ValueError", "math domain error"};
      return make_float(std::sqrt(x(0)));
    }
    if (fn == "floor") return make_int(static_cast<std::int64_t>(std::floor(x(0))));
    if (fn == "ceil") return make_int(static_cast<std::int64_t>(std::ceil(x(0))));
    if (fn == "hypot") return make_float(std::hypot(x(0), x(1)));
    if (fn == "atan2") return make_float(std::atan2(x(0), x(1)));
    if (fn == "degrees") return make_float(x(0) * 180.0 / std::numbers::pi);
    if (fn == "radians") return make_float(x(0) * std::numbers::pi / 180.0);
    if (fn == "sin") return make_float(std::sin(x(0)));
    if (fn == "cos") return make_float(std::cos(x(0)));
    if (fn == "exp") return make_float(std::exp(x(0)));
    if (fn == "fabs") return make_float(std::fabs(x(0)));
    if (fn == "log") {
      if (x(0) <= 0) throw PyError{"ValueError", "math domain error"};
      return make_float(std::log(x(0)));
    }
    throw PyError{"AttributeError", "module 'math' has no attribute '" + fn + "'"};
  }

  Value call_builtin(const std::string& fn, const std::vector<Value>& pos, const std::vector<Arg>& args) {
    auto need = [&](std::size_t n) {
      if (pos.size() < n) {
        throw PyError{"TypeError", fn + "() takes at least " + std::to_string(n) + " argument(s)"};
      }
    };
    if (fn == "print") {
      std::string sep = " ", end = "\n";
      if (auto s = kwarg(args, "sep"); s && as<std::string>(*s)) sep = *as<std::string>(*s);
      if (auto e = kwarg(args, "end"); e && as<std::string>(*e)) end = *as<std::string>(*e);
      std::string line;
      for (std::size_t i = 0; i < pos.size(); ++i) {
        if (i) line += sep;
        line += str(pos[i]);
      }
      out_.stdout_text += line + end;
      return make(None{});
    }
    if (fn == "len") {
      need(1);
      if (auto s = as<std::string>(pos[0])) {
        // Code points, not bytes.
        const auto n = std::count_if((*s).begin(), (*s).end(), [](char c) { return (c & 0xC0) != 0x80; });
        return make_int(static_cast<std::int64_t>(n));
      }
      if (auto seq = as<std::shared_ptr<Sequence>>(pos[0])) return make_int(static_cast<std::int64_t>((*seq)->items.size()));
      throw PyError{"TypeError", "object of type '" + type_name(pos[0]) + "' has no len()"};
    }
    if (fn == "str") return make_str(pos.empty() ? "" : str(pos[0]));
    if (fn == "repr") {
      need(1);
      return make_str(repr(pos[0]));
    }
    if (fn == "bool") return make_bool(!pos.empty() && truthy(pos[0]));
    if (fn == "int") {
      if (pos.empty()) return make_int(0);
      if (auto s = as<std::string>(pos[0])) {
        std::int64_t i = 0;
        auto [p, ec] = std::from_chars(s->data(), s->data() + s->size(), i);
        if (ec != std::errc() || p != s->data() + s->size()) {
          throw PyError{"ValueError", "invalid literal for int() with base 10: " + repr(pos[0])};
        }
        return make_int(i);
      }
      if (auto d = as<double>(pos[0])) return make_int(static_cast<std::int64_t>(std::trunc(*d)));
      return make_int(to_int(pos[0]));
    }
    if (fn == "float") {
      if (pos.empty()) return make_float(0.0);
      if (auto s = as<std::string>(pos[0])) {
        double d = 0.0;
        auto [p, ec] = std::from_chars(s->data(), s->data() + s->size(), d);
        if (ec != std::errc() || p != s->data() + s->size()) {
          throw PyError{"ValueError", "could not convert string to float: " + repr(pos[0])};
        }
        return make_float(d);
      }
      return make_float(to_float(pos[0]));
    }
    if (fn == "abs") {
      need(1);
      if (auto d = as<double>(pos[0])) return make_float(std::fabs(*d));
      return make_int(std::llabs(to_int(pos[0])));
    }
    if (fn == "round") {
      need(1);
      if (pos.size() > 1 && !as<None>(pos[1])) {
        const double scale = std::pow(10.0, static_cast<double>(to_int(pos[1])));
        return make_float(std::nearbyint(to_float(pos[0]) * scale) / scale);
      }
      return make_int(static_cast<std::int64_t>(std::nearbyint(to_float(pos[0]))));
    }
    if (fn == "max" || fn == "min") {
      need(1);
      std::vector<Value> items = pos.size() == 1 ? items_of(pos[0]) : pos;
      if (items.empty()) throw PyError{"ValueError", fn + "() arg is an empty sequence"};
      Value best = items[0];
      for (std::size_t i = 1; i < items.size(); ++i) {
        const bool better = truthy(compare(fn == "max" ? ">" : "<", items[i], best));
        if (better) best = items[i];
      }
      return best;
    }
    if (fn == "sum") {
      need(1);
      Value acc = make_int(0);
      for (const auto& item : items_of(pos[0])) acc = binary("+", acc, item);
      return acc;
    }
    if (fn == "tuple" || fn == "list") {
      return make_seq(pos.empty() ? std::vector<Value>{} : items_of(pos[0]), fn == "list");
    }
    if (fn == "range") {
      need(1);
      std::int64_t start = 0, stop = 0, step = 1;
      if (pos.size() == 1) {
        stop = to_int(pos[0]);
      } else {
        start = to_int(pos[0]);
        stop = to_int(pos[1]);
        if (pos.size() > 2) step = to_int(pos[2]);
      }
      if (step == 0) throw PyError{"ValueError", "range() arg 3 must not be zero"};
      std::vector<Value> items;
      for (std::int64_t i = start; step > 0 ? i < stop : i > stop; i += step) {
        items.push_back(make_int(i));
        if (items.size() > 1000000) throw PyError{"MemoryError", "range too large for the mock kernel"};
      }
      return make_seq(std::move(items), true);
    }
    throw PyError{"NameError", "name '" + fn + "' is not defined"};
  }

  Value call_image_method(const BoundMethod& bm, const std::vector<Value>& pos) {
    const auto& blob = bm.self->blob;
    if (bm.name == "copy" || bm.name == "convert") return make_image(blob);
    if (bm.name == "crop") {
      if (pos.empty()) throw PyError{"TypeError", "crop() missing box"};
      auto box = items_of(pos[0]);
      if (box.size() != 4) throw PyError{"ValueError", "crop box must have 4 coordinates"};
      return make_image(crop(blob, to_int(box[0]), to_int(box[1]), to_int(box[2]), to_int(box[3])));
    }
    if (bm.name == "resize") {
      if (pos.empty()) throw PyError{"TypeError", "resize() missing size"};
      auto size = items_of(pos[0]);
      if (size.size() != 2) throw PyError{"ValueError", "size must be a (width, height) tuple"};
      return make_image(resize(blob, to_int(size[0]), to_int(size[1])));
    }
    if (bm.name == "rotate") {
      if (pos.empty()) throw PyError{"TypeError", "rotate() missing angle"};
      const double angle = std::fmod(std::fabs(to_float(pos[0])), 360.0);
      return make_image(angle == 180.0 ? rotate180(blob) : blob);
    }
    if (bm.name == "getpixel") {
      if (pos.empty()) throw PyError{"TypeError", "getpixel() missing xy"};
      auto xy = items_of(pos[0]);
      if (xy.size() != 2) throw PyError{"ValueError", "xy must be an (x, y) tuple"};
      const auto x = to_int(xy[0]), y = to_int(xy[1]);
      if (x < 0 || y < 0 || x >= blob.width() || y >= blob.height()) {
        throw PyError{"IndexError", "image index out of range"};
      }
      const auto rgb = blob.decode_rgb();
      const std::size_t at = (static_cast<std::size_t>(y) * blob.width() + static_cast<std::size_t>(x)) * 3;
      return make_seq({make_int(rgb[at]), make_int(rgb[at + 1]), make_int(rgb[at + 2])}, false);
    }
    throw PyError{"AttributeError", "'PngImageFile' object has no attribute '" + bm.name + "'"};
  }

  // ---- token helpers

  const Token& peek() const { return (*toks_)[pos_]; }
  const Token& next() { return (*toks_)[pos_++]; }
  bool at_end() const { return peek().kind == Tok::Newline || peek().kind == Tok::End || peek_op(";"); }
  bool peek_op(const char* op) const { return peek().kind == Tok::Op && peek().text == op; }
  bool peek_name(const char* name) const { return peek().kind == Tok::Name && peek().text == name; }
  [[noreturn]] void fail_syntax() const { throw PyError{"SyntaxError", "invalid syntax"}; }
  void expect_op(const char* op) {
    if (!peek_op(op)) fail_syntax();
    next();
  }
  std::string expect_name() {
    if (peek().kind != Tok::Name) fail_syntax();
    return next().text;
  }
  void expect_end() {
    if (!at_end()) fail_syntax();
  }

  Interpreter& in_;
  RunOutcome& out_;
  const std::vector<Token>* toks_ = nullptr;
  std::size_t pos_ = 0;
};

void Interpreter::bind_image(const std::string& name, visloop::ImageBlob blob) {
  globals_[name] = make_image(std::move(blob));
}

RunOutcome Interpreter::run(const std::string& code) {
  RunOutcome out;
  figure_dirty_ = false;
  figure_image_.reset();
  auto traceback = [](int line, const std::string& type, const std::string& message) {
    std::string tb = "Traceback (most recent call last):\n  File \"<snippet>\", line " + std::to_string(line) +
                     ", in <module>\n" + type;
    if (!message.empty()) tb += ": " + message;
    return tb + "\n";
  };
  std::vector<Token> toks;
  try {
    toks = lex(code);
  } catch (const LexError& e) {
    out.ok = false;
    out.traceback = "  File \"<snippet>\", line " + std::to_string(e.line) + "\n" + e.type + ": " + e.message + "\n";
    return out;
  }
  Evaluator eval(*this, out);
  std::vector<Token> stmt;
  for (const auto& t : toks) {
    const bool boundary = t.kind == Tok::Newline || t.kind == Tok::End || (t.kind == Tok::Op && t.text == ";");
    if (!boundary) {
      stmt.push_back(t);
      continue;
    }
    if (stmt.empty()) continue;
    const int line = stmt.front().line;
    stmt.push_back({Tok::End, "", line});
    try {
      eval.exec_statement(stmt);
    } catch (const PyError& e) {
      out.ok = false;
      out.traceback = traceback(line, e.type, e.message);
      return out;
    } catch (const visloop::Error& e) {
      out.ok = false;
      out.traceback = traceback(line, "OSError", e.what());
      return out;
    }
    stmt.clear();
  }
  return out;
}

}  // namespace mini_python
