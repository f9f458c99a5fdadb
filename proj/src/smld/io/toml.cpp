#include "smld/io/toml.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "smld/core/error.hpp"

namespace smld::io::toml {

namespace {

struct Cursor {
  const std::string& s;
  size_t pos = 0;
  int line = 1;
  const std::string& origin;

  [[noreturn]] void fail(const std::string& msg) const {
    fail_config(origin + ":" + std::to_string(line) + ": " + msg);
  }

  bool done() const { return pos >= s.size(); }
  char peek() const { return s[pos]; }
  char take() { return s[pos++]; }

  void skip_ws() {
    while (!done() && (peek() == ' ' || peek() == '\t')) ++pos;
  }
};

bool is_bare_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string parse_bare_or_quoted_key(Cursor& c) {
  c.skip_ws();
  if (c.done()) c.fail("expected a key");
  if (c.peek() == '"') {
    c.take();
    std::string out;
    while (!c.done() && c.peek() != '"') out.push_back(c.take());
    if (c.done()) c.fail("unterminated quoted key");
    c.take();
    return out;
  }
  std::string out;
  while (!c.done() && is_bare_char(c.peek())) out.push_back(c.take());
  if (out.empty()) c.fail("expected a key");
  return out;
}

std::string parse_dotted_key(Cursor& c) {
  std::string key = parse_bare_or_quoted_key(c);
  c.skip_ws();
  while (!c.done() && c.peek() == '.') {
    c.take();
    key += "." + parse_bare_or_quoted_key(c);
    c.skip_ws();
  }
  return key;
}

Value parse_value(Cursor& c);

Value parse_basic_string(Cursor& c) {
  Value v;
  v.kind = Value::Kind::String;
  c.take();  // opening quote
  while (true) {
    if (c.done()) c.fail("unterminated string");
    char ch = c.take();
    if (ch == '"') break;
    if (ch == '\n') c.fail("newline in string");
    if (ch == '\\') {
      if (c.done()) c.fail("dangling escape");
      char esc = c.take();
      switch (esc) {
        case 'n': v.str.push_back('\n'); break;
        case 't': v.str.push_back('\t'); break;
        case 'r': v.str.push_back('\r'); break;
        case '"': v.str.push_back('"'); break;
        case '\\': v.str.push_back('\\'); break;
        default: c.fail(std::string("unsupported escape \\") + esc);
      }
    } else {
      v.str.push_back(ch);
    }
  }
  return v;
}

Value parse_array(Cursor& c) {
  Value v;
  v.kind = Value::Kind::Array;
  c.take();  // '['
  while (true) {
    c.skip_ws();
    while (!c.done() && c.peek() == '\n') {
      c.take();
      ++c.line;
      c.skip_ws();
    }
    if (c.done()) c.fail("unterminated array");
    if (c.peek() == ']') {
      c.take();
      break;
    }
    v.array.push_back(parse_value(c));
    c.skip_ws();
    while (!c.done() && c.peek() == '\n') {
      c.take();
      ++c.line;
      c.skip_ws();
    }
    if (!c.done() && c.peek() == ',') {
      c.take();
      continue;
    }
    if (!c.done() && c.peek() == ']') {
      c.take();
      break;
    }
    c.fail("expected ',' or ']' in array");
  }
  return v;
}

Value parse_scalar_token(Cursor& c) {
  std::string tok;
  while (!c.done() && c.peek() != '\n' && c.peek() != ',' && c.peek() != ']' && c.peek() != '#') {
    tok.push_back(c.take());
  }
  while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t')) tok.pop_back();
  if (tok.empty()) c.fail("expected a value");
  Value v;
  if (tok == "true" || tok == "false") {
    v.kind = Value::Kind::Bool;
    v.boolean = tok == "true";
    return v;
  }
  bool looks_float = tok.find_first_of(".eE") != std::string::npos;
  try {
    size_t pos = 0;
    if (!looks_float) {
      v.integer = std::stoll(tok, &pos);
      if (pos == tok.size()) {
        v.kind = Value::Kind::Int;
        v.number = static_cast<double>(v.integer);
        return v;
      }
    }
    pos = 0;
    v.number = std::stod(tok, &pos);
    if (pos == tok.size()) {
      v.kind = Value::Kind::Float;
      return v;
    }
  } catch (const std::exception&) {
    // fall through to the error below
  }
  c.fail("cannot parse value '" + tok + "' (strings must be quoted)");
}

Value parse_value(Cursor& c) {
  c.skip_ws();
  if (c.done()) c.fail("expected a value");
  if (c.peek() == '"') return parse_basic_string(c);
  if (c.peek() == '[') return parse_array(c);
  return parse_scalar_token(c);
}

void skip_comment_and_eol(Cursor& c) {
  c.skip_ws();
  if (!c.done() && c.peek() == '#') {
    while (!c.done() && c.peek() != '\n') c.take();
  }
  if (!c.done()) {
    if (c.peek() != '\n') c.fail("unexpected trailing characters");
    c.take();
    ++c.line;
  }
}

}  // namespace

Table parse_string(const std::string& text, const std::string& origin) {
  Table table;
  Cursor c{text, 0, 1, origin};
  std::string prefix;
  while (!c.done()) {
    c.skip_ws();
    if (c.done()) break;
    char ch = c.peek();
    if (ch == '\n') {
      c.take();
      ++c.line;
      continue;
    }
    if (ch == '#') {
      skip_comment_and_eol(c);
      continue;
    }
    if (ch == '[') {
      c.take();
      if (!c.done() && c.peek() == '[') c.fail("arrays of tables are not supported");
      prefix = parse_dotted_key(c);
      c.skip_ws();
      if (c.done() || c.take() != ']') c.fail("expected ']' after table name");
      skip_comment_and_eol(c);
      continue;
    }
    std::string key = parse_dotted_key(c);
    c.skip_ws();
    if (c.done() || c.take() != '=') c.fail("expected '=' after key '" + key + "'");
    Value v = parse_value(c);
    skip_comment_and_eol(c);
    std::string full = prefix.empty() ? key : prefix + "." + key;
    if (table.count(full)) c.fail("duplicate key '" + full + "'");
    table.emplace(std::move(full), std::move(v));
  }
  return table;
}

Table parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_config("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str(), path);
}

Value parse_value_lenient(const std::string& text) {
  try {
    Table t = parse_string("x = " + text + "\n", "<override>");
    return t.at("x");
  } catch (const Error&) {
    Value v;
    v.kind = Value::Kind::String;
    v.str = text;
    return v;
  }
}

bool has_key(const Table& t, const std::string& key) { return t.count(key) > 0; }

std::string Value::as_string(const std::string& key) const {
  switch (kind) {
    case Kind::String: return str;
    case Kind::Int: return std::to_string(integer);
    case Kind::Bool: return boolean ? "true" : "false";
    case Kind::Float: {
      std::ostringstream os;
      os << number;
      return os.str();
    }
    default: fail_config("field " + key + ": expected a string");
  }
}

int64_t Value::as_int(const std::string& key) const {
  if (kind == Kind::Int) return integer;
  if (kind == Kind::Float && number == static_cast<double>(static_cast<int64_t>(number))) {
    return static_cast<int64_t>(number);
  }
  if (kind == Kind::String) {
    try {
      size_t pos = 0;
      int64_t v = std::stoll(str, &pos);
      if (pos == str.size()) return v;
    } catch (const std::exception&) {
    }
  }
  fail_config("field " + key + ": expected an integer");
}

double Value::as_double(const std::string& key) const {
  if (kind == Kind::Float) return number;
  if (kind == Kind::Int) return static_cast<double>(integer);
  if (kind == Kind::String) {
    try {
      size_t pos = 0;
      double v = std::stod(str, &pos);
      if (pos == str.size()) return v;
    } catch (const std::exception&) {
    }
  }
  fail_config("field " + key + ": expected a number");
}

bool Value::as_bool(const std::string& key) const {
  if (kind == Kind::Bool) return boolean;
  if (kind == Kind::String) {
    if (str == "true") return true;
    if (str == "false") return false;
  }
  fail_config("field " + key + ": expected true or false");
}

std::vector<int64_t> Value::as_int_array(const std::string& key) const {
  if (kind != Kind::Array) fail_config("field " + key + ": expected an array");
  std::vector<int64_t> out;
  for (const Value& v : array) out.push_back(v.as_int(key));
  return out;
}

std::vector<double> Value::as_double_array(const std::string& key) const {
  if (kind != Kind::Array) fail_config("field " + key + ": expected an array");
  std::vector<double> out;
  for (const Value& v : array) out.push_back(v.as_double(key));
  return out;
}

std::vector<std::string> Value::as_string_array(const std::string& key) const {
  if (kind != Kind::Array) fail_config("field " + key + ": expected an array");
  std::vector<std::string> out;
  for (const Value& v : array) out.push_back(v.as_string(key));
  return out;
}

}  // namespace smld::io::toml
