#include "hjbpinn/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "hjbpinn/io.hpp"

namespace hjbpinn {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool valid_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  }
  return true;
}

// Cuts a trailing comment that is not inside a quoted string.
std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

bool balanced(std::string_view v) {
  if (v.front() == '"') return v.size() >= 2 && v.back() == '"';
  if (v.front() == '[') return v.back() == ']';
  return v.find_first_of("\"[]") == std::string_view::npos;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && !s.empty();
}

std::vector<std::string_view> list_items(std::string_view v) {
  v = trim(v);
  if (v.size() < 2 || v.front() != '[' || v.back() != ']') return {};
  std::string_view body = trim(v.substr(1, v.size() - 2));
  std::vector<std::string_view> items;
  while (!body.empty()) {
    const auto comma = body.find(',');
    items.push_back(trim(body.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    body = trim(body.substr(comma + 1));
  }
  return items;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out + "\"";
}

}  // namespace

Config Config::parse(std::string_view text, const std::string& origin) {
  Config cfg;
  std::size_t lineno = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (!valid_key(key)) throw ConfigError(where + ": invalid key '" + key + "'");
    if (value.empty()) throw ConfigError(where + ": empty value for '" + key + "'");
    if (!balanced(value)) throw ConfigError(where + ": malformed value for '" + key + "'");
    if (cfg.raw_.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    cfg.raw_[key] = std::string(value);
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return parse(text, path.string());
}

void Config::set_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  const std::string key(trim(assignment.substr(0, eq)));
  const std::string_view value = trim(assignment.substr(eq + 1));
  if (!valid_key(key) || value.empty() || !balanced(value)) {
    throw ConfigError("malformed override '" + std::string(assignment) + "'");
  }
  raw_[key] = std::string(value);
}

void Config::set(const std::string& key, const std::string& raw) {
  if (!valid_key(key)) throw ConfigError("invalid key '" + key + "'");
  raw_[key] = raw;
}

std::string Config::raw_value(const std::string& key) const { return raw_.at(key); }

std::int64_t Config::get_int(const std::string& key, std::int64_t def) {
  used_.insert(key);
  std::int64_t v = def;
  if (has(key) && !parse_number(raw_value(key), v)) throw ConfigError("'" + key + "' must be an integer");
  resolved_[key] = std::to_string(v);
  return v;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t def) {
  used_.insert(key);
  std::uint64_t v = def;
  if (has(key) && !parse_number(raw_value(key), v)) {
    throw ConfigError("'" + key + "' must be a nonnegative integer");
  }
  resolved_[key] = std::to_string(v);
  return v;
}

double Config::get_double(const std::string& key, double def) {
  used_.insert(key);
  double v = def;
  if (has(key) && (!parse_number(raw_value(key), v) || !std::isfinite(v))) {
    throw ConfigError("'" + key + "' must be a finite number");
  }
  resolved_[key] = fmt_double(v);
  return v;
}

std::optional<double> Config::get_optional_double(const std::string& key) {
  used_.insert(key);
  if (!has(key)) return std::nullopt;
  return get_double(key, 0.0);
}

bool Config::get_bool(const std::string& key, bool def) {
  used_.insert(key);
  bool v = def;
  if (has(key)) {
    const std::string r = raw_value(key);
    if (r == "true") {
      v = true;
    } else if (r == "false") {
      v = false;
    } else {
      throw ConfigError("'" + key + "' must be true or false");
    }
  }
  resolved_[key] = v ? "true" : "false";
  return v;
}

std::string Config::get_string(const std::string& key, const std::string& def) {
  used_.insert(key);
  std::string v = def;
  if (has(key)) {
    const std::string r = raw_value(key);
    if (r.front() == '"') {
      v.clear();
      for (std::size_t i = 1; i + 1 < r.size(); ++i) {
        if (r[i] == '\\' && i + 2 < r.size()) ++i;
        v.push_back(r[i]);
      }
    } else {
      v = r;  // bare word, accepted for command-line convenience
    }
  }
  resolved_[key] = quote(v);
  return v;
}

std::vector<std::int64_t> Config::get_int_list(const std::string& key, const std::vector<std::int64_t>& def) {
  used_.insert(key);
  std::vector<std::int64_t> v = def;
  if (has(key)) {
    const std::string r = raw_value(key);
    const auto items = list_items(r);
    if (items.empty()) throw ConfigError("'" + key + "' must be a nonempty list of integers");
    v.clear();
    for (auto item : items) {
      std::int64_t x = 0;
      if (!parse_number(item, x)) throw ConfigError("'" + key + "' must be a list of integers");
      v.push_back(x);
    }
  }
  std::string text = "[";
  for (std::size_t i = 0; i < v.size(); ++i) text += (i ? ", " : "") + std::to_string(v[i]);
  resolved_[key] = text + "]";
  return v;
}

std::vector<std::uint64_t> Config::get_u64_list(const std::string& key, const std::vector<std::uint64_t>& def) {
  used_.insert(key);
  std::vector<std::uint64_t> v = def;
  if (has(key)) {
    const std::string r = raw_value(key);
    const auto items = list_items(r);
    if (items.empty()) throw ConfigError("'" + key + "' must be a nonempty list of integers");
    v.clear();
    for (auto item : items) {
      std::uint64_t x = 0;
      if (!parse_number(item, x)) throw ConfigError("'" + key + "' must be a list of nonnegative integers");
      v.push_back(x);
    }
  }
  std::string text = "[";
  for (std::size_t i = 0; i < v.size(); ++i) text += (i ? ", " : "") + std::to_string(v[i]);
  resolved_[key] = text + "]";
  return v;
}

void Config::reject_unused() const {
  std::string unknown;
  for (const auto& [key, value] : raw_) {
    if (!used_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
  }
  if (!unknown.empty()) throw ConfigError("unknown config keys: " + unknown);
}

std::string Config::resolved_text() const {
  std::ostringstream os;
  for (const auto& [key, value] : resolved_) os << key << " = " << value << '\n';
  return os.str();
}

}  // namespace hjbpinn
