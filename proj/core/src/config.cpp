#include "mamp/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "mamp/error.hpp"

namespace mamp {

namespace {

[[noreturn]] void fail(const std::string& origin, std::size_t line, const std::string& what) {
  throw ConfigError(origin + ":" + std::to_string(line) + ": " + what);
}

bool valid_key(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::islower(static_cast<unsigned char>(c)) ||
          std::isdigit(static_cast<unsigned char>(c)) || c == '_')) {
      return false;
    }
  }
  return true;
}

std::string strip(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

FlatConfig parse_config_text(const std::string& text, const std::string& origin) {
  FlatConfig out;
  std::vector<std::string> stack;  // open section names
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line = line.substr(0, hash);
    }
    if (strip(line).empty()) continue;
    if (line.find('\t') != std::string::npos) fail(origin, line_no, "tabs are not allowed");

    std::size_t indent = 0;
    while (indent < line.size() && line[indent] == ' ') ++indent;
    if (indent % 2 != 0) fail(origin, line_no, "indentation must be a multiple of 2 spaces");
    const std::size_t depth = indent / 2;
    if (depth > stack.size()) {
      fail(origin, line_no, "indented too deep (no enclosing section)");
    }
    stack.resize(depth);

    const std::string body = line.substr(indent);
    const auto colon = body.find(':');
    if (colon == std::string::npos) fail(origin, line_no, "expected 'key: value' or 'key:'");
    const std::string key = strip(body.substr(0, colon));
    const std::string value = strip(body.substr(colon + 1));
    if (!valid_key(key)) {
      fail(origin, line_no, "bad key '" + key + "' (lowercase, digits, underscore only)");
    }

    std::string dotted;
    for (const auto& s : stack) dotted += s + ".";
    dotted += key;

    if (value.empty()) {
      stack.push_back(key);
    } else {
      if (!out.emplace(dotted, value).second) {
        fail(origin, line_no, "duplicate key '" + dotted + "'");
      }
    }
  }
  return out;
}

FlatConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string ConfigReader::take(const std::string& key) {
  consumed_.insert(key);
  const auto it = values_.find(key);
  return it == values_.end() ? std::string() : it->second;
}

std::string ConfigReader::get_string(const std::string& key, const std::string& fallback) {
  const bool present = has(key);
  const std::string v = take(key);
  return present ? v : fallback;
}

std::string ConfigReader::require_string(const std::string& key) {
  if (!has(key)) throw ConfigError(origin_ + ": missing required key '" + key + "'");
  return take(key);
}

double ConfigReader::get_double(const std::string& key, double fallback) {
  if (!has(key)) {
    take(key);
    return fallback;
  }
  const std::string v = take(key);
  std::size_t used = 0;
  double parsed = 0.0;
  try {
    parsed = std::stod(v, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != v.size()) {
    throw ConfigError(origin_ + ": key '" + key + "': not a number: '" + v + "'");
  }
  return parsed;
}

std::size_t ConfigReader::get_size(const std::string& key, std::size_t fallback) {
  if (!has(key)) {
    take(key);
    return fallback;
  }
  const std::string v = take(key);
  std::size_t used = 0;
  unsigned long long parsed = 0;
  try {
    parsed = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != v.size() || v.empty() || v[0] == '-') {
    throw ConfigError(origin_ + ": key '" + key + "': not a non-negative integer: '" + v + "'");
  }
  return static_cast<std::size_t>(parsed);
}

std::uint64_t ConfigReader::get_u64(const std::string& key, std::uint64_t fallback) {
  return get_size(key, static_cast<std::size_t>(fallback));
}

std::vector<int> ConfigReader::get_int_list(const std::string& key, std::vector<int> fallback) {
  if (!has(key)) {
    take(key);
    return fallback;
  }
  const std::string v = take(key);
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = strip(item);
    std::size_t used = 0;
    int parsed = 0;
    try {
      parsed = std::stoi(t, &used);
    } catch (const std::exception&) {
      used = std::string::npos;
    }
    if (used != t.size() || t.empty()) {
      throw ConfigError(origin_ + ": key '" + key + "': bad integer list element '" + t + "'");
    }
    out.push_back(parsed);
  }
  if (out.empty()) {
    throw ConfigError(origin_ + ": key '" + key + "': empty list");
  }
  return out;
}

void ConfigReader::finish() const {
  std::string unknown;
  for (const auto& [key, value] : values_) {
    if (!consumed_.count(key)) {
      if (!unknown.empty()) unknown += ", ";
      unknown += "'" + key + "'";
    }
  }
  if (!unknown.empty()) {
    throw ConfigError(origin_ + ": unknown config keys: " + unknown);
  }
}

}  // namespace mamp
