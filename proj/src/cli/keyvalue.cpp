#include "tslam/cli/keyvalue.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <set>
#include <stdexcept>

namespace tslam::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<KeyValue> read_key_values(std::istream& is, const std::string& what) {
  std::vector<KeyValue> out;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(what + " line " + std::to_string(line_no) +
                                  ": expected key = value");
    }
    KeyValue kv{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
    if (!seen.insert(kv.key).second) {
      throw std::invalid_argument(what + " line " + std::to_string(line_no) + ": key '" + kv.key +
                                  "' given twice");
    }
    out.push_back(std::move(kv));
  }
  return out;
}

double parse_double(const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw std::invalid_argument("expected a number, got '" + v + "'");
  }
  return out;
}

long parse_long(const std::string& v) {
  long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw std::invalid_argument("expected an integer, got '" + v + "'");
  }
  return out;
}

std::uint64_t parse_u64(const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw std::invalid_argument("expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected true/false, got '" + v + "'");
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

}  // namespace tslam::cli
