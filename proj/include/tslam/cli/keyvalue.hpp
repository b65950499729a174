#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tslam::cli {

/// One "key = value" line of a flat text config.
struct KeyValue {
  std::string key;
  std::string value;
  int line = 0;
};

/// Splits a config stream into entries. '#' starts a comment; blank lines
/// are skipped. Throws std::invalid_argument naming the line when '=' is
/// missing or a key repeats.
[[nodiscard]] std::vector<KeyValue> read_key_values(std::istream& is, const std::string& what);

/// Strict conversions; throw std::invalid_argument quoting the text.
[[nodiscard]] double parse_double(const std::string& text);
[[nodiscard]] long parse_long(const std::string& text);
[[nodiscard]] std::uint64_t parse_u64(const std::string& text);
[[nodiscard]] bool parse_bool(const std::string& text);

/// Shortest round-tripping decimal form.
[[nodiscard]] std::string format_double(double v);

}  // namespace tslam::cli
