// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace difom {

// Flat configuration text:
//   # comment
//   section.key = value        (value may be double-quoted; lists are comma separated)
// Keys use [a-z0-9_.]; each key may appear once.

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ConfigValue {
  std::string text;
  std::size_t line = 0;  // 0 when the value did not come from a file
};

using ConfigMap = std::map<std::string, ConfigValue>;

ConfigMap parse_config(std::string_view text, const std::string& source = "<config>");
ConfigMap read_config(const std::filesystem::path& path);

/// Typed conversions; throw ConfigError naming the key on malformed input.
bool parse_bool(const std::string& key, const std::string& text);
std::size_t parse_size(const std::string& key, const std::string& text);
std::uint64_t parse_u64(const std::string& key, const std::string& text);
double parse_double(const std::string& key, const std::string& text);
std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& text);
std::vector<double> parse_double_list(const std::string& key, const std::string& text);

}  // namespace difom
