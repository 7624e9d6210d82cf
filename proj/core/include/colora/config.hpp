// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace colora {

/// Flat key=value configuration. One pair per line; '#' starts a comment;
/// blank lines are ignored; later assignments win. Command-line overrides use
/// the same key=value syntax.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path);

  /// Parses a single "key=value" string (used for overrides).
  void apply(const std::string& key_value);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get(const std::string& key, const std::string& fallback) const;
  std::string require(const std::string& key) const;

  int get_int(const std::string& key, int fallback) const;
  uint64_t get_u64(const std::string& key, uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Comma-separated integer list.
  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;

  /// Sorted key/value view, for manifests.
  const std::map<std::string, std::string>& items() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace colora
