#pragma once

// Flat key-value configuration files.
//
//   # comment
//   seed = 7
//   [event]
//   name = Brexit
//   date = 2016-06-23
//
// Keys before the first `[section]` header belong to the root block. Sections
// may repeat; each occurrence is its own block.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "biorhythm/date.hpp"

namespace biorhythm {

struct KvEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

struct KvBlock {
  std::string section;  // empty for the root block
  std::size_t line = 0;
  std::vector<KvEntry> entries;
};

struct KvDocument {
  KvBlock root;
  std::vector<KvBlock> sections;
};

KvDocument parse_kv(std::istream& in);
KvDocument parse_kv_file(const std::filesystem::path& path);

/// Typed access to one block. Every key must be consumed before finish(),
/// otherwise it is reported as unknown.
class KvReader {
 public:
  explicit KvReader(const KvBlock& block);

  std::optional<std::string> get_string(const std::string& key);
  std::optional<double> get_double(const std::string& key);
  std::optional<std::int64_t> get_int(const std::string& key);
  std::optional<bool> get_bool(const std::string& key);
  std::optional<Date> get_date(const std::string& key);

  std::string require_string(const std::string& key);
  Date require_date(const std::string& key);

  /// Throws ConfigError naming the first key nobody asked for.
  void finish() const;

 private:
  const KvEntry* find(const std::string& key);
  std::string where(const KvEntry& e) const;

  const KvBlock& block_;
  std::set<std::string> consumed_;
};

}  // namespace biorhythm
