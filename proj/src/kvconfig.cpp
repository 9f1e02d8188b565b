#include "biorhythm/kvconfig.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "biorhythm/errors.hpp"

namespace biorhythm {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

KvDocument parse_kv(std::istream& in) {
  KvDocument doc;
  KvBlock* current = &doc.root;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
      const std::string name = trim(std::string_view(line).substr(1, line.size() - 2));
      if (name.empty()) throw ParseError(line_no, "empty section name");
      doc.sections.push_back(KvBlock{name, line_no, {}});
      current = &doc.sections.back();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "empty key");
    const bool dup = std::any_of(current->entries.begin(), current->entries.end(),
                                 [&](const KvEntry& e) { return e.key == key; });
    if (dup) throw ParseError(line_no, "duplicate key '" + key + "'");
    current->entries.push_back(KvEntry{std::move(key), std::move(value), line_no});
  }
  return doc;
}

KvDocument parse_kv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_kv(in);
}

KvReader::KvReader(const KvBlock& block) : block_(block) {}

const KvEntry* KvReader::find(const std::string& key) {
  for (const auto& e : block_.entries) {
    if (e.key == key) {
      consumed_.insert(key);
      return &e;
    }
  }
  return nullptr;
}

std::string KvReader::where(const KvEntry& e) const {
  std::string s = "line " + std::to_string(e.line);
  if (!block_.section.empty()) s += " [" + block_.section + "]";
  return s;
}

std::optional<std::string> KvReader::get_string(const std::string& key) {
  const KvEntry* e = find(key);
  if (!e) return std::nullopt;
  return e->value;
}

std::optional<double> KvReader::get_double(const std::string& key) {
  const KvEntry* e = find(key);
  if (!e) return std::nullopt;
  double v = 0.0;
  const auto& s = e->value;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(where(*e) + ": key '" + key + "' expects a number, got '" + s + "'");
  return v;
}

std::optional<std::int64_t> KvReader::get_int(const std::string& key) {
  const KvEntry* e = find(key);
  if (!e) return std::nullopt;
  std::int64_t v = 0;
  const auto& s = e->value;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(where(*e) + ": key '" + key + "' expects an integer, got '" + s + "'");
  return v;
}

std::optional<bool> KvReader::get_bool(const std::string& key) {
  const KvEntry* e = find(key);
  if (!e) return std::nullopt;
  const auto& s = e->value;
  if (s == "1" || s == "true" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "no") return false;
  throw ConfigError(where(*e) + ": key '" + key + "' expects true/false, got '" + s + "'");
}

std::optional<Date> KvReader::get_date(const std::string& key) {
  const KvEntry* e = find(key);
  if (!e) return std::nullopt;
  try {
    return Date::parse(e->value);
  } catch (const DomainError& err) {
    throw ConfigError(where(*e) + ": key '" + key + "': " + err.what());
  }
}

std::string KvReader::require_string(const std::string& key) {
  auto v = get_string(key);
  if (!v) throw ConfigError("missing required key '" + key + "' in block at line " +
                            std::to_string(block_.line));
  return *v;
}

Date KvReader::require_date(const std::string& key) {
  auto v = get_date(key);
  if (!v) throw ConfigError("missing required key '" + key + "' in block at line " +
                            std::to_string(block_.line));
  return *v;
}

void KvReader::finish() const {
  for (const auto& e : block_.entries)
    if (!consumed_.count(e.key)) throw ConfigError(where(e) + ": unknown key '" + e.key + "'");
}

}  // namespace biorhythm
