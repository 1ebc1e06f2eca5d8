#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace pdlvo {

// Minimal INI/TOML-like text format shared by the rig calibration file and
// the pipeline configuration file:
//
//   # comment
//   [section name]
//   key = value tokens
//
// Keys before the first section header land in a section named "".
struct KvSection {
  std::string name;
  std::map<std::string, std::string> entries;
  int line = 0;

  bool has(const std::string& key) const { return entries.contains(key); }
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;
};

struct KvFile {
  std::vector<KvSection> sections;

  const KvSection* find(const std::string& name) const;
};

KvFile parse_kv(const std::string& text, const std::string& origin = "<string>");
KvFile load_kv(const std::filesystem::path& path);

}  // namespace pdlvo
