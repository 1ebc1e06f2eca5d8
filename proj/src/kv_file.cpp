#include "pdlvo/kv_file.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "pdlvo/error.h"

namespace pdlvo {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void fail(const KvSection& sec, const std::string& key, const std::string& why) {
  throw Error(ErrorCode::ParseError,
              "section [" + sec.name + "] key '" + key + "': " + why);
}

}  // namespace

const std::string& KvSection::get(const std::string& key) const {
  auto it = entries.find(key);
  if (it == entries.end()) fail(*this, key, "missing");
  return it->second;
}

double KvSection::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) fail(*this, key, "trailing characters in '" + v + "'");
    return d;
  } catch (const std::logic_error&) {
    fail(*this, key, "not a number: '" + v + "'");
  }
}

int KvSection::get_int(const std::string& key) const {
  const std::string& v = get(key);
  try {
    size_t used = 0;
    const int i = std::stoi(v, &used);
    if (used != v.size()) fail(*this, key, "trailing characters in '" + v + "'");
    return i;
  } catch (const std::logic_error&) {
    fail(*this, key, "not an integer: '" + v + "'");
  }
}

bool KvSection::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(*this, key, "not a boolean: '" + v + "'");
}

std::vector<double> KvSection::get_doubles(const std::string& key) const {
  // Commas and whitespace both separate values.
  std::string text = get(key);
  std::replace(text.begin(), text.end(), ',', ' ');
  std::istringstream in(text);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    try {
      size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) fail(*this, key, "bad number '" + tok + "'");
    } catch (const std::logic_error&) {
      fail(*this, key, "bad number '" + tok + "'");
    }
  }
  return out;
}

const KvSection* KvFile::find(const std::string& name) const {
  for (const auto& s : sections) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

KvFile parse_kv(const std::string& text, const std::string& origin) {
  KvFile file;
  file.sections.push_back(KvSection{"", {}, 0});
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorCode::ParseError, where + ": unterminated section header");
      file.sections.push_back(KvSection{trim(line.substr(1, line.size() - 2)), {}, lineno});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ParseError, where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) throw Error(ErrorCode::ParseError, where + ": empty key");
    auto& sec = file.sections.back();
    if (!sec.entries.emplace(key, value).second) {
      throw Error(ErrorCode::ParseError, where + ": duplicate key '" + key + "'");
    }
  }
  if (file.sections.front().entries.empty()) file.sections.erase(file.sections.begin());
  return file;
}

KvFile load_kv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_kv(ss.str(), path.string());
}

}  // namespace pdlvo
