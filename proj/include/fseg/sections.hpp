#pragma once

#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fseg/error.hpp"
#include "fseg/text.hpp"

namespace fseg {

// Versioned structured-text container used by the model files:
//   MAGIC vN
//   [section attr=value ...]
//   key=value
struct Section {
  std::string name;
  std::map<std::string, std::string> attrs;
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<int> lines;
  std::string source;

  std::string where(std::size_t i) const { return source + ":" + std::to_string(lines[i]); }

  const std::string& get(const std::string& key) const {
    for (const auto& [k, v] : entries)
      if (k == key) return v;
    fail(ErrorKind::ParseError, source + ": section [" + name + "] lacks key '" + key + "'");
  }

  const std::string& attr(const std::string& key) const {
    auto it = attrs.find(key);
    if (it == attrs.end()) fail(ErrorKind::ParseError, source + ": section [" + name + "] lacks attribute '" + key + "'");
    return it->second;
  }
};

inline std::vector<Section> read_sections(const std::string& path, const std::string& magic) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::MissingInput, path);
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != magic)
    fail(ErrorKind::ModelVersionMismatch, path + ": expected '" + magic + "' header");
  std::vector<Section> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const std::string where = path + ":" + std::to_string(lineno);
    if (t.front() == '[') {
      if (t.back() != ']') fail(ErrorKind::ParseError, where + ": unterminated section header");
      Section s;
      s.source = path;
      const auto body = t.substr(1, t.size() - 2);
      bool first = true;
      for (auto tok : text::split(body, ' ')) {
        if (tok.empty()) continue;
        if (first) {
          s.name = std::string(tok);
          first = false;
          continue;
        }
        const auto eq = tok.find('=');
        if (eq == std::string_view::npos) fail(ErrorKind::ParseError, where + ": attribute needs key=value");
        s.attrs[std::string(tok.substr(0, eq))] = std::string(tok.substr(eq + 1));
      }
      out.push_back(std::move(s));
      continue;
    }
    if (out.empty()) fail(ErrorKind::ParseError, where + ": entry before first section");
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) fail(ErrorKind::ParseError, where + ": expected key=value");
    out.back().entries.emplace_back(std::string(text::trim(t.substr(0, eq))), std::string(text::trim(t.substr(eq + 1))));
    out.back().lines.push_back(lineno);
  }
  return out;
}

}  // namespace fseg
