#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fseg/error.hpp"
#include "fseg/imaging.hpp"
#include "fseg/text.hpp"

namespace fseg {

/// One frame and its (at most one) face box. `path` is relative to the
/// annotation file and doubles as the image id.
struct Annotation {
  std::string path;
  std::optional<BoxI> face;
};

struct Dataset {
  std::filesystem::path root;  // directory holding annotations.csv
  std::vector<Annotation> items;

  std::string image_path(const Annotation& a) const { return (root / a.path).string(); }

  std::map<std::string, std::optional<BoxI>> truths() const {
    std::map<std::string, std::optional<BoxI>> out;
    for (const auto& a : items) out[a.path] = a.face;
    return out;
  }
};

inline constexpr const char* kAnnotationFile = "annotations.csv";

/// CSV `path,x,y,w,h`; frames without a face are written `path,`.
inline void write_annotations(const std::string& path, const std::vector<Annotation>& items) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  out << "path,x,y,w,h\n";
  for (const auto& a : items) {
    out << a.path << ',';
    if (a.face) out << a.face->x << ',' << a.face->y << ',' << a.face->w << ',' << a.face->h;
    out << '\n';
  }
}

inline std::vector<Annotation> read_annotations(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::MissingInput, "annotation file " + path);
  std::vector<Annotation> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (lineno == 1 && t.starts_with("path,")) continue;  // header
    const std::string where = path + ":" + std::to_string(lineno);
    const auto f = text::split(t, ',');
    Annotation a;
    a.path = std::string(text::trim(f[0]));
    if (a.path.empty()) fail(ErrorKind::ParseError, where + ": empty image path");
    bool all_empty = true;
    for (std::size_t i = 1; i < f.size(); ++i) all_empty &= text::trim(f[i]).empty();
    if (!all_empty) {
      if (f.size() != 5) fail(ErrorKind::ParseError, where + ": expected path,x,y,w,h");
      BoxI b{text::parse<int>(f[1], where), text::parse<int>(f[2], where), text::parse<int>(f[3], where),
             text::parse<int>(f[4], where)};
      if (b.w <= 0 || b.h <= 0) fail(ErrorKind::ParseError, where + ": face box extent must be positive");
      a.face = b;
    }
    out.push_back(std::move(a));
  }
  return out;
}

/// Loads `dir/annotations.csv` (or an annotation file path directly).
inline Dataset load_dataset(const std::string& dir_or_file) {
  std::filesystem::path p(dir_or_file);
  Dataset ds;
  if (std::filesystem::is_directory(p)) {
    ds.root = p;
    p /= kAnnotationFile;
  } else {
    ds.root = p.parent_path();
  }
  if (!std::filesystem::exists(p)) fail(ErrorKind::MissingInput, "annotation file " + p.string());
  ds.items = read_annotations(p.string());
  return ds;
}

inline GrayImageF load_gray(const Dataset& ds, const Annotation& a) { return to_gray(load_image(ds.image_path(a))); }

}  // namespace fseg
