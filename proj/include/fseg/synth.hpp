#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fseg/config.hpp"
#include "fseg/dataset.hpp"
#include "fseg/error.hpp"
#include "fseg/imaging.hpp"
#include "fseg/random.hpp"

namespace fseg {

struct Occluder {
  BoxI box;
  float level = 0.5f;
};

/// Where the cartoon face goes; `face` may extend past the frame.
struct FacePlacement {
  BoxI face;
  float skin = 0.75f;
  std::optional<Occluder> occluder;
};

struct SynthFrame {
  GrayImageF image;
  std::optional<BoxI> annotation;  // visible face box clipped to the frame
  std::optional<FacePlacement> placement;
};

namespace detail {

inline void fill_ellipse(GrayImageF& img, double cx, double cy, double rx, double ry, float v) {
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - rx))), x1 = std::min(img.width - 1, static_cast<int>(std::ceil(cx + rx)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - ry))), y1 = std::min(img.height - 1, static_cast<int>(std::ceil(cy + ry)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
      if (dx * dx + dy * dy <= 1.0) img.at(x, y) = v;
    }
}

inline void fill_rect(GrayImageF& img, double x0, double y0, double x1, double y1, float v) {
  const int ix0 = std::max(0, static_cast<int>(std::lround(x0))), ix1 = std::min(img.width, static_cast<int>(std::lround(x1)));
  const int iy0 = std::max(0, static_cast<int>(std::lround(y0))), iy1 = std::min(img.height, static_cast<int>(std::lround(y1)));
  for (int y = iy0; y < iy1; ++y)
    for (int x = ix0; x < ix1; ++x) img.at(x, y) = v;
}

// Downward-pointing wedge: apex at (ax, ay), base from (ax - hw, by) to (ax + hw, by).
inline void fill_wedge(GrayImageF& img, double ax, double ay, double hw, double by, float v) {
  const int y0 = std::max(0, static_cast<int>(std::floor(ay))), y1 = std::min(img.height - 1, static_cast<int>(std::ceil(by)));
  for (int y = y0; y <= y1; ++y) {
    const double t = (y + 0.5 - ay) / (by - ay);
    if (t < 0 || t > 1) continue;
    const double half = t * hw;
    const int xa = std::max(0, static_cast<int>(std::lround(ax - half)));
    const int xb = std::min(img.width, static_cast<int>(std::lround(ax + half)));
    for (int x = xa; x < xb; ++x) img.at(x, y) = v;
  }
}

inline void background(GrayImageF& img, const SynthSpec& spec, Rng& rng) {
  const double base = rng.uniform(0.25, 0.55);
  const double fx = rng.uniform(0.01, 0.06), fy = rng.uniform(0.01, 0.06), ph = rng.uniform(0.0, 6.28);
  const double amp = rng.uniform(0.02, 0.08);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) img.at(x, y) = static_cast<float>(base + amp * std::sin(fx * x + fy * y + ph));
  // clutter: a few random rectangles and blobs
  const int shapes = rng.range(2, 5);
  for (int i = 0; i < shapes; ++i) {
    const double w = rng.uniform(0.05, 0.3) * img.width, h = rng.uniform(0.05, 0.3) * img.height;
    const double x = rng.uniform(-0.1, 1.0) * img.width, y = rng.uniform(-0.1, 1.0) * img.height;
    const float v = static_cast<float>(rng.uniform(0.1, 0.9));
    if (rng.bernoulli(0.5)) fill_rect(img, x, y, x + w, y + h, v);
    else fill_ellipse(img, x + w / 2, y + h / 2, w / 2, h / 2, v);
  }
  (void)spec;
}

inline void add_noise(GrayImageF& img, double sigma, Rng& rng) {
  if (sigma <= 0) return;
  for (auto& v : img.data) v = static_cast<float>(std::clamp(v + sigma * rng.normal(), 0.0, 1.0));
}

}  // namespace detail

/// Cartoon face inside `p.face`: skin ellipse, brows, eyes, nose wedge, mouth.
inline void draw_face(GrayImageF& img, const FacePlacement& p, Rng& rng) {
  const double x = p.face.x, y = p.face.y, w = p.face.w, h = p.face.h;
  auto U = [&](double u) { return x + u * w; };
  auto V = [&](double v) { return y + v * h; };
  const float skin = p.skin;
  const float dark = std::max(0.0f, skin - 0.5f - static_cast<float>(rng.uniform(0.0, 0.1)));
  detail::fill_ellipse(img, U(0.5), V(0.5), 0.5 * w, 0.5 * h, skin);
  detail::fill_rect(img, U(0.2), V(0.22), U(0.42), V(0.26), dark + 0.1f);
  detail::fill_rect(img, U(0.58), V(0.22), U(0.8), V(0.26), dark + 0.1f);
  detail::fill_ellipse(img, U(0.31), V(0.34), 0.09 * w, 0.05 * h, dark);
  detail::fill_ellipse(img, U(0.69), V(0.34), 0.09 * w, 0.05 * h, dark);
  detail::fill_wedge(img, U(0.5), V(0.42), 0.09 * w, V(0.64), skin - 0.22f);
  detail::fill_rect(img, U(0.36), V(0.76), U(0.64), V(0.82), dark + 0.05f);
  if (p.occluder) {
    const auto& o = p.occluder->box;
    detail::fill_rect(img, o.x, o.y, o.right(), o.bottom(), p.occluder->level);
  }
}

/// Skin ellipse carrying some facial parts in a wrong arrangement: only the
/// eyes, eyes and mouth swapped vertically, or a single eye with a nose.
inline void draw_decoy(GrayImageF& img, const BoxI& box, Rng& rng) {
  const double x = box.x, y = box.y, w = box.w, h = box.h;
  auto U = [&](double u) { return x + u * w; };
  auto V = [&](double v) { return y + v * h; };
  const float skin = static_cast<float>(rng.uniform(0.68, 0.88));
  const float dark = std::max(0.0f, skin - 0.55f);
  detail::fill_ellipse(img, U(0.5), V(0.5), 0.5 * w, 0.5 * h, skin);
  switch (rng.below(3)) {
    case 0:
      detail::fill_ellipse(img, U(0.31), V(0.34), 0.09 * w, 0.05 * h, dark);
      detail::fill_ellipse(img, U(0.69), V(0.34), 0.09 * w, 0.05 * h, dark);
      break;
    case 1:
      detail::fill_rect(img, U(0.36), V(0.2), U(0.64), V(0.26), dark);
      detail::fill_ellipse(img, U(0.31), V(0.7), 0.09 * w, 0.05 * h, dark);
      detail::fill_ellipse(img, U(0.69), V(0.7), 0.09 * w, 0.05 * h, dark);
      break;
    default:
      detail::fill_ellipse(img, U(0.31), V(0.34), 0.09 * w, 0.05 * h, dark);
      detail::fill_wedge(img, U(0.5), V(0.42), 0.09 * w, V(0.64), skin - 0.22f);
      break;
  }
}

/// Draws a random placement for one face frame.
inline FacePlacement random_placement(const SynthSpec& spec, Rng& rng) {
  FacePlacement p;
  const int side = std::max(8, static_cast<int>(std::lround(rng.uniform(spec.face_min, spec.face_max) * spec.height)));
  int fx = rng.range(0, std::max(0, spec.width - side));
  int fy = rng.range(0, std::max(0, spec.height - side));
  if (rng.bernoulli(spec.offframe_prob)) {
    const int off = static_cast<int>(std::lround(rng.uniform(0.0, spec.shift_max) * side));
    switch (rng.below(4)) {
      case 0: fx = -off; break;
      case 1: fx = spec.width - side + off; break;
      case 2: fy = -off; break;
      default: fy = spec.height - side + off; break;
    }
  }
  p.face = BoxI{fx, fy, side, side};
  p.skin = static_cast<float>(rng.uniform(0.68, 0.88));
  if (rng.bernoulli(spec.occlusion_prob)) {
    const int t = std::max(2, static_cast<int>(std::lround(rng.uniform(spec.occluder_min, spec.occluder_max) * side)));
    Occluder o;
    if (rng.bernoulli(0.5)) {  // vertical bar
      const int ox = fx + rng.range(0, side - t);
      o.box = BoxI{ox, fy - side / 8, t, side + side / 4};
    } else {
      const int oy = fy + rng.range(0, side - t);
      o.box = BoxI{fx - side / 8, oy, side + side / 4, t};
    }
    o.level = static_cast<float>(rng.uniform(0.05, 0.95));
    p.occluder = o;
  }
  return p;
}

/// Renders one frame. With a placement the face is drawn and the annotation
/// is the face box clipped to the frame; without one the frame is background.
inline SynthFrame render_frame(const SynthSpec& spec, const std::optional<FacePlacement>& placement, Rng& rng) {
  SynthFrame f;
  f.image = GrayImageF(spec.width, spec.height);
  detail::background(f.image, spec, rng);
  if (rng.bernoulli(spec.decoy_prob)) {
    const int side = std::max(8, static_cast<int>(std::lround(rng.uniform(spec.face_min, spec.face_max) * spec.height)));
    for (int attempt = 0; attempt < 8; ++attempt) {
      const BoxI d{rng.range(0, std::max(0, spec.width - side)), rng.range(0, std::max(0, spec.height - side)), side, side};
      if (placement && !intersect(d, placement->face).empty()) continue;
      draw_decoy(f.image, d, rng);
      break;
    }
  }
  if (placement) {
    draw_face(f.image, *placement, rng);
    const BoxI vis = intersect(placement->face, BoxI{0, 0, spec.width, spec.height});
    if (!vis.empty()) f.annotation = vis;
    f.placement = placement;
  }
  detail::add_noise(f.image, spec.noise, rng);
  return f;
}

/// Writes spec.count frames to out_dir/images and out_dir/annotations.csv.
/// Exactly round(count * no_face_fraction) frames carry no face; which ones is
/// decided by the seed.
inline Dataset synth_generate(const SynthSpec& spec, const std::string& out_dir) {
  if (spec.count < 1) fail(ErrorKind::ConfigError, "synth count must be >= 1");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "images", ec);
  if (ec) fail(ErrorKind::IoError, "cannot create " + out_dir + ": " + ec.message());
  Rng rng(spec.seed);
  const int n_empty = static_cast<int>(std::lround(spec.count * spec.no_face_fraction));
  std::vector<int> has_face(static_cast<std::size_t>(spec.count), 1);
  std::fill(has_face.begin(), has_face.begin() + n_empty, 0);
  rng.shuffle(has_face);

  Dataset ds;
  ds.root = out_dir;
  for (int i = 0; i < spec.count; ++i) {
    Rng frame_rng(hash_seed(spec.seed, "frame" + std::to_string(i)));
    std::optional<FacePlacement> placement;
    if (has_face[static_cast<std::size_t>(i)]) placement = random_placement(spec, frame_rng);
    const auto frame = render_frame(spec, placement, frame_rng);
    char name[32];
    std::snprintf(name, sizeof(name), "images/img_%05d.pgm", i);
    save_image(to_u8(frame.image), (fs::path(out_dir) / name).string());
    ds.items.push_back(Annotation{name, frame.annotation});
  }
  write_annotations((fs::path(out_dir) / kAnnotationFile).string(), ds.items);
  return ds;
}

}  // namespace fseg
