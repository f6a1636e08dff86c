#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "fseg/error.hpp"
#include "fseg/imaging.hpp"

namespace fseg {

struct HogParams {
  int cell = 8;          // pixels per cell side
  int block = 2;         // cells per block side
  int bins = 9;          // unsigned orientation bins over [0, 180)
  int block_stride = 1;  // in cells
  double clip = 0.2;     // L2-Hys clipping value

  friend bool operator==(const HogParams&, const HogParams&) = default;
};

inline void validate(const HogParams& p) {
  if (p.cell < 2) fail(ErrorKind::ConfigError, "hog.cell must be >= 2");
  if (p.bins < 2) fail(ErrorKind::ConfigError, "hog.bins must be >= 2");
  if (p.block < 1) fail(ErrorKind::ConfigError, "hog.block must be >= 1");
  if (p.block_stride < 1) fail(ErrorKind::ConfigError, "hog.block_stride must be >= 1");
  if (!(p.clip > 0.0 && p.clip <= 1.0)) fail(ErrorKind::ConfigError, "hog.clip must be in (0, 1]");
}

inline std::size_t hog_length(int width, int height, const HogParams& p) {
  const int cx = width / p.cell, cy = height / p.cell;
  if (cx < p.block || cy < p.block) return 0;
  const int bx = (cx - p.block) / p.block_stride + 1;
  const int by = (cy - p.block) / p.block_stride + 1;
  return static_cast<std::size_t>(bx) * by * p.block * p.block * p.bins;
}

/// Dalal-Triggs style descriptor: central-difference gradients, unsigned
/// orientation votes split linearly between the two nearest bin centres,
/// L2-Hys block normalisation, blocks concatenated row-major.
inline std::vector<double> hog(const GrayImageF& patch, const HogParams& p) {
  const int cells_x = patch.width / p.cell, cells_y = patch.height / p.cell;
  if (cells_x < std::max(2, p.block) || cells_y < std::max(2, p.block))
    fail(ErrorKind::PatchTooSmall, "patch " + std::to_string(patch.width) + "x" + std::to_string(patch.height) +
                                       " smaller than two cells per side");

  std::vector<double> hist(static_cast<std::size_t>(cells_x) * cells_y * p.bins, 0.0);
  const double bin_width = M_PI / p.bins;
  const int used_w = cells_x * p.cell, used_h = cells_y * p.cell;
  for (int y = 0; y < used_h; ++y) {
    const int ym = std::max(y - 1, 0), yp = std::min(y + 1, patch.height - 1);
    for (int x = 0; x < used_w; ++x) {
      const int xm = std::max(x - 1, 0), xp = std::min(x + 1, patch.width - 1);
      const double gx = static_cast<double>(patch.at(xp, y)) - patch.at(xm, y);
      const double gy = static_cast<double>(patch.at(x, yp)) - patch.at(x, ym);
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0.0) continue;
      double ang = std::atan2(gy, gx);
      if (ang < 0) ang += M_PI;
      if (ang >= M_PI) ang -= M_PI;
      const double pos = ang / bin_width - 0.5;
      const int b0 = static_cast<int>(std::floor(pos));
      const double t = pos - b0;
      const int lo = (b0 + p.bins) % p.bins, hi = (b0 + 1) % p.bins;
      double* h = &hist[(static_cast<std::size_t>(y / p.cell) * cells_x + x / p.cell) * p.bins];
      h[lo] += mag * (1.0 - t);
      h[hi] += mag * t;
    }
  }

  constexpr double eps = 1e-6;
  std::vector<double> out;
  out.reserve(hog_length(patch.width, patch.height, p));
  std::vector<double> block(static_cast<std::size_t>(p.block) * p.block * p.bins);
  for (int by = 0; by + p.block <= cells_y; by += p.block_stride) {
    for (int bx = 0; bx + p.block <= cells_x; bx += p.block_stride) {
      std::size_t k = 0;
      for (int cy = by; cy < by + p.block; ++cy)
        for (int cx = bx; cx < bx + p.block; ++cx)
          for (int b = 0; b < p.bins; ++b) block[k++] = hist[(static_cast<std::size_t>(cy) * cells_x + cx) * p.bins + b];
      auto normalize = [&] {
        double ss = 0.0;
        for (double v : block) ss += v * v;
        const double inv = 1.0 / std::sqrt(ss + eps * eps);
        for (double& v : block) v *= inv;
      };
      normalize();
      for (double& v : block) v = std::min(v, p.clip);
      normalize();
      out.insert(out.end(), block.begin(), block.end());
    }
  }
  return out;
}

}  // namespace fseg
