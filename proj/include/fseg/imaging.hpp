#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fseg/error.hpp"

namespace fseg {

// Integer pixel box; (x, y) is the top-left corner and may lie outside the image.
struct BoxI {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  long long area() const { return static_cast<long long>(std::max(w, 0)) * std::max(h, 0); }
  bool empty() const { return w <= 0 || h <= 0; }
  int right() const { return x + w; }
  int bottom() const { return y + h; }
  double cx() const { return x + 0.5 * w; }
  double cy() const { return y + 0.5 * h; }

  friend bool operator==(const BoxI&, const BoxI&) = default;
  friend auto operator<=>(const BoxI&, const BoxI&) = default;
};

inline BoxI intersect(const BoxI& a, const BoxI& b) {
  const int x0 = std::max(a.x, b.x);
  const int y0 = std::max(a.y, b.y);
  const int x1 = std::min(a.right(), b.right());
  const int y1 = std::min(a.bottom(), b.bottom());
  if (x1 <= x0 || y1 <= y0) return BoxI{x0, y0, 0, 0};
  return BoxI{x0, y0, x1 - x0, y1 - y0};
}

// Smallest box containing both.
inline BoxI enclose(const BoxI& a, const BoxI& b) {
  const int x0 = std::min(a.x, b.x);
  const int y0 = std::min(a.y, b.y);
  const int x1 = std::max(a.right(), b.right());
  const int y1 = std::max(a.bottom(), b.bottom());
  return BoxI{x0, y0, x1 - x0, y1 - y0};
}

/// Intersection over union with exact integer area arithmetic; 0 when the
/// union is empty.
inline double iou(const BoxI& a, const BoxI& b) {
  const long long inter = intersect(a, b).area();
  const long long uni = a.area() + b.area() - inter;
  if (uni <= 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

/// 8-bit image, row-major with interleaved channels.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int w, int h, int c, std::uint8_t fill = 0) : width(w), height(h), channels(c) {
    if (w < 1 || h < 1) fail(ErrorKind::ZeroDimension, "image dims must be >= 1");
    if (c != 1 && c != 3) fail(ErrorKind::UnsupportedChannels, "channels must be 1 or 3");
    data.assign(static_cast<std::size_t>(w) * h * c, fill);
  }

  std::uint8_t& at(int x, int y, int c = 0) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  std::uint8_t at(int x, int y, int c = 0) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
};

/// Single-channel real image with samples in [0, 1].
struct GrayImageF {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  GrayImageF() = default;
  GrayImageF(int w, int h, float fill = 0.0f) : width(w), height(h) {
    if (w < 1 || h < 1) fail(ErrorKind::ZeroDimension, "image dims must be >= 1");
    data.assign(static_cast<std::size_t>(w) * h, fill);
  }

  float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

/// Running 2-D prefix sums over a (width+1) x (height+1) grid; row 0 and
/// column 0 are zero.
class IntegralImage {
 public:
  IntegralImage() = default;

  explicit IntegralImage(const GrayImageF& img)
      : width_(img.width), height_(img.height),
        sums_(static_cast<std::size_t>(img.width + 1) * (img.height + 1), 0.0) {
    const int stride = width_ + 1;
    for (int y = 0; y < height_; ++y) {
      double row = 0.0;
      for (int x = 0; x < width_; ++x) {
        row += img.at(x, y);
        sums_[static_cast<std::size_t>(y + 1) * stride + x + 1] =
            sums_[static_cast<std::size_t>(y) * stride + x + 1] + row;
      }
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }

  // Entry (i, j) of the accumulator grid, 0 <= i <= width, 0 <= j <= height.
  double at(int i, int j) const { return sums_[static_cast<std::size_t>(j) * (width_ + 1) + i]; }

  // Unchecked four-corner lookup for hot loops; caller guarantees bounds.
  double sum_unchecked(int x, int y, int w, int h) const {
    const int stride = width_ + 1;
    const double* base = sums_.data();
    return base[static_cast<std::size_t>(y + h) * stride + x + w] - base[static_cast<std::size_t>(y) * stride + x + w] -
           base[static_cast<std::size_t>(y + h) * stride + x] + base[static_cast<std::size_t>(y) * stride + x];
  }

  double box_sum(const BoxI& b) const {
    if (b.w < 0 || b.h < 0) fail(ErrorKind::OutOfBounds, "negative box extent");
    if (b.w == 0 || b.h == 0) return 0.0;
    if (b.x < 0 || b.y < 0 || b.right() > width_ || b.bottom() > height_)
      fail(ErrorKind::OutOfBounds, "box outside integral image");
    return sum_unchecked(b.x, b.y, b.w, b.h);
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> sums_;
};

inline IntegralImage integral(const GrayImageF& img) { return IntegralImage(img); }

inline double box_sum(const IntegralImage& ii, const BoxI& b) { return ii.box_sum(b); }

namespace detail {

inline void skip_space_and_comments(std::istream& in) {
  while (true) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      in.get();
    } else {
      return;
    }
  }
}

inline int read_header_int(std::istream& in, const std::string& path) {
  skip_space_and_comments(in);
  int v = -1;
  if (!(in >> v) || v < 0) fail(ErrorKind::CorruptHeader, path + ": malformed header field");
  return v;
}

}  // namespace detail

/// Reads a binary PGM (P5) or PPM (P6) file with maxval <= 255.
inline Image load_image(const std::string& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::NotFound, path);
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::NotFound, path);
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P') fail(ErrorKind::UnsupportedFormat, path + ": not a portable pixmap");
  int channels = 0;
  if (magic[1] == '5') channels = 1;
  else if (magic[1] == '6') channels = 3;
  else fail(ErrorKind::UnsupportedFormat, path + ": only binary P5/P6 supported");
  const int w = detail::read_header_int(in, path);
  const int h = detail::read_header_int(in, path);
  const int maxval = detail::read_header_int(in, path);
  if (w < 1 || h < 1) fail(ErrorKind::CorruptHeader, path + ": zero image dimension");
  if (maxval < 1 || maxval > 65535) fail(ErrorKind::CorruptHeader, path + ": bad maxval");
  if (maxval > 255) fail(ErrorKind::UnsupportedFormat, path + ": 16-bit samples not supported");
  const int sep = in.get();
  if (sep != ' ' && sep != '\n' && sep != '\r' && sep != '\t') fail(ErrorKind::CorruptHeader, path + ": missing header terminator");
  Image img(w, h, channels);
  in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.data.size()))
    fail(ErrorKind::CorruptHeader, path + ": truncated pixel payload");
  return img;
}

inline void save_image(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  out << (img.channels == 1 ? "P5" : "P6") << '\n' << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
  if (!out) fail(ErrorKind::IoError, "write failed: " + path);
}

/// Rec.601 luma for 3-channel input; samples scaled to [0, 1].
inline GrayImageF to_gray(const Image& img) {
  if (img.channels != 1 && img.channels != 3) fail(ErrorKind::UnsupportedChannels, "to_gray expects 1 or 3 channels");
  GrayImageF out(img.width, img.height);
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  if (img.channels == 1) {
    for (std::size_t i = 0; i < n; ++i) out.data[i] = static_cast<float>(img.data[i] / 255.0);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double r = img.data[3 * i], g = img.data[3 * i + 1], b = img.data[3 * i + 2];
      out.data[i] = static_cast<float>((0.299 * r + 0.587 * g + 0.114 * b) / 255.0);
    }
  }
  return out;
}

inline Image to_u8(const GrayImageF& img) {
  Image out(img.width, img.height, 1);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const double v = std::clamp(static_cast<double>(img.data[i]), 0.0, 1.0);
    out.data[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return out;
}

/// Bilinear resampling with half-pixel-centred sample positions.
inline GrayImageF resize_bilinear(const GrayImageF& img, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) fail(ErrorKind::ZeroDimension, "resize target must be >= 1x1");
  if (out_w == img.width && out_h == img.height) return img;
  GrayImageF out(out_w, out_h);
  const double sx = static_cast<double>(img.width) / out_w;
  const double sy = static_cast<double>(img.height) / out_h;

  struct Tap {
    int i0, i1;
    float t;
  };
  auto taps = [](int n_out, int n_in, double scale) {
    std::vector<Tap> t(static_cast<std::size_t>(n_out));
    for (int o = 0; o < n_out; ++o) {
      double src = (o + 0.5) * scale - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(n_in - 1));
      const int i0 = static_cast<int>(std::floor(src));
      const int i1 = std::min(i0 + 1, n_in - 1);
      t[static_cast<std::size_t>(o)] = Tap{i0, i1, static_cast<float>(src - i0)};
    }
    return t;
  };
  const auto tx = taps(out_w, img.width, sx);
  const auto ty = taps(out_h, img.height, sy);
  for (int y = 0; y < out_h; ++y) {
    const Tap& vy = ty[static_cast<std::size_t>(y)];
    for (int x = 0; x < out_w; ++x) {
      const Tap& vx = tx[static_cast<std::size_t>(x)];
      const float a = img.at(vx.i0, vy.i0), b = img.at(vx.i1, vy.i0);
      const float c = img.at(vx.i0, vy.i1), d = img.at(vx.i1, vy.i1);
      const float top = a + (b - a) * vx.t;
      const float bot = c + (d - c) * vx.t;
      out.at(x, y) = top + (bot - top) * vy.t;
    }
  }
  return out;
}

/// Extracts b; parts of b outside the image are zero-filled so the result is
/// exactly b.w x b.h.
inline GrayImageF crop(const GrayImageF& img, const BoxI& b) {
  if (b.w <= 0 || b.h <= 0) fail(ErrorKind::ZeroDimension, "crop box has zero extent");
  GrayImageF out(b.w, b.h, 0.0f);
  const BoxI in = intersect(b, BoxI{0, 0, img.width, img.height});
  for (int y = in.y; y < in.bottom(); ++y)
    for (int x = in.x; x < in.right(); ++x) out.at(x - b.x, y - b.y) = img.at(x, y);
  return out;
}

inline Image crop(const Image& img, const BoxI& b) {
  if (b.w <= 0 || b.h <= 0) fail(ErrorKind::ZeroDimension, "crop box has zero extent");
  Image out(b.w, b.h, img.channels, 0);
  const BoxI in = intersect(b, BoxI{0, 0, img.width, img.height});
  for (int y = in.y; y < in.bottom(); ++y)
    for (int x = in.x; x < in.right(); ++x)
      for (int c = 0; c < img.channels; ++c) out.at(x - b.x, y - b.y, c) = img.at(x, y, c);
  return out;
}

}  // namespace fseg
