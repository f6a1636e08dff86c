#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "fseg/error.hpp"
#include "fseg/random.hpp"

namespace fseg::nn {

/// Dense (channels, height, width) tensor, row-major. Flat vectors use (n, 1, 1).
template <typename T>
struct Tensor {
  int c = 0, h = 0, w = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(int c_, int h_, int w_, T fill = T(0))
      : c(c_), h(h_), w(w_), data(static_cast<std::size_t>(c_) * h_ * w_, fill) {}

  static Tensor flat(int n, T fill = T(0)) { return Tensor(n, 1, 1, fill); }

  std::size_t size() const { return data.size(); }
  T& operator[](std::size_t i) { return data[i]; }
  T operator[](std::size_t i) const { return data[i]; }
  T& at(int ci, int y, int x) { return data[(static_cast<std::size_t>(ci) * h + y) * w + x]; }
  const T& at(int ci, int y, int x) const { return data[(static_cast<std::size_t>(ci) * h + y) * w + x]; }
  bool same_shape(const Tensor& o) const { return c == o.c && h == o.h && w == o.w; }
  void fill(T v) { std::fill(data.begin(), data.end(), v); }
};

template <typename T>
std::string shape_str(const Tensor<T>& t) {
  return std::to_string(t.c) + "x" + std::to_string(t.h) + "x" + std::to_string(t.w);
}

/// A trainable tensor with its gradient accumulator and momentum buffer.
template <typename T>
struct Param {
  Tensor<T> value, grad, velocity;

  Param() = default;
  Param(int c, int h, int w) : value(c, h, w), grad(c, h, w), velocity(c, h, w) {}
};

/// v <- momentum·v - lr·(g + weight_decay·w);  w <- w + v
template <typename T>
void sgd_step(Param<T>& p, double lr, double momentum, double weight_decay) {
  if (!p.value.same_shape(p.grad) || !p.value.same_shape(p.velocity))
    fail(ErrorKind::ShapeMismatch, "sgd_step: parameter/gradient shapes differ");
  const T lr_ = static_cast<T>(lr), mom = static_cast<T>(momentum), wd = static_cast<T>(weight_decay);
  for (std::size_t i = 0; i < p.value.size(); ++i) {
    p.velocity[i] = mom * p.velocity[i] - lr_ * (p.grad[i] + wd * p.value[i]);
    p.value[i] += p.velocity[i];
  }
}

/// 2-D convolution, stride 1, symmetric zero padding.
template <typename T>
struct Conv2d {
  int kh = 3, kw = 3, in_c = 1, out_c = 1, pad = 1;
  Param<T> weight;  // (out_c, in_c, kh*kw)
  Param<T> bias;    // (out_c, 1, 1)

  Conv2d() = default;
  Conv2d(int kh_, int kw_, int in_c_, int out_c_, int pad_)
      : kh(kh_), kw(kw_), in_c(in_c_), out_c(out_c_), pad(pad_), weight(out_c_, in_c_, kh_ * kw_), bias(out_c_, 1, 1) {}

  std::string describe() const {
    return "conv" + std::to_string(kh) + "x" + std::to_string(kw) + "(" + std::to_string(in_c) + "->" +
           std::to_string(out_c) + ", pad " + std::to_string(pad) + ")";
  }

  int out_h(int h) const { return h + 2 * pad - kh + 1; }
  int out_w(int w) const { return w + 2 * pad - kw + 1; }

  Tensor<T> padded(const Tensor<T>& x) const {
    if (pad == 0) return x;
    Tensor<T> p(x.c, x.h + 2 * pad, x.w + 2 * pad);
    for (int c = 0; c < x.c; ++c)
      for (int y = 0; y < x.h; ++y)
        std::copy_n(&x.data[(static_cast<std::size_t>(c) * x.h + y) * x.w], x.w, &p.at(c, y + pad, pad));
    return p;
  }

  Tensor<T> forward(const Tensor<T>& x) const {
    if (x.c != in_c) fail(ErrorKind::ShapeMismatch, describe() + ": input " + shape_str(x));
    const int oh = out_h(x.h), ow = out_w(x.w);
    if (oh < 1 || ow < 1) fail(ErrorKind::ShapeMismatch, describe() + ": input " + shape_str(x) + " too small");
    const Tensor<T> xp = padded(x);
    Tensor<T> y(out_c, oh, ow);
    for (int oc = 0; oc < out_c; ++oc) {
      T* out = &y.at(oc, 0, 0);
      std::fill(out, out + static_cast<std::size_t>(oh) * ow, bias.value[static_cast<std::size_t>(oc)]);
      for (int ic = 0; ic < in_c; ++ic) {
        const T* wk = &weight.value.at(oc, ic, 0);
        for (int ky = 0; ky < kh; ++ky) {
          for (int kx = 0; kx < kw; ++kx) {
            const T wv = wk[ky * kw + kx];
            for (int yy = 0; yy < oh; ++yy) {
              const T* src = &xp.at(ic, yy + ky, kx);
              T* dst = out + static_cast<std::size_t>(yy) * ow;
              for (int xx = 0; xx < ow; ++xx) dst[xx] += wv * src[xx];
            }
          }
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& /*y*/, const Tensor<T>& gy, bool need_gin) {
    const int oh = gy.h, ow = gy.w;
    const Tensor<T> xp = padded(x);
    Tensor<T> gxp;
    if (need_gin) gxp = Tensor<T>(xp.c, xp.h, xp.w);
    for (int oc = 0; oc < out_c; ++oc) {
      const T* g = &gy.data[static_cast<std::size_t>(oc) * oh * ow];
      T gb = 0;
      for (int i = 0; i < oh * ow; ++i) gb += g[i];
      bias.grad[static_cast<std::size_t>(oc)] += gb;
      for (int ic = 0; ic < in_c; ++ic) {
        T* gw = &weight.grad.at(oc, ic, 0);
        const T* wk = &weight.value.at(oc, ic, 0);
        for (int ky = 0; ky < kh; ++ky) {
          for (int kx = 0; kx < kw; ++kx) {
            T acc = 0;
            const T wv = wk[ky * kw + kx];
            for (int yy = 0; yy < oh; ++yy) {
              const T* src = &xp.at(ic, yy + ky, kx);
              const T* gr = g + static_cast<std::size_t>(yy) * ow;
              for (int xx = 0; xx < ow; ++xx) acc += gr[xx] * src[xx];
              if (need_gin) {
                T* dst = &gxp.at(ic, yy + ky, kx);
                for (int xx = 0; xx < ow; ++xx) dst[xx] += wv * gr[xx];
              }
            }
            gw[ky * kw + kx] += acc;
          }
        }
      }
    }
    if (!need_gin) return {};
    if (pad == 0) return gxp;
    Tensor<T> gx(x.c, x.h, x.w);
    for (int c = 0; c < x.c; ++c)
      for (int yy = 0; yy < x.h; ++yy) std::copy_n(&gxp.at(c, yy + pad, pad), x.w, &gx.at(c, yy, 0));
    return gx;
  }

  std::vector<Param<T>*> params() { return {&weight, &bias}; }
  std::vector<const Param<T>*> params() const { return {&weight, &bias}; }
};

struct Relu {
  std::string describe() const { return "relu"; }

  template <typename T>
  Tensor<T> forward(const Tensor<T>& x) const {
    Tensor<T> y = x;
    for (auto& v : y.data) v = v > T(0) ? v : T(0);
    return y;
  }

  template <typename T>
  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>&, const Tensor<T>& gy, bool) const {
    Tensor<T> gx = gy;
    for (std::size_t i = 0; i < gx.size(); ++i)
      if (!(x[i] > T(0))) gx[i] = T(0);
    return gx;
  }
};

/// 2x2 max pooling, stride 2, trailing odd row/column dropped.
struct MaxPool2 {
  std::string describe() const { return "maxpool2"; }

  template <typename T>
  Tensor<T> forward(const Tensor<T>& x) const {
    if (x.h < 2 || x.w < 2) fail(ErrorKind::ShapeMismatch, describe() + ": input " + shape_str(x) + " too small");
    Tensor<T> y(x.c, x.h / 2, x.w / 2);
    for (int c = 0; c < x.c; ++c)
      for (int yy = 0; yy < y.h; ++yy)
        for (int xx = 0; xx < y.w; ++xx)
          y.at(c, yy, xx) = std::max(std::max(x.at(c, 2 * yy, 2 * xx), x.at(c, 2 * yy, 2 * xx + 1)),
                                     std::max(x.at(c, 2 * yy + 1, 2 * xx), x.at(c, 2 * yy + 1, 2 * xx + 1)));
    return y;
  }

  template <typename T>
  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& gy, bool) const {
    Tensor<T> gx(x.c, x.h, x.w);
    for (int c = 0; c < x.c; ++c)
      for (int yy = 0; yy < y.h; ++yy)
        for (int xx = 0; xx < y.w; ++xx) {
          const T m = y.at(c, yy, xx);
          // route to the first maximal element, matching forward's tie order
          int by = 2 * yy + 1, bx = 2 * xx + 1;
          for (int k = 3; k >= 0; --k)
            if (x.at(c, 2 * yy + k / 2, 2 * xx + k % 2) == m) {
              by = 2 * yy + k / 2;
              bx = 2 * xx + k % 2;
            }
          gx.at(c, by, bx) += gy.at(c, yy, xx);
        }
    return gx;
  }
};

/// Fully connected layer over the flattened input.
template <typename T>
struct Dense {
  int in = 1, out = 1;
  Param<T> weight;  // (out, in, 1)
  Param<T> bias;    // (out, 1, 1)

  Dense() = default;
  Dense(int in_, int out_) : in(in_), out(out_), weight(out_, in_, 1), bias(out_, 1, 1) {}

  std::string describe() const { return "fc(" + std::to_string(in) + "->" + std::to_string(out) + ")"; }

  Tensor<T> forward(const Tensor<T>& x) const {
    if (static_cast<int>(x.size()) != in) fail(ErrorKind::ShapeMismatch, describe() + ": input " + shape_str(x));
    Tensor<T> y = Tensor<T>::flat(out);
    for (int o = 0; o < out; ++o) {
      const T* wr = &weight.value.data[static_cast<std::size_t>(o) * in];
      T acc = bias.value[static_cast<std::size_t>(o)];
      for (int i = 0; i < in; ++i) acc += wr[i] * x.data[static_cast<std::size_t>(i)];
      y[static_cast<std::size_t>(o)] = acc;
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>&, const Tensor<T>& gy, bool need_gin) {
    Tensor<T> gx;
    if (need_gin) gx = Tensor<T>(x.c, x.h, x.w);
    for (int o = 0; o < out; ++o) {
      const T g = gy[static_cast<std::size_t>(o)];
      bias.grad[static_cast<std::size_t>(o)] += g;
      if (g == T(0)) continue;
      T* gw = &weight.grad.data[static_cast<std::size_t>(o) * in];
      const T* wr = &weight.value.data[static_cast<std::size_t>(o) * in];
      for (int i = 0; i < in; ++i) gw[i] += g * x.data[static_cast<std::size_t>(i)];
      if (need_gin)
        for (int i = 0; i < in; ++i) gx.data[static_cast<std::size_t>(i)] += g * wr[i];
    }
    return gx;
  }

  std::vector<Param<T>*> params() { return {&weight, &bias}; }
  std::vector<const Param<T>*> params() const { return {&weight, &bias}; }
};

struct Softmax {
  std::string describe() const { return "softmax"; }

  template <typename T>
  Tensor<T> forward(const Tensor<T>& x) const {
    Tensor<T> y = Tensor<T>::flat(static_cast<int>(x.size()));
    const T m = *std::max_element(x.data.begin(), x.data.end());
    T s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (y[i] = std::exp(x[i] - m));
    for (auto& v : y.data) v /= s;
    return y;
  }

  template <typename T>
  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& gy, bool) const {
    T dot = 0;
    for (std::size_t i = 0; i < y.size(); ++i) dot += gy[i] * y[i];
    Tensor<T> gx(x.c, x.h, x.w);
    for (std::size_t i = 0; i < y.size(); ++i) gx[i] = y[i] * (gy[i] - dot);
    return gx;
  }
};

template <typename T>
using Layer = std::variant<Conv2d<T>, Relu, MaxPool2, Dense<T>, Softmax>;

template <typename T>
std::string describe(const Layer<T>& l) {
  return std::visit([](const auto& v) { return v.describe(); }, l);
}

/// Layers applied in order. forward() returns every activation (index 0 is
/// the input) so backward() can run without hidden state.
template <typename T>
struct Sequential {
  std::vector<Layer<T>> layers;

  std::vector<Tensor<T>> forward(const Tensor<T>& x) const {
    std::vector<Tensor<T>> acts;
    acts.reserve(layers.size() + 1);
    acts.push_back(x);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      try {
        acts.push_back(std::visit([&](const auto& l) { return l.forward(acts.back()); }, layers[i]));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::ShapeMismatch) throw;
        fail(ErrorKind::ShapeMismatch, "layer " + std::to_string(i) + " (" + describe(layers[i]) + "): " + e.what());
      }
    }
    return acts;
  }

  Tensor<T> output(const Tensor<T>& x) const { return std::move(forward(x).back()); }

  /// Accumulates parameter gradients; returns dL/dinput (empty when !need_gin).
  Tensor<T> backward(const std::vector<Tensor<T>>& acts, const Tensor<T>& gout, bool need_gin = true) {
    Tensor<T> g = gout;
    for (std::size_t i = layers.size(); i-- > 0;) {
      const bool want = need_gin || i > 0;
      g = std::visit([&](auto& l) { return l.backward(acts[i], acts[i + 1], g, want); }, layers[i]);
    }
    return g;
  }

  std::vector<Param<T>*> params() {
    std::vector<Param<T>*> out;
    for (auto& l : layers)
      std::visit(
          [&](auto& v) {
            if constexpr (requires { v.params(); })
              for (auto* p : v.params()) out.push_back(p);
          },
          l);
    return out;
  }

  std::vector<const Param<T>*> params() const {
    std::vector<const Param<T>*> out;
    for (const auto& l : layers)
      std::visit(
          [&](const auto& v) {
            if constexpr (requires { v.params(); })
              for (auto* p : v.params()) out.push_back(p);
          },
          l);
    return out;
  }

  void zero_grad() {
    for (auto* p : params()) p->grad.fill(T(0));
  }
};

/// He-uniform initialisation: U(-b, b), b = sqrt(6 / fan_in); biases zero.
template <typename T>
void he_uniform(Param<T>& weight, Param<T>& bias, int fan_in, Rng& rng) {
  const double b = std::sqrt(6.0 / std::max(fan_in, 1));
  for (auto& v : weight.value.data) v = static_cast<T>(rng.uniform(-b, b));
  bias.value.fill(T(0));
  weight.grad.fill(T(0));
  weight.velocity.fill(T(0));
  bias.grad.fill(T(0));
  bias.velocity.fill(T(0));
}

template <typename T>
void init_layer(Layer<T>& layer, Rng& rng) {
  if (auto* c = std::get_if<Conv2d<T>>(&layer)) he_uniform(c->weight, c->bias, c->in_c * c->kh * c->kw, rng);
  else if (auto* d = std::get_if<Dense<T>>(&layer)) he_uniform(d->weight, d->bias, d->in, rng);
}

/// −ln(p[label]) with p clamped below at 1e-12.
template <typename T>
double xent_loss(const Tensor<T>& probs, int label) {
  return -std::log(std::max(static_cast<double>(probs[static_cast<std::size_t>(label)]), 1e-12));
}

/// Gradient of xent_loss w.r.t. the probabilities.
template <typename T>
Tensor<T> xent_grad(const Tensor<T>& probs, int label) {
  Tensor<T> g(probs.c, probs.h, probs.w);
  const double p = std::max(static_cast<double>(probs[static_cast<std::size_t>(label)]), 1e-12);
  g[static_cast<std::size_t>(label)] = static_cast<T>(-1.0 / p);
  return g;
}

}  // namespace fseg::nn
