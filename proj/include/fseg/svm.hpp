#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "fseg/error.hpp"
#include "fseg/random.hpp"

namespace fseg {

/// w·x + b.
struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;

  std::size_t dim() const { return weights.size(); }

  double margin(const std::vector<double>& x) const {
    if (x.size() != weights.size()) fail(ErrorKind::DimensionMismatch, "linear model dim " + std::to_string(weights.size()) +
                                                                           " vs input " + std::to_string(x.size()));
    return std::inner_product(x.begin(), x.end(), weights.begin(), bias);
  }

  static LinearModel zero(std::size_t dim) { return LinearModel{std::vector<double>(dim, 0.0), 0.0}; }

  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

struct SvmParams {
  double lambda = 1e-4;
  int epochs = 30;
  std::uint64_t seed = 1;
};

/// λ/2·|w|² + mean hinge loss, with the bias treated as the weight of a
/// constant feature (and so regularised along with w).
inline double svm_objective(const LinearModel& m, const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                            double lambda) {
  double reg = m.bias * m.bias;
  for (double w : m.weights) reg += w * w;
  double loss = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) loss += std::max(0.0, 1.0 - y[i] * m.margin(X[i]));
  return 0.5 * lambda * reg + loss / static_cast<double>(X.size());
}

/// Pegasos: stochastic subgradient descent on the primal hinge objective with
/// step 1/(λt) and projection onto the ball of radius 1/√λ. Each epoch visits
/// a seeded permutation of the samples; the epoch checkpoint with the lowest
/// objective is returned.
inline LinearModel train_linear_svm(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                                    const SvmParams& params, std::vector<double>* objective_trace = nullptr) {
  if (X.size() != y.size()) fail(ErrorKind::DimensionMismatch, "sample and label counts differ");
  if (X.size() < 2) fail(ErrorKind::DegenerateLabels, "need at least two samples");
  const std::size_t dim = X.front().size();
  for (const auto& x : X)
    if (x.size() != dim) fail(ErrorKind::DimensionMismatch, "inconsistent feature dimensions");
  bool has_pos = false, has_neg = false;
  for (int v : y) {
    if (v == 1) has_pos = true;
    else if (v == -1) has_neg = true;
    else fail(ErrorKind::DegenerateLabels, "labels must be +1 or -1");
  }
  if (!has_pos || !has_neg) fail(ErrorKind::DegenerateLabels, "both classes must be present");
  if (!(params.lambda > 0.0)) fail(ErrorKind::ConfigError, "svm.lambda must be > 0");

  const double lambda = params.lambda;
  const double radius = 1.0 / std::sqrt(lambda);
  // The iterate (weights plus bias as last entry) is stored as scale * v so
  // the (1 - ηλ) shrink is O(1).
  double scale = 1.0;
  std::vector<double> v(dim + 1, 0.0);
  double sq_norm = 0.0;  // |scale·v|²

  LinearModel best = LinearModel::zero(dim);
  double best_obj = svm_objective(best, X, y, lambda);
  if (objective_trace) objective_trace->assign(1, best_obj);

  std::vector<std::size_t> order(X.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(params.seed);
  std::size_t t = 0;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const auto& x = X[i];
      double m = v[dim];
      for (std::size_t j = 0; j < dim; ++j) m += v[j] * x[j];
      m *= scale;
      const double shrink = 1.0 - eta * lambda;  // zero on the first step
      if (shrink <= 0.0) {
        std::fill(v.begin(), v.end(), 0.0);
        scale = 1.0;
        sq_norm = 0.0;
      } else {
        scale *= shrink;
        sq_norm *= shrink * shrink;
      }
      if (y[i] * m < 1.0) {
        const double step = eta * y[i] / scale;
        double dot = v[dim];
        double xx = 1.0;
        for (std::size_t j = 0; j < dim; ++j) {
          dot += v[j] * x[j];
          xx += x[j] * x[j];
        }
        for (std::size_t j = 0; j < dim; ++j) v[j] += step * x[j];
        v[dim] += step;
        // |s(v + δx)|² = |sv|² + 2 s² δ v·x + s² δ² |x|²
        sq_norm += 2.0 * scale * scale * step * dot + scale * scale * step * step * xx;
      }
      if (sq_norm > radius * radius) {
        const double r = radius / std::sqrt(sq_norm);
        scale *= r;
        sq_norm = radius * radius;
      }
      if (scale < 1e-9) {
        for (double& e : v) e *= scale;
        scale = 1.0;
      }
    }
    sq_norm = 0.0;
    for (double e : v) sq_norm += scale * scale * e * e;
    LinearModel cur;
    cur.weights.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) cur.weights[j] = scale * v[j];
    cur.bias = scale * v[dim];
    const double obj = svm_objective(cur, X, y, lambda);
    if (objective_trace) objective_trace->push_back(obj);
    if (obj < best_obj) {
      best_obj = obj;
      best = std::move(cur);
    }
  }
  return best;
}

}  // namespace fseg
