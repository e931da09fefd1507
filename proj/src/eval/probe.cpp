// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "icodiff/eval/probe.hpp"

#include <cmath>
#include <string>

#include "icodiff/errors.hpp"

namespace icodiff {

namespace {

void check_level(const MetricMap& map, const PatchTable& table,
                 const char* who) {
  if (map.level != table.high_level)
    throw ArgumentError(std::string(who) + ": map level " +
                        std::to_string(map.level) + " does not match table level " +
                        std::to_string(table.high_level));
}

// Index of grid point (r, j) in the row-major triangular layout.
inline std::int64_t tri_index(std::int64_t r, std::int64_t j) {
  return r * (r + 1) / 2 + j;
}

}  // namespace

TensorD features(const MetricMap& map, const PatchTable& table) {
  check_level(map, table, "features");
  const TensorF patches = patchify(map, table);
  const std::int64_t f = patches.shape()[0], vp = patches.shape()[1];
  TensorD out(Shape{f});
  for (std::int64_t i = 0; i < f; ++i) {
    double acc = 0.0;
    for (std::int64_t j = 0; j < vp; ++j) acc += double(patches.at(i, j));
    out[i] = acc / double(vp);
  }
  return out;
}

TensorD roughness_features(const MetricMap& map, const PatchTable& table) {
  check_level(map, table, "roughness_features");
  const TensorF patches = patchify(map, table);
  const std::int64_t f = patches.shape()[0];
  const std::int64_t n = std::int64_t(1) << (table.high_level - table.low_level);
  TensorD out(Shape{f});
  for (std::int64_t i = 0; i < f; ++i) {
    const float* row = patches.data() + i * table.patch_len;
    double acc = 0.0;
    std::int64_t edges = 0;
    for (std::int64_t r = 0; r < n; ++r) {
      for (std::int64_t j = 0; j <= r; ++j) {
        const double v = double(row[tri_index(r, j)]);
        // The two subdivision edges descending from (r, j) plus, inside the
        // next row, the edge closing the triangle they span.
        const double dl = double(row[tri_index(r + 1, j)]);
        const double dr = double(row[tri_index(r + 1, j + 1)]);
        acc += (v - dl) * (v - dl) + (v - dr) * (v - dr) + (dl - dr) * (dl - dr);
        edges += 3;
      }
    }
    out[i] = acc / double(edges);
  }
  return out;
}

TensorD probe_features(const MetricMap& map, const PatchTable& table) {
  const TensorD m = features(map, table);
  const TensorD r = roughness_features(map, table);
  const std::int64_t f = m.numel();
  TensorD out(Shape{2 * f});
  for (std::int64_t i = 0; i < f; ++i) {
    out[i] = m[i];
    out[f + i] = r[i];
  }
  return out;
}

TensorD feature_matrix(const std::vector<MetricMap>& maps,
                       const PatchTable& table,
                       TensorD (*extract)(const MetricMap&,
                                          const PatchTable&)) {
  if (maps.empty()) throw ArgumentError("feature_matrix: no maps");
  const TensorD first = extract(maps[0], table);
  const std::int64_t d = first.numel();
  TensorD x(Shape{std::int64_t(maps.size()), d});
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const TensorD row = i == 0 ? first : extract(maps[i], table);
    for (std::int64_t j = 0; j < d; ++j) x.at(std::int64_t(i), j) = row[j];
  }
  return x;
}

namespace {

// In-place Cholesky solve of A w = b for symmetric positive-definite A.
void spd_solve(std::vector<double>& a, std::vector<double>& b,
               std::int64_t d) {
  for (std::int64_t j = 0; j < d; ++j) {
    double diag = a[std::size_t(j * d + j)];
    for (std::int64_t k = 0; k < j; ++k) {
      const double l = a[std::size_t(j * d + k)];
      diag -= l * l;
    }
    if (!(diag > 0.0))
      throw NumericError(
          "ridge solve: system is not positive definite (collinear features"
          " at lambda = 0?); refit with lambda > 0");
    const double root = std::sqrt(diag);
    a[std::size_t(j * d + j)] = root;
    for (std::int64_t i = j + 1; i < d; ++i) {
      double v = a[std::size_t(i * d + j)];
      for (std::int64_t k = 0; k < j; ++k)
        v -= a[std::size_t(i * d + k)] * a[std::size_t(j * d + k)];
      a[std::size_t(i * d + j)] = v / root;
    }
  }
  for (std::int64_t i = 0; i < d; ++i) {  // L z = b
    double v = b[std::size_t(i)];
    for (std::int64_t k = 0; k < i; ++k)
      v -= a[std::size_t(i * d + k)] * b[std::size_t(k)];
    b[std::size_t(i)] = v / a[std::size_t(i * d + i)];
  }
  for (std::int64_t i = d - 1; i >= 0; --i) {  // L^T w = z
    double v = b[std::size_t(i)];
    for (std::int64_t k = i + 1; k < d; ++k)
      v -= a[std::size_t(k * d + i)] * b[std::size_t(k)];
    b[std::size_t(i)] = v / a[std::size_t(i * d + i)];
  }
}

}  // namespace

ProbeModel fit_ridge(const TensorD& x, const std::vector<double>& y,
                     double lambda) {
  if (x.shape().size() != 2)
    throw ArgumentError("fit_ridge: features must be a matrix, got shape " +
                        shape_str(x.shape()));
  const std::int64_t n = x.shape()[0], d = x.shape()[1];
  if (n < 2) throw ArgumentError("fit_ridge: need at least 2 rows");
  if (std::int64_t(y.size()) != n)
    throw ArgumentError("fit_ridge: " + std::to_string(n) + " rows vs " +
                        std::to_string(y.size()) + " labels");
  if (lambda < 0.0) throw ArgumentError("fit_ridge: lambda must be >= 0");

  ProbeModel model;
  model.lambda = lambda;
  model.feat_mean = TensorD(Shape{d});
  model.feat_std = TensorD(Shape{d});
  for (std::int64_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::int64_t i = 0; i < n; ++i) mean += x.at(i, j);
    mean /= double(n);
    double var = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      const double c = x.at(i, j) - mean;
      var += c * c;
    }
    const double sd = std::sqrt(var / double(n));
    model.feat_mean[j] = mean;
    model.feat_std[j] = sd > 0.0 ? sd : 1.0;
  }

  double ybar = 0.0;
  for (double v : y) ybar += v;
  ybar /= double(n);
  model.intercept = ybar;

  // Gram matrix and right-hand side in standardized coordinates.
  std::vector<double> gram(std::size_t(d * d), 0.0);
  std::vector<double> rhs(std::size_t(d), 0.0);
  std::vector<double> row(std::size_t(d), 0.0);
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < d; ++j)
      row[std::size_t(j)] = (x.at(i, j) - model.feat_mean[j]) / model.feat_std[j];
    for (std::int64_t j = 0; j < d; ++j) {
      for (std::int64_t k = 0; k <= j; ++k)
        gram[std::size_t(j * d + k)] += row[std::size_t(j)] * row[std::size_t(k)];
      rhs[std::size_t(j)] += row[std::size_t(j)] * y[std::size_t(i)];
    }
  }
  for (std::int64_t j = 0; j < d; ++j) {
    gram[std::size_t(j * d + j)] += lambda;
    for (std::int64_t k = j + 1; k < d; ++k)
      gram[std::size_t(j * d + k)] = gram[std::size_t(k * d + j)];
  }
  spd_solve(gram, rhs, d);

  model.weights = TensorD(Shape{d});
  for (std::int64_t j = 0; j < d; ++j) {
    if (!std::isfinite(rhs[std::size_t(j)]))
      throw NumericError("fit_ridge: non-finite weight");
    model.weights[j] = rhs[std::size_t(j)];
  }
  return model;
}

std::vector<double> predict(const ProbeModel& model, const TensorD& x) {
  if (x.shape().size() != 2 || x.shape()[1] != model.weights.numel())
    throw ArgumentError("predict: features shape " + shape_str(x.shape()) +
                        " does not match probe dimension " +
                        std::to_string(model.weights.numel()));
  const std::int64_t n = x.shape()[0], d = x.shape()[1];
  std::vector<double> out(std::size_t(n), 0.0);
  for (std::int64_t i = 0; i < n; ++i) {
    double acc = model.intercept;
    for (std::int64_t j = 0; j < d; ++j)
      acc += model.weights[j] * (x.at(i, j) - model.feat_mean[j]) /
             model.feat_std[j];
    out[std::size_t(i)] = acc;
  }
  return out;
}

EvalStats evaluate(const std::vector<double>& y_hat,
                   const std::vector<double>& y) {
  if (y.size() < 2) throw ArgumentError("evaluate: need at least 2 samples");
  if (y_hat.size() != y.size())
    throw ArgumentError("evaluate: " + std::to_string(y_hat.size()) +
                        " predictions vs " + std::to_string(y.size()) +
                        " labels");
  const std::size_t n = y.size();
  double ybar = 0.0;
  for (double v : y) ybar += v;
  ybar /= double(n);

  double abs_sum = 0.0, abs_sq = 0.0, ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y_hat[i] - y[i];
    abs_sum += std::fabs(e);
    abs_sq += e * e;
    ss_res += e * e;
    const double c = y[i] - ybar;
    ss_tot += c * c;
  }
  if (ss_tot <= 0.0)
    throw NumericError("evaluate: labels have zero variance, R^2 undefined");

  EvalStats stats;
  stats.mae = abs_sum / double(n);
  const double var_abs = abs_sq / double(n) - stats.mae * stats.mae;
  stats.mae_sd = var_abs > 0.0 ? std::sqrt(var_abs) : 0.0;
  stats.r2 = 1.0 - ss_res / ss_tot;
  return stats;
}

}  // namespace icodiff
