// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "icodiff/core/tensor.hpp"
#include "icodiff/geom/patch_table.hpp"
#include "icodiff/metric_map.hpp"

namespace icodiff {

// Linear ridge regressor from per-patch summary features to age, used as an
// independent judge of whether generated maps carry their requested age.
// Weights act on standardized features; intercept is the training-label mean.
struct ProbeModel {
  TensorD weights;    // (d)
  double intercept = 0.0;
  double lambda = 1.0;
  TensorD feat_mean;  // (d) training-feature mean
  TensorD feat_std;   // (d) training-feature population std (1 where zero)
};

// Per-patch mean of the patchified values, one entry per low-level face.
// Throws ArgumentError when the map level does not match the table.
TensorD features(const MetricMap& map, const PatchTable& table);

// Per-patch mean squared difference across the internal edges of each
// patch's triangular grid (the three edge families of the subdivision).
// Scale-covariant: roughness(a*x) = a^2 * roughness(x).
TensorD roughness_features(const MetricMap& map, const PatchTable& table);

// Feature row used by the evaluation pipeline: [means || roughness], 2*F
// entries. Mean features alone are blind to age for sign-symmetric map
// families (flipping a map's sign flips every mean but not its age), while
// roughness tracks the spatial frequency that the age drives.
TensorD probe_features(const MetricMap& map, const PatchTable& table);

// Stacks one feature row per map into an (n, d) matrix.
TensorD feature_matrix(const std::vector<MetricMap>& maps,
                       const PatchTable& table,
                       TensorD (*extract)(const MetricMap&, const PatchTable&));

// Standardizes columns (population std; constant columns get std 1), then
// solves (X~^T X~ + lambda I) w = X~^T y by Cholesky. intercept = mean(y).
// Throws ArgumentError for n < 2, shape mismatch, or lambda < 0;
// NumericError when the system is not positive definite (collinear features
// at lambda = 0 - the message advises lambda > 0).
ProbeModel fit_ridge(const TensorD& x, const std::vector<double>& y,
                     double lambda);

// y_hat[i] = intercept + sum_j w_j * (x[i][j] - mean_j) / std_j.
std::vector<double> predict(const ProbeModel& model, const TensorD& x);

struct EvalStats {
  double mae = 0.0;     // mean |y_hat - y|
  double mae_sd = 0.0;  // population standard deviation of |y_hat - y|
  double r2 = 0.0;      // 1 - SS_res / SS_tot
};

// Throws ArgumentError for n < 2 or size mismatch; NumericError when y has
// zero variance (R^2 undefined).
EvalStats evaluate(const std::vector<double>& y_hat,
                   const std::vector<double>& y);

}  // namespace icodiff
