// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace icodiff {

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory
  double age_weeks = 0.0;
  std::string split;  // "train" | "val" | "test"
};

struct DatasetManifest {
  int format_version = 1;
  int level = 0;
  std::vector<ManifestEntry> entries;
  std::optional<double> norm_mean;  // train-split statistics, once computed
  std::optional<double> norm_std;
};

// JSON (de)serialization. Loading validates the version, the split labels,
// and split disjointness by path.
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& m, const std::string& path);

// Entries of one split, in manifest order.
std::vector<const ManifestEntry*> split_entries(const DatasetManifest& m,
                                                std::string_view split);

// Assigns splits with the 423:54:53 train:val:test proportions after a
// deterministic shuffle keyed by (seed, "split"). Every entry gets a label;
// counts use largest-remainder rounding so they sum to n.
void assign_splits(std::vector<ManifestEntry>& entries, std::uint64_t seed);

}  // namespace icodiff
