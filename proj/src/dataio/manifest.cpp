// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "icodiff/dataio/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "icodiff/errors.hpp"
#include "icodiff/rng.hpp"

namespace icodiff {

namespace {

bool valid_split(const std::string& s) {
  return s == "train" || s == "val" || s == "test";
}

}  // namespace

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("manifest: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("manifest: invalid JSON in " + path + ": " + e.what());
  }
  DatasetManifest m;
  try {
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != 1)
      throw ParseError("manifest: unsupported format version " +
                       std::to_string(m.format_version));
    m.level = j.at("level").get<int>();
    for (const auto& e : j.at("files")) {
      ManifestEntry entry;
      entry.path = e.at("path").get<std::string>();
      entry.age_weeks = e.at("age_weeks").get<double>();
      entry.split = e.at("split").get<std::string>();
      if (!valid_split(entry.split))
        throw ParseError("manifest: unknown split '" + entry.split + "'");
      m.entries.push_back(std::move(entry));
    }
    if (j.contains("normalization")) {
      m.norm_mean = j["normalization"].at("mean").get<double>();
      m.norm_std = j["normalization"].at("std").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("manifest: missing or mistyped field in " + path + ": " +
                     e.what());
  }
  std::set<std::string> seen;
  for (const auto& e : m.entries)
    if (!seen.insert(e.path).second)
      throw ParseError("manifest: duplicate path " + e.path);
  return m;
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
  nlohmann::json j;
  j["format_version"] = m.format_version;
  j["level"] = m.level;
  auto files = nlohmann::json::array();
  for (const auto& e : m.entries) {
    files.push_back({{"path", e.path},
                     {"age_weeks", e.age_weeks},
                     {"split", e.split}});
  }
  j["files"] = std::move(files);
  if (m.norm_mean && m.norm_std)
    j["normalization"] = {{"mean", *m.norm_mean}, {"std", *m.norm_std}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("manifest: cannot write " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("manifest: short write to " + path);
}

std::vector<const ManifestEntry*> split_entries(const DatasetManifest& m,
                                                std::string_view split) {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : m.entries)
    if (e.split == split) out.push_back(&e);
  return out;
}

void assign_splits(std::vector<ManifestEntry>& entries, std::uint64_t seed) {
  const std::int64_t n = std::int64_t(entries.size());
  if (n == 0) return;
  // Largest-remainder apportionment of 423:54:53.
  const double weights[3] = {423.0, 54.0, 53.0};
  const char* names[3] = {"train", "val", "test"};
  double total = weights[0] + weights[1] + weights[2];
  std::int64_t counts[3];
  double rema[3];
  std::int64_t assigned = 0;
  for (int k = 0; k < 3; ++k) {
    const double exact = double(n) * weights[k] / total;
    counts[k] = std::int64_t(std::floor(exact));
    rema[k] = exact - std::floor(exact);
    assigned += counts[k];
  }
  while (assigned < n) {
    int best = 0;
    for (int k = 1; k < 3; ++k)
      if (rema[k] > rema[best]) best = k;
    counts[best] += 1;
    rema[best] = -1.0;
    assigned += 1;
  }

  std::vector<std::int64_t> order(std::size_t(n), 0);
  for (std::int64_t i = 0; i < n; ++i) order[std::size_t(i)] = i;
  RngStream rng(seed, "split", 0);
  for (std::int64_t i = n - 1; i > 0; --i) {
    const auto j = std::int64_t(rng.uniform_int(0, i));
    std::swap(order[std::size_t(i)], order[std::size_t(j)]);
  }
  std::int64_t pos = 0;
  for (int k = 0; k < 3; ++k)
    for (std::int64_t c = 0; c < counts[k]; ++c)
      entries[std::size_t(order[std::size_t(pos++)])].split = names[k];
}

}  // namespace icodiff
