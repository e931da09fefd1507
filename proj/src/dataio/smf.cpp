// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "icodiff/dataio/smf.hpp"

#include <cmath>
#include <cstring>

#include "icodiff/dataio/wire.hpp"
#include "icodiff/geom/icosphere.hpp"

namespace icodiff {

std::vector<std::uint8_t> serialize_smf(const MetricMap& map) {
  if (map.level < 0 || map.level > kMaxIcosphereLevel)
    throw ArgumentError("smf: level out of range");
  const std::int64_t nv = icosphere_vertex_count(map.level);
  if (std::int64_t(map.values.size()) != nv)
    throw ArgumentError("smf: value count " + std::to_string(map.values.size()) +
                        " does not match level " + std::to_string(map.level));
  std::vector<std::uint8_t> out;
  out.reserve(std::size_t(20 + nv * 4));
  out.insert(out.end(), {'S', 'M', 'F', '1'});
  wire::put_u32(out, std::uint32_t(map.level));
  wire::put_u32(out, std::uint32_t(nv));
  wire::put_u32(out, 1);  // channels
  if (map.age_weeks.has_value())
    wire::put_f64(out, *map.age_weeks);
  else
    wire::put_f64_bits(out, kSmfAgeAbsentBits);
  for (float v : map.values) wire::put_f32(out, v);
  return out;
}

MetricMap parse_smf(const std::vector<std::uint8_t>& bytes,
                    const std::string& what) {
  wire::Reader r(bytes.data(), bytes.size(), what);
  const std::uint8_t* magic = r.take(4);
  if (std::memcmp(magic, "SMF1", 4) != 0)
    throw ParseError(what + ": bad magic");
  const std::uint32_t level = r.u32();
  const std::uint32_t count = r.u32();
  const std::uint32_t channels = r.u32();
  if (level > std::uint32_t(kMaxIcosphereLevel))
    throw ParseError(what + ": level " + std::to_string(level) + " out of range");
  if (std::int64_t(count) != icosphere_vertex_count(int(level)))
    throw ParseError(what + ": vertex count " + std::to_string(count) +
                     " does not match level " + std::to_string(level));
  if (channels != 1)
    throw ParseError(what + ": expected 1 channel, found " +
                     std::to_string(channels));
  const double age = r.f64();
  MetricMap map;
  map.level = int(level);
  if (!std::isnan(age)) map.age_weeks = age;
  map.values.resize(count);
  for (auto& v : map.values) v = r.f32();
  if (r.remaining() != 0) throw ParseError(what + ": trailing bytes");
  return map;
}

void write_smf(const MetricMap& map, const std::string& path) {
  wire::write_file(path, serialize_smf(map));
}

MetricMap read_smf(const std::string& path) {
  return parse_smf(wire::read_file(path), path);
}

}  // namespace icodiff
