// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "icodiff/dataio/container.hpp"

#include <fstream>

#include "icodiff/dataio/wire.hpp"

namespace icodiff {

namespace wire {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed on " + path);
  return bytes;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            std::streamsize(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failed on " + path);
}

}  // namespace wire

namespace {

constexpr char kMagic[4] = {'I', 'C', 'N', '1'};

template <class Real>
std::vector<std::uint8_t> encode_tensor(const Tensor<Real>& t) {
  std::vector<std::uint8_t> p;
  wire::put_u32(p, std::uint32_t(t.rank()));
  for (int i = 0; i < t.rank(); ++i) wire::put_u64(p, std::uint64_t(t.dim(i)));
  for (std::int64_t i = 0; i < t.numel(); ++i) {
    if constexpr (sizeof(Real) == 4)
      wire::put_f32(p, float(t[i]));
    else
      wire::put_f64(p, double(t[i]));
  }
  return p;
}

template <class Real>
Tensor<Real> decode_tensor(const std::vector<std::uint8_t>& payload,
                           const std::string& name) {
  wire::Reader r(payload.data(), payload.size(), "container entry " + name);
  const std::uint32_t rank = r.u32();
  if (rank > 8) throw ParseError("container entry " + name + ": bad rank");
  Shape shape(rank, 0);
  for (auto& d : shape) d = std::int64_t(r.u64());
  Tensor<Real> t(shape);
  for (std::int64_t i = 0; i < t.numel(); ++i) {
    if constexpr (sizeof(Real) == 4)
      t[i] = Real(r.f32());
    else
      t[i] = Real(r.f64());
  }
  if (r.remaining() != 0)
    throw ParseError("container entry " + name + ": trailing bytes");
  return t;
}

}  // namespace

void Container::put_bytes(const std::string& name, std::vector<std::uint8_t> data) {
  entries_[name] = Entry{Type::kBytes, std::move(data)};
}

void Container::put_string(const std::string& name, const std::string& s) {
  entries_[name] = Entry{Type::kString,
                         std::vector<std::uint8_t>(s.begin(), s.end())};
}

void Container::put_i64(const std::string& name,
                        const std::vector<std::int64_t>& v) {
  std::vector<std::uint8_t> p;
  for (auto x : v) wire::put_u64(p, std::uint64_t(x));
  entries_[name] = Entry{Type::kI64, std::move(p)};
}

void Container::put_f32(const std::string& name, const TensorF& t) {
  entries_[name] = Entry{Type::kF32Tensor, encode_tensor(t)};
}

void Container::put_f64(const std::string& name, const TensorD& t) {
  entries_[name] = Entry{Type::kF64Tensor, encode_tensor(t)};
}

std::vector<std::string> Container::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [k, v] : entries_) {
    (void)v;
    out.push_back(k);
  }
  return out;
}

const Container::Entry& Container::get(const std::string& name, Type want) const {
  auto it = entries_.find(name);
  if (it == entries_.end())
    throw ParseError("container: missing entry " + name);
  if (it->second.type != want)
    throw ParseError("container: entry " + name + " has unexpected type");
  return it->second;
}

const std::vector<std::uint8_t>& Container::bytes(const std::string& name) const {
  return get(name, Type::kBytes).payload;
}

std::string Container::string(const std::string& name) const {
  const auto& p = get(name, Type::kString).payload;
  return std::string(p.begin(), p.end());
}

std::vector<std::int64_t> Container::i64(const std::string& name) const {
  const auto& p = get(name, Type::kI64).payload;
  if (p.size() % 8 != 0)
    throw ParseError("container: entry " + name + ": bad length");
  wire::Reader r(p.data(), p.size(), "container entry " + name);
  std::vector<std::int64_t> out(p.size() / 8);
  for (auto& x : out) x = std::int64_t(r.u64());
  return out;
}

TensorF Container::f32(const std::string& name) const {
  return decode_tensor<float>(get(name, Type::kF32Tensor).payload, name);
}

TensorD Container::f64(const std::string& name) const {
  return decode_tensor<double>(get(name, Type::kF64Tensor).payload, name);
}

void Container::save(const std::string& path) const {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  wire::put_u32(out, std::uint32_t(entries_.size()));
  for (const auto& [name, e] : entries_) {
    wire::put_u32(out, std::uint32_t(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    out.push_back(std::uint8_t(e.type));
    wire::put_u64(out, std::uint64_t(e.payload.size()));
    out.insert(out.end(), e.payload.begin(), e.payload.end());
  }
  wire::write_file(path, out);
}

Container Container::load(const std::string& path) {
  const auto bytes = wire::read_file(path);
  wire::Reader r(bytes.data(), bytes.size(), "container " + path);
  const std::uint8_t* magic = r.take(4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw ParseError("container " + path + ": bad magic");
  const std::uint32_t count = r.u32();
  Container c;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    if (name_len > 4096)
      throw ParseError("container " + path + ": entry name too long");
    const std::uint8_t* name_p = r.take(name_len);
    std::string name(reinterpret_cast<const char*>(name_p), name_len);
    const std::uint8_t type_raw = r.take(1)[0];
    if (type_raw > std::uint8_t(Type::kF64Tensor))
      throw ParseError("container " + path + ": unknown entry type");
    const std::uint64_t len = r.u64();
    const std::uint8_t* payload = r.take(std::size_t(len));
    Entry e;
    e.type = Type(type_raw);
    e.payload.assign(payload, payload + len);
    c.entries_[name] = std::move(e);
  }
  if (r.remaining() != 0) throw ParseError("container " + path + ": trailing bytes");
  return c;
}

}  // namespace icodiff
