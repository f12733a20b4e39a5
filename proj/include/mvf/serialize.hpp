#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "mvf/block.hpp"

namespace mvf {

struct WeightFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Binary weight container.  Little-endian on disk regardless of host:
//   "MVFW" | u32 version | u32 entry count
//   entry: u32 name_len | name | u8 dtype (0=f32, 1=f64) | u8 rank
//          | u32 dims[rank] | payload
inline constexpr char kWeightMagic[4] = {'M', 'V', 'F', 'W'};
inline constexpr std::uint32_t kWeightVersion = 1;

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw WeightFileError("truncated weight file");
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

template <typename T>
void put_scalar(std::ostream& os, T v) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i)
    os.put(static_cast<char>((bits >> (8 * i)) & 0xff));
}

template <typename T>
T get_scalar(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), sizeof(T));
  if (!is) throw WeightFileError("truncated weight payload");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  T v;
  std::memcpy(&v, &bits, sizeof(T));
  return v;
}

}  // namespace detail

template <typename T>
struct WeightEntry {
  std::vector<std::uint32_t> dims;
  std::vector<T> data;
};

template <typename T>
using WeightMap = std::map<std::string, WeightEntry<T>>;

template <typename T>
void save_weights(const std::string& path, const WeightMap<T>& weights) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw WeightFileError("cannot open '" + path + "' for writing");
  os.write(kWeightMagic, 4);
  detail::put_u32(os, kWeightVersion);
  detail::put_u32(os, static_cast<std::uint32_t>(weights.size()));
  for (const auto& [name, entry] : weights) {
    detail::put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    os.put(sizeof(T) == 4 ? '\0' : '\1');
    os.put(static_cast<char>(entry.dims.size()));
    std::size_t total = 1;
    for (std::uint32_t d : entry.dims) {
      detail::put_u32(os, d);
      total *= d;
    }
    if (total != entry.data.size())
      throw WeightFileError("entry '" + name + "': dims/payload mismatch");
    for (T v : entry.data) detail::put_scalar(os, v);
  }
  if (!os) throw WeightFileError("write failure on '" + path + "'");
}

template <typename T>
WeightMap<T> load_weights(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw WeightFileError("cannot open '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kWeightMagic, 4) != 0)
    throw WeightFileError("'" + path + "' is not a weight file");
  const std::uint32_t version = detail::get_u32(is);
  if (version != kWeightVersion)
    throw WeightFileError("unsupported weight file version " +
                          std::to_string(version));
  const std::uint32_t count = detail::get_u32(is);
  WeightMap<T> out;
  for (std::uint32_t e = 0; e < count; ++e) {
    const std::uint32_t name_len = detail::get_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const int dtype = is.get();
    const int rank = is.get();
    if (!is || rank < 0) throw WeightFileError("truncated entry header");
    if ((dtype == 0) != (sizeof(T) == 4))
      throw WeightFileError("entry '" + name + "': dtype mismatch");
    WeightEntry<T> entry;
    std::size_t total = 1;
    for (int d = 0; d < rank; ++d) {
      entry.dims.push_back(detail::get_u32(is));
      total *= entry.dims.back();
    }
    entry.data.resize(total);
    for (std::size_t i = 0; i < total; ++i)
      entry.data[i] = detail::get_scalar<T>(is);
    out.emplace(std::move(name), std::move(entry));
  }
  return out;
}

// Network <-> weight map.

template <typename T, typename Net>
WeightMap<T> snapshot_weights(Net& net) {
  WeightMap<T> out;
  ParamLists<T> pl = net.parameters();
  for (const auto& p : pl.params)
    out[p.name] = {{static_cast<std::uint32_t>(p.value->size())}, *p.value};
  for (const auto& b : pl.buffers)
    out[b.name] = {{static_cast<std::uint32_t>(b.value->size())}, *b.value};
  return out;
}

/// Strict restore: every network tensor must be present with the right
/// size, and the file may not carry extras.
template <typename T, typename Net>
void restore_weights(Net& net, const WeightMap<T>& weights) {
  ParamLists<T> pl = net.parameters();
  std::size_t used = 0;
  const auto apply = [&](const std::string& name, std::vector<T>& dst) {
    auto it = weights.find(name);
    if (it == weights.end())
      throw WeightFileError("missing weight entry '" + name + "'");
    if (it->second.data.size() != dst.size())
      throw WeightFileError("weight entry '" + name + "' has size " +
                            std::to_string(it->second.data.size()) +
                            ", network expects " + std::to_string(dst.size()));
    dst = it->second.data;
    ++used;
  };
  for (const auto& p : pl.params) apply(p.name, *p.value);
  for (const auto& b : pl.buffers) apply(b.name, *b.value);
  if (used != weights.size())
    throw WeightFileError("weight file carries " +
                          std::to_string(weights.size() - used) +
                          " entries unknown to this network");
}

}  // namespace mvf
