#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <unistd.h>
#include <vector>

#include "nlsr/errors.hpp"
#include "nlsr/grid.hpp"

namespace nlsr {

inline constexpr std::uint32_t kSnapshotVersion = 1;

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

/// Writes bytes to a sibling temp file and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Format, "cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::Format, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(ErrorKind::Format, "cannot rename into " + path.string() + ": " + ec.message());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Format, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

namespace detail {

template <class T>
void put(std::string& out, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.append(b, sizeof(T));
}

template <class T>
T get(const std::string& in, std::size_t& pos) {
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

constexpr std::size_t kHeaderBytes = 4 + 4 + 4 + 8 + 8;

}  // namespace detail

inline std::string encode_snapshot(const RadialField& f) {
  const auto& g = f.grid();
  std::string out;
  out.reserve(detail::kHeaderBytes + 16 * f.size());
  out.append("NLSR", 4);
  detail::put<std::uint32_t>(out, kSnapshotVersion);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(g.dimension()));
  detail::put<std::uint64_t>(out, g.size());
  detail::put<double>(out, g.r_max());
  for (const auto& z : f.values()) {
    detail::put<double>(out, z.real());
    detail::put<double>(out, z.imag());
  }
  return out;
}

/// Decodes a snapshot; `where` labels error messages.
inline RadialField decode_snapshot(const std::string& bytes, const std::string& where = "snapshot") {
  if (bytes.size() < detail::kHeaderBytes) throw Error(ErrorKind::Format, where + ": truncated header");
  if (bytes.compare(0, 4, "NLSR") != 0) throw Error(ErrorKind::Format, where + ": bad magic");
  std::size_t pos = 4;
  const auto version = detail::get<std::uint32_t>(bytes, pos);
  if (version != kSnapshotVersion) {
    throw Error(ErrorKind::Version, where + ": file version " + std::to_string(version) + ", reader supports version " +
                                        std::to_string(kSnapshotVersion));
  }
  const auto d = detail::get<std::uint32_t>(bytes, pos);
  const auto n = detail::get<std::uint64_t>(bytes, pos);
  const auto r_max = detail::get<double>(bytes, pos);
  if (n > (bytes.size() - detail::kHeaderBytes) / 16 || bytes.size() != detail::kHeaderBytes + 16 * n) {
    throw Error(ErrorKind::Format, where + ": payload size does not match n = " + std::to_string(n));
  }
  if (d < 3 || d > 64 || n < 4 || !(r_max > 0.0) || !std::isfinite(r_max)) {
    throw Error(ErrorKind::Format, where + ": invalid grid header");
  }
  std::vector<Complex> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double re = detail::get<double>(bytes, pos);
    const double im = detail::get<double>(bytes, pos);
    if (!std::isfinite(re) || !std::isfinite(im)) {
      throw Error(ErrorKind::NonFiniteData, where + ": non-finite value at node " + std::to_string(i));
    }
    v[i] = Complex(re, im);
  }
  return RadialField::from_complex(make_grid(static_cast<int>(d), n, r_max), std::move(v));
}

inline void write_snapshot(const RadialField& f, const std::filesystem::path& path) {
  write_file_atomic(path, encode_snapshot(f));
}

inline RadialField read_snapshot(const std::filesystem::path& path) {
  return decode_snapshot(read_file(path), path.string());
}

}  // namespace nlsr
