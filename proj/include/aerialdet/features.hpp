#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "aerialdet/errors.hpp"
#include "aerialdet/image_io.hpp"

namespace aerialdet {

// Row-major feature rows, stored as the 32-bit floats the file format
// carries so write-then-read round-trips bit-exactly.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<float> data;
  std::string source_tag;

  float at(std::size_t r, std::size_t c) const { return data[r * dim + c]; }
  float& at(std::size_t r, std::size_t c) { return data[r * dim + c]; }

  void validate() const {
    if (dim < 1) throw DimensionError("FeatureMatrix: dim must be >= 1");
    if (data.size() != rows * dim) throw DimensionError("FeatureMatrix: data length mismatch");
    for (float v : data) {
      if (!std::isfinite(v)) throw FormatError("FeatureMatrix: non-finite value");
    }
  }
};

namespace detail {

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
  }
}

template <typename T>
T get_le(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return static_cast<T>(v);
}

inline void put_f32_le(std::string& out, float f) {
  std::uint32_t u;
  std::memcpy(&u, &f, 4);
  put_le<std::uint32_t>(out, u);
}

inline float get_f32_le(const std::uint8_t* p) {
  const std::uint32_t u = get_le<std::uint32_t>(p);
  float f;
  std::memcpy(&f, &u, 4);
  return f;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

}  // namespace detail

constexpr std::array<char, 4> kFeatMagic = {'F', 'E', 'A', 'T'};
constexpr std::uint32_t kFeatVersion = 1;

// "FEAT", version u32, rows u64, dim u64, rows*dim little-endian f32.
inline void save_features(const std::filesystem::path& path, const FeatureMatrix& m) {
  m.validate();
  std::string buf;
  buf.append(kFeatMagic.data(), kFeatMagic.size());
  detail::put_le<std::uint32_t>(buf, kFeatVersion);
  detail::put_le<std::uint64_t>(buf, m.rows);
  detail::put_le<std::uint64_t>(buf, m.dim);
  for (float v : m.data) detail::put_f32_le(buf, v);
  detail::AtomicFileWriter w(path);
  w.stream().write(buf.data(), static_cast<std::streamsize>(buf.size()));
  w.commit();
}

inline void save_features_csv(const std::filesystem::path& path, const FeatureMatrix& m) {
  m.validate();
  detail::AtomicFileWriter w(path);
  w.stream() << "dim=" << m.dim << "\n";
  w.stream().precision(9);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.dim; ++c) {
      if (c) w.stream() << ",";
      w.stream() << m.at(r, c);
    }
    w.stream() << "\n";
  }
  w.commit();
}

namespace detail {

inline FeatureMatrix load_features_binary(const std::vector<std::uint8_t>& bytes,
                                          const std::string& origin) {
  if (bytes.size() < 24) throw FormatError("feature file truncated: " + origin);
  const std::uint32_t version = get_le<std::uint32_t>(bytes.data() + 4);
  if (version != kFeatVersion) throw FormatError("unsupported feature-file version: " + origin);
  FeatureMatrix m;
  m.rows = get_le<std::uint64_t>(bytes.data() + 8);
  m.dim = get_le<std::uint64_t>(bytes.data() + 16);
  if (m.dim < 1) throw FormatError("feature file with zero dim: " + origin);
  const std::size_t expect = 24 + m.rows * m.dim * 4;
  if (bytes.size() != expect) throw FormatError("feature payload size mismatch: " + origin);
  m.data.resize(m.rows * m.dim);
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    m.data[i] = get_f32_le(bytes.data() + 24 + i * 4);
  }
  return m;
}

inline FeatureMatrix load_features_csv(const std::vector<std::uint8_t>& bytes,
                                       const std::string& origin) {
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty feature file: " + origin);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("dim=", 0) != 0) throw FormatError("feature CSV missing dim= header: " + origin);
  FeatureMatrix m;
  try {
    const long d = std::stol(line.substr(4));
    if (d < 1) throw FormatError("feature CSV with non-positive dim: " + origin);
    m.dim = static_cast<std::size_t>(d);
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception&) {
    throw FormatError("bad dim= header: " + origin);
  }
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::size_t count = 0;
    while (std::getline(row, cell, ',')) {
      try {
        m.data.push_back(std::stof(cell));
      } catch (const std::exception&) {
        throw FormatError("bad feature value '" + cell + "': " + origin);
      }
      ++count;
    }
    if (count != m.dim) throw FormatError("feature CSV row width mismatch: " + origin);
    ++m.rows;
  }
  return m;
}

}  // namespace detail

// Accepts the binary format (sniffed by magic) or the CSV alternative.
inline FeatureMatrix load_external_features(const std::filesystem::path& path,
                                            std::optional<std::size_t> expected_rows = {}) {
  const std::vector<std::uint8_t> bytes = detail::read_file_bytes(path);
  if (bytes.empty()) throw FormatError("empty feature file: " + path.string());
  FeatureMatrix m;
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kFeatMagic.data(), 4) == 0) {
    m = detail::load_features_binary(bytes, path.string());
  } else {
    m = detail::load_features_csv(bytes, path.string());
  }
  m.source_tag = "external";
  m.validate();
  if (expected_rows && m.rows != *expected_rows) {
    throw FormatError("feature row count " + std::to_string(m.rows) + " != expected " +
                      std::to_string(*expected_rows) + ": " + path.string());
  }
  return m;
}

}  // namespace aerialdet
