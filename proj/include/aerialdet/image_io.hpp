#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <csetjmp>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <png.h>

#include "aerialdet/errors.hpp"
#include "aerialdet/image.hpp"

namespace aerialdet {

namespace detail {

// Write-to-temp-then-rename so readers never observe a partial file.
class AtomicFileWriter {
 public:
  explicit AtomicFileWriter(const std::filesystem::path& target)
      : target_(target), tmp_(target) {
    tmp_ += ".tmp";
    stream_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!stream_) throw IoError("cannot open for writing: " + tmp_.string());
  }

  ~AtomicFileWriter() {
    if (!committed_) {
      stream_.close();
      std::error_code ec;
      std::filesystem::remove(tmp_, ec);
    }
  }

  std::ofstream& stream() { return stream_; }

  void commit() {
    stream_.flush();
    if (!stream_) throw IoError("write failed: " + tmp_.string());
    stream_.close();
    std::error_code ec;
    std::filesystem::rename(tmp_, target_, ec);
    if (ec) throw IoError("rename failed: " + target_.string() + ": " + ec.message());
    committed_ = true;
  }

 private:
  std::filesystem::path target_;
  std::filesystem::path tmp_;
  std::ofstream stream_;
  bool committed_ = false;
};

inline int pgm_next_token(std::istream& in, std::string& tok) {
  tok.clear();
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  return c;
}

}  // namespace detail

// Binary PGM (P5), maxval up to 255.
inline void write_pgm(const std::filesystem::path& path, const GrayFrame& img) {
  detail::AtomicFileWriter w(path);
  w.stream() << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width));
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const float v = std::clamp(img.at(x, y), 0.0f, 1.0f);
      row[static_cast<std::size_t>(x)] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    w.stream().write(reinterpret_cast<const char*>(row.data()), row.size());
  }
  w.commit();
}

inline GrayFrame read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::string tok;
  detail::pgm_next_token(in, tok);
  if (tok != "P5") throw FormatError("not a binary PGM (P5): " + path.string());
  long w = 0, h = 0, maxval = 0;
  try {
    detail::pgm_next_token(in, tok);
    w = std::stol(tok);
    detail::pgm_next_token(in, tok);
    h = std::stol(tok);
    detail::pgm_next_token(in, tok);
    maxval = std::stol(tok);
  } catch (const std::exception&) {
    throw FormatError("bad PGM header: " + path.string());
  }
  if (w < 1 || h < 1 || maxval < 1 || maxval > 255) {
    throw FormatError("unsupported PGM header: " + path.string());
  }
  GrayFrame img(static_cast<int>(w), static_cast<int>(h));
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw FormatError("truncated PGM payload: " + path.string());
  }
  const float scale = 1.0f / static_cast<float>(maxval);
  for (std::size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] * scale;
  return img;
}

// PNG I/O through libpng. Inputs of any bit depth / color type are coerced to
// 8-bit RGB on read.
inline RgbImage read_png_rgb(const std::filesystem::path& path) {
  std::FILE* fp = std::fopen(path.string().c_str(), "rb");
  if (!fp) throw IoError("cannot open: " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw IoError("libpng init failed");
  }
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw FormatError("bad PNG: " + path.string());
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  if (rowbytes != static_cast<std::size_t>(width) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw FormatError("unexpected PNG row layout: " + path.string());
  }
  pixels.resize(static_cast<std::size_t>(height) * rowbytes);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);

  RgbImage img(static_cast<int>(width), static_cast<int>(height));
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = pixels[i] / 255.0f;
  return img;
}

inline void write_png_rgb(const std::filesystem::path& path, const RgbImage& img) {
  if (img.width < 1 || img.height < 1) throw DimensionError("write_png_rgb: empty image");
  const std::filesystem::path tmp = path.string() + ".tmp";
  std::FILE* fp = std::fopen(tmp.string().c_str(), "wb");
  if (!fp) throw IoError("cannot open for writing: " + tmp.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("libpng init failed");
  }
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(img.width) * img.height * 3);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = static_cast<std::uint8_t>(
        std::lround(std::clamp(img.data[i], 0.0f, 1.0f) * 255.0f));
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw IoError("PNG write failed: " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y) {
    rows[static_cast<std::size_t>(y)] = pixels.data() + static_cast<std::size_t>(y) * img.width * 3;
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw IoError("PNG close failed: " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed: " + path.string() + ": " + ec.message());
}

inline void write_png_gray(const std::filesystem::path& path, const GrayFrame& img) {
  RgbImage rgb(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const float v = img.at(x, y);
      rgb.at(x, y, 0) = v;
      rgb.at(x, y, 1) = v;
      rgb.at(x, y, 2) = v;
    }
  }
  write_png_rgb(path, rgb);
}

inline GrayFrame read_frame(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".pgm") return read_pgm(path);
  if (ext == ".png") return to_grayscale(read_png_rgb(path));
  throw FormatError("unsupported frame format: " + path.string());
}

// Frames of a sequence, sorted lexicographically by filename so zero-padded
// numbering plays back in order.
inline std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".png" || ext == ".pgm") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.filename() < b.filename(); });
  return out;
}

}  // namespace aerialdet
