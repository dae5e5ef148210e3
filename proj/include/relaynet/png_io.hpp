#pragma once

// 8-bit grayscale PNG persistence for intensity images (byte = round(255 v)).

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <png.h>

#include "relaynet/image.hpp"

namespace relaynet {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline std::uint8_t to_byte(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(255.0f * c));
}

}  // namespace detail

inline void write_png(const std::filesystem::path& path, const IntensityImage& img) {
  detail::FilePtr file(std::fopen(path.string().c_str(), "wb"));
  if (!file) throw Error("cannot open " + path.string() + " for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng initialization failed");
  }
  const int size = img.size();
  std::vector<std::uint8_t> row(static_cast<std::size_t>(size));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng failed while writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(size), static_cast<png_uint_32>(size), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) row[static_cast<std::size_t>(c)] = detail::to_byte(img.at(r, c));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

/// Loads a square 8-bit grayscale PNG; other layouts are converted by libpng.
inline IntensityImage read_png(const std::filesystem::path& path, double meters_per_pixel = 1.25) {
  detail::FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) throw Error("cannot open " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("libpng initialization failed");
  }
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("libpng failed while reading " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE)
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_read_update_info(png, info);
  if (width != height) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path.string() + " is not square");
  }
  pixels.resize(static_cast<std::size_t>(width) * height);
  rows.resize(height);
  for (png_uint_32 r = 0; r < height; ++r) rows[r] = pixels.data() + static_cast<std::size_t>(r) * width;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  IntensityImage img(GridSpec{static_cast<int>(width), meters_per_pixel});
  for (std::size_t i = 0; i < pixels.size(); ++i) img.values[i] = static_cast<float>(pixels[i]) / 255.0f;
  return img;
}

/// Quantizes to the PNG byte grid without touching disk.
inline IntensityImage quantize_8bit(const IntensityImage& img) {
  IntensityImage out = img;
  for (auto& v : out.values) v = static_cast<float>(detail::to_byte(v)) / 255.0f;
  return out;
}

}  // namespace relaynet
