#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "relaynet/common.hpp"

namespace relaynet {

/// Square raster with a fixed metric scale; world origin at the image center.
struct GridSpec {
  int resolution_px = 256;
  double meters_per_pixel = 1.25;

  double extent_m() const { return resolution_px * meters_per_pixel; }
  double center_px() const { return 0.5 * (resolution_px - 1); }

  bool operator==(const GridSpec&) const = default;
};

/// Resolutions that pass through the six stride-2 encoder layers and back:
/// (N + 4) * 64 for N >= 0.
inline bool is_admissible_resolution(int resolution) {
  return resolution >= 256 && resolution % 64 == 0;
}

struct PixelCoord {
  double row = 0.0;
  double col = 0.0;
};

inline PixelCoord world_to_pixel(const Point& p, const GridSpec& grid) {
  const double c = grid.center_px();
  return {c + p.y() / grid.meters_per_pixel, c + p.x() / grid.meters_per_pixel};
}

inline Point pixel_to_world(double row, double col, const GridSpec& grid) {
  const double c = grid.center_px();
  return {(col - c) * grid.meters_per_pixel, (row - c) * grid.meters_per_pixel};
}

/// Row-major scalar image.
struct IntensityImage {
  GridSpec grid;
  std::vector<float> values;

  IntensityImage() = default;
  explicit IntensityImage(const GridSpec& g)
      : grid(g), values(static_cast<std::size_t>(g.resolution_px) * g.resolution_px, 0.0f) {}

  int size() const { return grid.resolution_px; }
  float& at(int row, int col) { return values[static_cast<std::size_t>(row) * grid.resolution_px + col]; }
  float at(int row, int col) const { return values[static_cast<std::size_t>(row) * grid.resolution_px + col]; }

  float max_value() const { return values.empty() ? 0.0f : *std::max_element(values.begin(), values.end()); }

  IntensityImage clamped() const {
    IntensityImage out = *this;
    for (auto& v : out.values) v = std::clamp(v, 0.0f, 1.0f);
    return out;
  }

  bool operator==(const IntensityImage&) const = default;
};

struct KernelSpec {
  double sigma_px = 2.0;
  int window_px = 13;
  double margin_px = 4.0;
};

inline bool inside_render_area(const Point& p, const GridSpec& grid, const KernelSpec& kernel = {}) {
  const PixelCoord pc = world_to_pixel(p, grid);
  const double lo = kernel.margin_px;
  const double hi = grid.resolution_px - 1 - kernel.margin_px;
  return pc.row >= lo && pc.row <= hi && pc.col >= lo && pc.col <= hi;
}

/// Stamps one Gaussian per agent and combines by maximum. Each stamp is
/// scaled so its brightest sample is exactly 1.
inline IntensityImage render(const Points& positions, const GridSpec& grid, const KernelSpec& kernel = {}) {
  IntensityImage img(grid);
  const int size = grid.resolution_px;
  const int half = kernel.window_px / 2;
  const double inv_two_var = 1.0 / (2.0 * kernel.sigma_px * kernel.sigma_px);
  for (std::size_t a = 0; a < positions.size(); ++a) {
    const PixelCoord pc = world_to_pixel(positions[a], grid);
    if (!inside_render_area(positions[a], grid, kernel)) {
      std::ostringstream msg;
      msg << "agent " << a << " at (" << positions[a].x() << ", " << positions[a].y()
          << ") m lies outside the renderable area of a " << size << " px grid";
      throw OutOfBounds(msg.str());
    }
    const int r0 = static_cast<int>(std::lround(pc.row));
    const int c0 = static_cast<int>(std::lround(pc.col));
    double peak = 0.0;
    for (int dr = -half; dr <= half; ++dr)
      for (int dc = -half; dc <= half; ++dc) {
        const double rr = r0 + dr - pc.row;
        const double cc = c0 + dc - pc.col;
        peak = std::max(peak, std::exp(-(rr * rr + cc * cc) * inv_two_var));
      }
    for (int dr = -half; dr <= half; ++dr) {
      const int r = r0 + dr;
      if (r < 0 || r >= size) continue;
      for (int dc = -half; dc <= half; ++dc) {
        const int c = c0 + dc;
        if (c < 0 || c >= size) continue;
        const double rr = r - pc.row;
        const double cc = c - pc.col;
        const auto v = static_cast<float>(std::exp(-(rr * rr + cc * cc) * inv_two_var) / peak);
        float& px = img.at(r, c);
        px = std::max(px, v);
      }
    }
  }
  return img;
}

}  // namespace relaynet
