#pragma once

// Turning an intensity image back into relay positions: adaptive-threshold
// peak counting, Lloyd coverage of the intensity, redundant relay pruning.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "relaynet/channel.hpp"
#include "relaynet/common.hpp"
#include "relaynet/image.hpp"
#include "relaynet/netgraph.hpp"

namespace relaynet {

struct PeakParams {
  double relative_threshold = 0.25;
  int min_area_px = 3;
  double floor_intensity = 0.05;
};

/// One 8-connected blob of above-threshold pixels.
struct Component {
  std::vector<int> pixels;  // row-major indices
  float peak_value = 0.0f;
  int peak_index = 0;
  double centroid_row = 0.0;  // intensity weighted
  double centroid_col = 0.0;
};

/// Components ordered by descending peak value, ties by row-major position.
inline std::vector<Component> find_components(const IntensityImage& img, const PeakParams& params = {}) {
  std::vector<Component> components;
  const float max_value = img.max_value();
  if (!(max_value >= params.floor_intensity)) return components;
  const auto threshold = static_cast<float>(params.relative_threshold * max_value);
  const int size = img.size();
  std::vector<int> label(img.values.size(), -1);
  std::vector<int> stack;
  for (int start = 0; start < static_cast<int>(img.values.size()); ++start) {
    if (label[start] != -1 || img.values[start] < threshold) continue;
    Component comp;
    label[start] = 0;
    stack.assign(1, start);
    while (!stack.empty()) {
      const int idx = stack.back();
      stack.pop_back();
      comp.pixels.push_back(idx);
      const int r = idx / size;
      const int c = idx % size;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr;
          const int cc = c + dc;
          if (rr < 0 || rr >= size || cc < 0 || cc >= size) continue;
          const int n = rr * size + cc;
          if (label[n] == -1 && img.values[n] >= threshold) {
            label[n] = 0;
            stack.push_back(n);
          }
        }
    }
    if (static_cast<int>(comp.pixels.size()) < params.min_area_px) continue;
    std::sort(comp.pixels.begin(), comp.pixels.end());
    double mass = 0.0;
    comp.peak_index = comp.pixels.front();
    comp.peak_value = img.values[comp.peak_index];
    for (int idx : comp.pixels) {
      const double v = img.values[idx];
      mass += v;
      comp.centroid_row += v * (idx / size);
      comp.centroid_col += v * (idx % size);
      if (img.values[idx] > comp.peak_value) {
        comp.peak_value = img.values[idx];
        comp.peak_index = idx;
      }
    }
    comp.centroid_row /= mass;
    comp.centroid_col /= mass;
    components.push_back(std::move(comp));
  }
  std::stable_sort(components.begin(), components.end(), [](const Component& a, const Component& b) {
    if (a.peak_value != b.peak_value) return a.peak_value > b.peak_value;
    return a.peak_index < b.peak_index;
  });
  return components;
}

inline int count_peaks(const IntensityImage& img, const PeakParams& params = {}) {
  return static_cast<int>(find_components(img, params).size());
}

namespace detail {

struct PixelSite {
  double row;
  double col;
};

// Uniform bucket grid over the image for nearest-site queries. Ties go to
// the lowest site index, matching a brute-force scan.
class SiteIndex {
 public:
  static constexpr int kCell = 8;

  SiteIndex(const std::vector<PixelSite>& sites, int image_size)
      : sites_(sites), cells_((image_size + kCell - 1) / kCell), buckets_(static_cast<std::size_t>(cells_ * cells_)) {
    for (std::size_t s = 0; s < sites.size(); ++s)
      buckets_[static_cast<std::size_t>(cell_of(sites[s].row) * cells_ + cell_of(sites[s].col))].push_back(s);
  }

  std::size_t nearest(double row, double col) const {
    const int cr = cell_of(row);
    const int cc = cell_of(col);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int ring = 0; ring < cells_; ++ring) {
      // Sites in rings beyond `ring` are at least ring * kCell away.
      if (best_d < static_cast<double>(ring - 1) * kCell * (ring - 1) * kCell && ring > 1) break;
      for (int r = cr - ring; r <= cr + ring; ++r) {
        if (r < 0 || r >= cells_) continue;
        const bool edge_row = (r == cr - ring || r == cr + ring);
        for (int c = cc - ring; c <= cc + ring; c += (edge_row ? 1 : 2 * ring)) {
          if (c >= 0 && c < cells_)
            for (std::size_t s : buckets_[static_cast<std::size_t>(r * cells_ + c)]) {
              const double dr = sites_[s].row - row;
              const double dc = sites_[s].col - col;
              const double d = dr * dr + dc * dc;
              if (d < best_d || (d == best_d && s < best)) {
                best_d = d;
                best = s;
              }
            }
          if (ring == 0) break;
        }
      }
    }
    return best;
  }

 private:
  int cell_of(double v) const { return std::clamp(static_cast<int>(std::floor(v / kCell)), 0, cells_ - 1); }

  const std::vector<PixelSite>& sites_;
  int cells_;
  std::vector<std::vector<std::size_t>> buckets_;
};

}  // namespace detail

struct LloydParams {
  double stop_movement_px = 0.5;
  int max_iterations = 50;
};

/// Lloyd's algorithm over the raw intensity, seeded at the k strongest blobs.
/// Returns world coordinates.
inline Points lloyd_extract(const IntensityImage& img, int k, const PeakParams& peaks = {},
                            const LloydParams& lloyd = {}) {
  if (k < 0) throw InvalidArgument("lloyd_extract needs k >= 0");
  if (k == 0) return {};
  const int size = img.size();
  std::vector<int> support;
  for (int i = 0; i < static_cast<int>(img.values.size()); ++i)
    if (img.values[i] > 0.0f) support.push_back(i);
  if (support.empty()) throw InvalidArgument("lloyd_extract needs an image with positive mass");

  using detail::PixelSite;
  std::vector<PixelSite> sites;
  const std::vector<Component> components = find_components(img, peaks);
  for (const auto& comp : components) {
    if (static_cast<int>(sites.size()) == k) break;
    sites.push_back({comp.centroid_row, comp.centroid_col});
  }
  if (sites.empty()) {
    double mass = 0.0;
    PixelSite s{0.0, 0.0};
    for (int idx : support) {
      mass += img.values[idx];
      s.row += img.values[idx] * (idx / size);
      s.col += img.values[idx] * (idx % size);
    }
    sites.push_back({s.row / mass, s.col / mass});
  }
  // Not enough blobs: duplicate seeds with deterministic one-pixel jitter.
  static constexpr int kJitter[4][2] = {{0, 1}, {1, 0}, {0, -1}, {-1, 0}};
  const std::size_t distinct = sites.size();
  for (std::size_t j = distinct; j < static_cast<std::size_t>(k); ++j) {
    const PixelSite& base = sites[j % distinct];
    const std::size_t round = j / distinct;
    const auto& dir = kJitter[(round - 1) % 4];
    const double step = static_cast<double>((round + 3) / 4);
    sites.push_back({base.row + dir[0] * step, base.col + dir[1] * step});
  }

  std::vector<double> sum_row(sites.size());
  std::vector<double> sum_col(sites.size());
  std::vector<double> mass(sites.size());
  for (int iteration = 0; iteration < lloyd.max_iterations; ++iteration) {
    std::fill(sum_row.begin(), sum_row.end(), 0.0);
    std::fill(sum_col.begin(), sum_col.end(), 0.0);
    std::fill(mass.begin(), mass.end(), 0.0);
    const detail::SiteIndex index(sites, size);
    for (int idx : support) {
      const double r = idx / size;
      const double c = idx % size;
      const std::size_t nearest = index.nearest(r, c);
      const double v = img.values[idx];
      sum_row[nearest] += v * r;
      sum_col[nearest] += v * c;
      mass[nearest] += v;
    }
    double movement = 0.0;
    for (std::size_t s = 0; s < sites.size(); ++s) {
      if (!(mass[s] > 0.0)) continue;
      const PixelSite next{sum_row[s] / mass[s], sum_col[s] / mass[s]};
      movement = std::max(movement, std::hypot(next.row - sites[s].row, next.col - sites[s].col));
      sites[s] = next;
    }
    if (movement < lloyd.stop_movement_px) break;
  }

  Points out;
  out.reserve(sites.size());
  for (const auto& s : sites) out.push_back(pixel_to_world(s.row, s.col, img.grid));
  return out;
}

/// Above this many relays the lambda2-greedy rule is replaced by a single
/// connectivity sweep (one eigensolve per candidate per round is too slow).
inline constexpr std::size_t kGreedyPruneLimit = 32;

/// Greedy elimination of relays that the team can do without. Each round
/// drops the removable relay whose absence leaves the largest lambda2 (ties
/// to the lowest index). The result is minimal: removing any one remaining
/// relay disconnects the team.
inline Points prune_redundant(const Points& task_positions, const Points& comm_positions,
                              const ChannelCurve& curve) {
  TeamConfig team{task_positions, comm_positions};
  if (!is_connected(team.nodes(), curve))
    throw PreconditionViolation("prune_redundant requires a connected team");
  auto without = [&](const Points& relays, std::size_t skip) {
    Points nodes = task_positions;
    for (std::size_t j = 0; j < relays.size(); ++j)
      if (j != skip) nodes.push_back(relays[j]);
    return nodes;
  };

  Points kept = comm_positions;
  if (kept.size() > kGreedyPruneLimit) {
    // Last-to-first sweeps (later relays come from weaker peaks) until a pass
    // removes nothing. One pass is not enough: a relay holding on a dangling
    // group of relays becomes removable once that group is gone.
    for (bool removed = true; removed;) {
      removed = false;
      for (std::size_t i = kept.size(); i-- > 0;)
        if (is_connected(without(kept, i), curve)) {
          kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(i));
          removed = true;
        }
    }
    return kept;
  }
  while (!kept.empty()) {
    std::optional<std::size_t> best_index;
    double best_lambda2 = -1.0;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      const RateGraph g = adjacency(without(kept, i), curve);
      if (!is_connected(g)) continue;
      const double l2 = algebraic_connectivity(g);
      if (l2 > best_lambda2) {
        best_lambda2 = l2;
        best_index = i;
      }
    }
    if (!best_index) break;
    kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(*best_index));
  }
  return kept;
}

struct ExtractionResult {
  Points comm_positions;
  std::optional<double> power_dbm;
};

/// Image -> relays: count peaks, place that many Lloyd sites, find the power
/// that connects the team, prune at that power, then re-derive the power.
inline ExtractionResult extract_config(const IntensityImage& img, const Points& task_positions,
                                       const ChannelParams& params, double p_max_dbm,
                                       const PeakParams& peaks = {}, const LloydParams& lloyd = {}) {
  const IntensityImage density = img.clamped();
  const int k = count_peaks(density, peaks);
  Points sites = k > 0 ? lloyd_extract(density, k, peaks, lloyd) : Points{};

  auto team_nodes = [&](const Points& relays) {
    Points all = task_positions;
    all.insert(all.end(), relays.begin(), relays.end());
    return all;
  };
  const auto power = min_connecting_power(team_nodes(sites), params, p_max_dbm);
  if (!power) return {std::move(sites), std::nullopt};

  const ChannelCurve curve = derive_curve(params.with_power(*power));
  Points pruned = prune_redundant(task_positions, sites, curve);
  const auto pruned_power = min_connecting_power(team_nodes(pruned), params, p_max_dbm);
  double final_power = *power;
  if (pruned_power && *pruned_power < final_power) final_power = *pruned_power;
  return {std::move(pruned), final_power};
}

}  // namespace relaynet
