#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "relaynet/expert.hpp"
#include "relaynet/extraction.hpp"
#include "relaynet/image.hpp"
#include "relaynet/png_io.hpp"

using namespace relaynet;

namespace {

const ChannelCurve& default_curve() {
  static const ChannelCurve curve = derive_curve(ChannelParams{});
  return curve;
}

int argmax(const IntensityImage& img) {
  return static_cast<int>(std::max_element(img.values.begin(), img.values.end()) - img.values.begin());
}

// Nearest recovered point for each truth point; returns the worst distance.
double worst_match(const Points& truth, const Points& found) {
  double worst = 0.0;
  for (const auto& t : truth) {
    double best = 1e300;
    for (const auto& f : found) best = std::min(best, (t - f).norm());
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace

TEST(GridSpec, CenterConvention) {
  const GridSpec g;
  const PixelCoord origin = world_to_pixel({0.0, 0.0}, g);
  EXPECT_DOUBLE_EQ(origin.row, 127.5);
  EXPECT_DOUBLE_EQ(origin.col, 127.5);
  const PixelCoord east = world_to_pixel({1.25, 0.0}, g);
  EXPECT_DOUBLE_EQ(east.col, 128.5);
  EXPECT_DOUBLE_EQ(east.row, 127.5);
  EXPECT_DOUBLE_EQ(g.extent_m(), 320.0);
}

TEST(GridSpec, RoundTripProperty) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-200.0, 200.0);
  for (const GridSpec g : {GridSpec{}, GridSpec{320, 0.9}}) {
    for (int i = 0; i < 1000; ++i) {
      const Point p(u(rng), u(rng));
      const PixelCoord pc = world_to_pixel(p, g);
      EXPECT_LT((pixel_to_world(pc.row, pc.col, g) - p).norm(), 1e-9);
    }
  }
}

TEST(GridSpec, AdmissibleResolutions) {
  EXPECT_TRUE(is_admissible_resolution(256));
  EXPECT_TRUE(is_admissible_resolution(320));
  EXPECT_FALSE(is_admissible_resolution(300));
  EXPECT_FALSE(is_admissible_resolution(192));
}

TEST(Render, SingleAgentPeaksAtCenter) {
  const IntensityImage img = render({{0.0, 0.0}}, GridSpec{});
  const int idx = argmax(img);
  const int row = idx / 256;
  const int col = idx % 256;
  EXPECT_TRUE(row == 127 || row == 128);
  EXPECT_TRUE(col == 127 || col == 128);
  EXPECT_FLOAT_EQ(img.max_value(), 1.0f);
  // The four pixels around the half-integer center are equally bright.
  EXPECT_FLOAT_EQ(img.at(127, 127), img.at(128, 128));
  EXPECT_FLOAT_EQ(img.at(127, 128), img.at(128, 127));
}

TEST(Render, MatchesDirectGaussian) {
  const GridSpec g;
  const Point p(7.3, -11.9);
  const IntensityImage img = render({p}, g);
  const PixelCoord pc = world_to_pixel(p, g);
  const int r0 = static_cast<int>(std::lround(pc.row));
  const int c0 = static_cast<int>(std::lround(pc.col));
  const double peak = std::exp(-(std::pow(r0 - pc.row, 2) + std::pow(c0 - pc.col, 2)) / 8.0);
  for (int dr = -6; dr <= 6; ++dr)
    for (int dc = -6; dc <= 6; ++dc) {
      const double expected =
          std::exp(-(std::pow(r0 + dr - pc.row, 2) + std::pow(c0 + dc - pc.col, 2)) / 8.0) / peak;
      EXPECT_NEAR(img.at(r0 + dr, c0 + dc), expected, 1e-6);
    }
  EXPECT_EQ(img.at(r0 + 7, c0), 0.0f);
}

TEST(Render, DuplicateAgentIsIdempotent) {
  const Point p(3.1, 4.2);
  EXPECT_EQ(render({p, p}, GridSpec{}), render({p}, GridSpec{}));
}

TEST(Render, OutOfBoundsNamesAgent) {
  try {
    render({{0.0, 0.0}, {1e6, 0.0}}, GridSpec{});
    FAIL() << "expected OutOfBounds";
  } catch (const OutOfBounds& e) {
    EXPECT_NE(std::string(e.what()).find("agent 1"), std::string::npos);
  }
}

TEST(Render, ValuesInUnitInterval) {
  std::mt19937_64 rng(2);
  const IntensityImage img = render(oracle::random_points(rng, 30, 150.0), GridSpec{});
  for (float v : img.values) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(CountPeaks, Basics) {
  const GridSpec g;
  EXPECT_EQ(count_peaks(render({{0.0, 0.0}, {25.0, 0.0}, {0.0, 30.0}}, g)), 3);
  EXPECT_EQ(count_peaks(IntensityImage(g)), 0);
  EXPECT_EQ(count_peaks(render({{0.0, 0.0}, {1.25, 0.0}}, g)), 1);
}

TEST(CountPeaks, SeparatedAgentsCountedExactlyProperty) {
  std::mt19937_64 rng(3);
  const GridSpec g;
  for (int trial = 0; trial < 50; ++trial) {
    Points pts;
    std::uniform_real_distribution<double> u(-140.0, 140.0);
    while (pts.size() < 8) {
      const Point p(u(rng), u(rng));
      bool ok = true;
      for (const auto& q : pts) ok = ok && (p - q).norm() >= 10.0;  // 8 px
      if (ok) pts.push_back(p);
    }
    EXPECT_EQ(count_peaks(render(pts, g)), 8);
  }
}

TEST(CountPeaks, BelowFloorIsEmpty) {
  IntensityImage img = render({{0.0, 0.0}}, GridSpec{});
  for (auto& v : img.values) v *= 0.04f;
  EXPECT_EQ(count_peaks(img), 0);
}

TEST(Lloyd, SingleBlobRecoversPosition) {
  const Point p(12.7, -33.1);
  const Points sites = lloyd_extract(render({p}, GridSpec{}), 1);
  ASSERT_EQ(sites.size(), 1u);
  EXPECT_LT((sites[0] - p).norm(), 1.25);
  EXPECT_TRUE(lloyd_extract(render({p}, GridSpec{}), 0).empty());
}

TEST(Lloyd, TwoBlobs) {
  const Points truth = {{-20.0, 5.0}, {22.5, -8.0}};
  const Points sites = lloyd_extract(render(truth, GridSpec{}), 2);
  ASSERT_EQ(sites.size(), 2u);
  EXPECT_LT(worst_match(truth, sites), 1.25);
}

TEST(Lloyd, MoreSitesThanBlobsStaysFinite) {
  const Points sites = lloyd_extract(render({{0.0, 0.0}}, GridSpec{}), 3);
  ASSERT_EQ(sites.size(), 3u);
  for (const auto& s : sites) EXPECT_LT(s.norm(), 10.0);
}

TEST(Lloyd, BucketIndexAgreesWithBruteForce) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  std::vector<detail::PixelSite> sites;
  for (int i = 0; i < 40; ++i) sites.push_back({u(rng), u(rng)});
  sites.push_back(sites[3]);  // exact duplicate: the lower index must win
  const detail::SiteIndex index(sites, 256);
  for (int q = 0; q < 5000; ++q) {
    const double r = std::floor(u(rng));
    const double c = std::floor(u(rng));
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t s = 0; s < sites.size(); ++s) {
      const double d = std::pow(sites[s].row - r, 2) + std::pow(sites[s].col - c, 2);
      if (d < best_d) {
        best_d = d;
        best = s;
      }
    }
    EXPECT_EQ(index.nearest(r, c), best);
  }
}

TEST(Prune, CoincidentRelaysLoseOne) {
  const auto& c = default_curve();
  const Points tasks = {{-23.0, 0.0}, {23.0, 0.0}};
  const Points kept = prune_redundant(tasks, {{0.0, 0.0}, {0.0, 0.0}}, c);
  EXPECT_EQ(kept.size(), 1u);
}

TEST(Prune, CutVertexChainUnchanged) {
  const auto& c = default_curve();
  const Points tasks = {{0.0, 0.0}, {100.0, 0.0}};
  const Points relays = {{25.0, 0.0}, {50.0, 0.0}, {75.0, 0.0}};
  EXPECT_EQ(prune_redundant(tasks, relays, c), relays);
}

TEST(Prune, SpuriousRelayMatchesExhaustiveSearch) {
  const auto& c = default_curve();
  oracle::Channel ch;
  const oracle::Knots k = oracle::knots(ch);
  const Points tasks = {{0.0, 0.0}, {80.0, 0.0}};
  const Points relays = {{20.0, 0.0}, {40.0, 0.0}, {60.0, 0.0}, {40.0, 15.0}};
  const Points kept = prune_redundant(tasks, relays, c);
  EXPECT_EQ(static_cast<int>(kept.size()), oracle::minimal_relay_subset(tasks, relays, ch, k));
}

TEST(Prune, ResultIsMinimalProperty) {
  const auto& c = default_curve();
  std::mt19937_64 rng(6);
  int checked = 0;
  while (checked < 40) {
    const Points tasks = oracle::random_points(rng, 3, 30.0);
    const Points relays = oracle::random_points(rng, 5, 30.0);
    if (!is_connected(TeamConfig{tasks, relays}.nodes(), c)) continue;
    ++checked;
    const Points kept = prune_redundant(tasks, relays, c);
    EXPECT_TRUE(is_connected(TeamConfig{tasks, kept}.nodes(), c));
    for (std::size_t i = 0; i < kept.size(); ++i) {
      Points fewer = kept;
      fewer.erase(fewer.begin() + static_cast<std::ptrdiff_t>(i));
      EXPECT_FALSE(is_connected(TeamConfig{tasks, fewer}.nodes(), c));
    }
  }
}

TEST(Prune, LargeInputUsesSweepAndStaysMinimal) {
  const auto& c = default_curve();
  std::mt19937_64 rng(7);
  const Points tasks = {{-40.0, 0.0}, {40.0, 0.0}};
  const Points relays = oracle::random_points(rng, 60, 40.0);
  ASSERT_TRUE(is_connected(TeamConfig{tasks, relays}.nodes(), c));
  const Points kept = prune_redundant(tasks, relays, c);
  EXPECT_TRUE(is_connected(TeamConfig{tasks, kept}.nodes(), c));
  for (std::size_t i = 0; i < kept.size(); ++i) {
    Points fewer = kept;
    fewer.erase(fewer.begin() + static_cast<std::ptrdiff_t>(i));
    EXPECT_FALSE(is_connected(TeamConfig{tasks, fewer}.nodes(), c));
  }
}

TEST(Prune, RequiresConnectedInput) {
  EXPECT_THROW(prune_redundant({{0.0, 0.0}, {500.0, 0.0}}, {}, default_curve()), PreconditionViolation);
}

TEST(ExtractConfig, RoundTripOfExpertSolution) {
  const auto& c = default_curve();
  const Points tasks = {{-40.0, -10.0}, {35.0, 20.0}, {0.0, 45.0}};
  const ExpertSolution sol = optimize(tasks, c);
  ASSERT_FALSE(sol.comm_positions.empty());
  const ExtractionResult out = extract_config(render(sol.comm_positions, GridSpec{}), tasks, ChannelParams{}, 30.0);
  ASSERT_TRUE(out.power_dbm);
  EXPECT_EQ(*out.power_dbm, 0.0);
  EXPECT_EQ(out.comm_positions.size(), sol.comm_positions.size());
  EXPECT_LT(worst_match(sol.comm_positions, out.comm_positions), 1.25);
}

TEST(ExtractConfig, BlankImage) {
  const auto& c = default_curve();
  const IntensityImage blank{GridSpec{}};
  const ExtractionResult near = extract_config(blank, {{0.0, 0.0}, {10.0, 0.0}}, ChannelParams{}, 30.0);
  EXPECT_TRUE(near.comm_positions.empty());
  ASSERT_TRUE(near.power_dbm);
  EXPECT_EQ(*near.power_dbm, 0.0);
  const ExtractionResult far =
      extract_config(blank, {{0.0, 0.0}, {3.0 * c.cutoff_distance_m, 0.0}}, ChannelParams{}, 5.0);
  EXPECT_TRUE(far.comm_positions.empty());
  EXPECT_FALSE(far.power_dbm);
}

TEST(Png, RoundTripWithinQuantization) {
  std::mt19937_64 rng(8);
  const IntensityImage img = render(oracle::random_points(rng, 6, 100.0), GridSpec{});
  const auto path = std::filesystem::temp_directory_path() / "relaynet_png_roundtrip.png";
  write_png(path, img);
  const IntensityImage back = read_png(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.grid, img.grid);
  for (std::size_t i = 0; i < img.values.size(); ++i) EXPECT_NEAR(back.values[i], img.values[i], 0.5f / 255.0f + 1e-6f);
  EXPECT_EQ(back, quantize_8bit(img));
}

TEST(Png, MissingFileThrows) { EXPECT_THROW(read_png("/nonexistent/relaynet.png"), Error); }
