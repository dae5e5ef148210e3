#pragma once

// Expert-labelled image pairs: random task teams, their optimized relay
// teams, both rendered on the fixed-scale grid, plus a JSON-lines manifest.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "relaynet/channel.hpp"
#include "relaynet/expert.hpp"
#include "relaynet/image.hpp"
#include "relaynet/netgraph.hpp"
#include "relaynet/png_io.hpp"

namespace relaynet {

struct SamplingParams {
  double half_side_fraction = 0.25;  // of the grid extent
  double min_separation_m = 2.5;
  int max_rejections = 1000;
};

/// n tasks i.i.d. uniform on the centered square of half-side extent/4.
/// Teams with a pair closer than the minimum separation are redrawn whole.
inline Points sample_task_config(int n, const GridSpec& grid, std::uint64_t seed, const SamplingParams& sp = {}) {
  if (n < 2) throw InvalidArgument("sample_task_config needs n >= 2");
  std::mt19937_64 rng(seed);
  const double half = sp.half_side_fraction * grid.extent_m();
  std::uniform_real_distribution<double> coord(-half, half);
  for (int attempt = 0; attempt < sp.max_rejections; ++attempt) {
    Points tasks;
    tasks.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const double x = coord(rng);
      const double y = coord(rng);
      tasks.emplace_back(x, y);
    }
    bool ok = true;
    for (std::size_t i = 0; i < tasks.size() && ok; ++i) {
      // MST relays lie on segments between tasks, so checking the tasks
      // covers the whole augmented team.
      if (!inside_render_area(tasks[i], grid)) ok = false;
      for (std::size_t j = i + 1; j < tasks.size() && ok; ++j)
        if ((tasks[i] - tasks[j]).norm() < sp.min_separation_m) ok = false;
    }
    if (ok) return tasks;
  }
  throw SamplingFailure("no admissible task team after " + std::to_string(sp.max_rejections) + " draws");
}

struct DatasetSample {
  std::string id;
  Points task_positions;
  Points expert_comm_positions;
  double transmit_power_dbm = 0.0;
  std::string input_image;   // relative to the dataset directory
  std::string target_image;
  GridSpec grid;
  double lambda2 = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const DatasetSample& o) const {
    return id == o.id && task_positions == o.task_positions && expert_comm_positions == o.expert_comm_positions &&
           transmit_power_dbm == o.transmit_power_dbm && input_image == o.input_image &&
           target_image == o.target_image && grid == o.grid && lambda2 == o.lambda2 && seed == o.seed;
  }
};

struct GeneratedSample {
  DatasetSample record;
  IntensityImage input;
  IntensityImage target;
  int iterations = 0;
};

/// tasks -> input image -> MST seed -> expert -> target image.
inline GeneratedSample generate_sample(int n, std::uint64_t seed, const ChannelParams& channel,
                                       const ExpertParams& expert, const GridSpec& grid,
                                       const SamplingParams& sampling = {}) {
  const ChannelCurve curve = derive_curve(channel);
  GeneratedSample out;
  auto& rec = out.record;
  rec.id = std::to_string(seed);
  rec.seed = seed;
  rec.grid = grid;
  rec.transmit_power_dbm = channel.transmit_power_dbm;
  rec.task_positions = sample_task_config(n, grid, seed, sampling);
  out.input = render(rec.task_positions, grid);
  const ExpertSolution solution = optimize(rec.task_positions, curve, expert);
  rec.expert_comm_positions = solution.comm_positions;
  rec.lambda2 = solution.lambda2;
  out.iterations = solution.iterations;
  out.target = render(rec.expert_comm_positions, grid);
  if (!(rec.lambda2 > kConnectedLambda2)) throw SolverFailure("expert returned a disconnected team");
  return out;
}

// ---------------------------------------------------------------------------
// Manifest

inline nlohmann::json points_to_json(const Points& pts) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : pts) arr.push_back({p.x(), p.y()});
  return arr;
}

inline Points points_from_json(const nlohmann::json& arr) {
  Points pts;
  for (const auto& p : arr) pts.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  return pts;
}

inline nlohmann::json to_json(const DatasetSample& s) {
  return {{"id", s.id},
          {"seed", s.seed},
          {"task_positions", points_to_json(s.task_positions)},
          {"expert_comm_positions", points_to_json(s.expert_comm_positions)},
          {"transmit_power_dbm", s.transmit_power_dbm},
          {"lambda2", s.lambda2},
          {"input_image", s.input_image},
          {"target_image", s.target_image},
          {"meters_per_pixel", s.grid.meters_per_pixel},
          {"resolution_px", s.grid.resolution_px}};
}

inline DatasetSample sample_from_json(const nlohmann::json& j) {
  DatasetSample s;
  s.id = j.at("id").get<std::string>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.task_positions = points_from_json(j.at("task_positions"));
  s.expert_comm_positions = points_from_json(j.at("expert_comm_positions"));
  s.transmit_power_dbm = j.at("transmit_power_dbm").get<double>();
  s.lambda2 = j.at("lambda2").get<double>();
  s.input_image = j.at("input_image").get<std::string>();
  s.target_image = j.at("target_image").get<std::string>();
  s.grid.meters_per_pixel = j.at("meters_per_pixel").get<double>();
  s.grid.resolution_px = j.at("resolution_px").get<int>();
  return s;
}

inline std::string serialize_manifest_line(const DatasetSample& s) { return to_json(s).dump(); }

inline DatasetSample parse_manifest_line(const std::string& line) {
  try {
    return sample_from_json(nlohmann::json::parse(line));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad manifest record: ") + e.what());
  }
}

inline constexpr const char* kManifestName = "manifest.jsonl";

inline std::vector<DatasetSample> read_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / kManifestName);
  if (!in) throw Error("cannot open " + (dir / kManifestName).string());
  std::vector<DatasetSample> samples;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) samples.push_back(parse_manifest_line(line));
  return samples;
}

inline void write_manifest(const std::filesystem::path& dir, const std::vector<DatasetSample>& samples) {
  std::ofstream out(dir / kManifestName);
  if (!out) throw Error("cannot write " + (dir / kManifestName).string());
  for (const auto& s : samples) out << serialize_manifest_line(s) << '\n';
}

// ---------------------------------------------------------------------------
// Whole datasets

struct DatasetConfig {
  int count = 100;
  int agents_min = 2;
  int agents_max = 6;
  std::uint64_t base_seed = 0;
  std::filesystem::path out_dir;  // empty: keep images in memory only
  ChannelParams channel;
  ExpertParams expert;
  GridSpec grid;
  SamplingParams sampling;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct DatasetResult {
  std::vector<DatasetSample> samples;
  std::vector<IntensityImage> targets;  // filled only when out_dir is empty
  int reseeded = 0;
};

inline constexpr int kMaxReseeds = 16;

inline std::string sample_id(int index) {
  std::ostringstream id;
  id << std::setw(6) << std::setfill('0') << index;
  return id.str();
}

/// Sample i uses seed base_seed + i and n = agents_min + i mod (range); a
/// sample whose expert run fails is redrawn from a derived seed.
inline DatasetResult generate_dataset(const DatasetConfig& cfg,
                                      const std::function<void(int done, int total)>& progress = {}) {
  if (cfg.count < 0 || cfg.agents_min < 2 || cfg.agents_max < cfg.agents_min)
    throw InvalidParameter("dataset needs count >= 0 and 2 <= agents_min <= agents_max");
  const bool to_disk = !cfg.out_dir.empty();
  if (to_disk) std::filesystem::create_directories(cfg.out_dir / "images");

  DatasetResult result;
  result.samples.resize(static_cast<std::size_t>(cfg.count));
  if (!to_disk) result.targets.resize(static_cast<std::size_t>(cfg.count));
  std::atomic<int> next{0};
  std::atomic<int> done{0};
  std::atomic<int> reseeded{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&] {
    for (int i = next++; i < cfg.count; i = next++) {
      try {
        const int span = cfg.agents_max - cfg.agents_min + 1;
        const int n = cfg.agents_min + i % span;
        std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(i);
        GeneratedSample gen;
        for (int attempt = 0;; ++attempt) {
          try {
            gen = generate_sample(n, seed, cfg.channel, cfg.expert, cfg.grid, cfg.sampling);
            break;
          } catch (const SolverFailure&) {
          } catch (const OutOfBounds&) {
          }
          if (attempt + 1 >= kMaxReseeds) throw SolverFailure("sample " + std::to_string(i) + " failed repeatedly");
          ++reseeded;
          seed = seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(attempt + 1);
        }
        auto& rec = gen.record;
        rec.id = sample_id(i);
        rec.input_image = "images/" + rec.id + "_input.png";
        rec.target_image = "images/" + rec.id + "_target.png";
        if (to_disk) {
          write_png(cfg.out_dir / rec.input_image, gen.input);
          write_png(cfg.out_dir / rec.target_image, gen.target);
        } else {
          result.targets[static_cast<std::size_t>(i)] = std::move(gen.target);
        }
        result.samples[static_cast<std::size_t>(i)] = std::move(rec);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
      const int d = ++done;
      if (progress) {
        std::lock_guard lock(error_mutex);
        progress(d, cfg.count);
      }
    }
  };

  const unsigned threads = std::max(1u, cfg.threads ? cfg.threads : std::thread::hardware_concurrency());
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);
  result.reseeded = reseeded.load();
  if (to_disk) write_manifest(cfg.out_dir, result.samples);
  return result;
}

}  // namespace relaynet
