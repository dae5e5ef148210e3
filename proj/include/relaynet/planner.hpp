#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "relaynet/channel.hpp"
#include "relaynet/cnn.hpp"
#include "relaynet/expert.hpp"
#include "relaynet/extraction.hpp"
#include "relaynet/image.hpp"
#include "relaynet/netgraph.hpp"

namespace relaynet {

struct PlanResult {
  Points comm_positions;
  std::optional<double> power_dbm;  // empty when unconnectable at p_max
};

/// render -> forward -> extract. The network output is clamped to [0, 1]
/// before extraction.
inline PlanResult plan_inference(const Points& task_positions, const cnn::ModelWeights& weights,
                                 const GridSpec& grid, const ChannelParams& params, double p_max_dbm) {
  const IntensityImage input = render(task_positions, grid);
  const IntensityImage output = cnn::forward(input, weights);
  ExtractionResult extracted = extract_config(output.clamped(), task_positions, params, p_max_dbm);
  return {std::move(extracted.comm_positions), extracted.power_dbm};
}

struct ExpertPlanner {
  ExpertParams params;
};

struct CnnPlanner {
  std::shared_ptr<const cnn::ModelWeights> weights;
  std::string source;  // weight-file path, for reports
};

using PlannerKind = std::variant<ExpertPlanner, CnnPlanner>;

inline std::string planner_name(const PlannerKind& planner) {
  return std::holds_alternative<ExpertPlanner>(planner) ? "expert" : "cnn";
}

inline PlannerKind make_cnn_planner(const std::filesystem::path& weight_file) {
  auto weights = std::make_shared<const cnn::ModelWeights>(cnn::load_weights_file(weight_file));
  return CnnPlanner{std::move(weights), weight_file.string()};
}

struct PlanContext {
  ChannelParams channel;
  GridSpec grid;
  double p_max_dbm = 30.0;
};

/// Runs either planner on a task team. The expert's result is reported at the
/// least power connecting it (the default power whenever it converges).
inline PlanResult plan(const PlannerKind& planner, const Points& task_positions, const PlanContext& ctx) {
  if (const auto* expert = std::get_if<ExpertPlanner>(&planner)) {
    const ChannelCurve curve = derive_curve(ctx.channel);
    ExpertSolution solution = optimize(task_positions, curve, expert->params);
    Points nodes = task_positions;
    nodes.insert(nodes.end(), solution.comm_positions.begin(), solution.comm_positions.end());
    return {std::move(solution.comm_positions), min_connecting_power(nodes, ctx.channel, ctx.p_max_dbm)};
  }
  const auto& cnn_planner = std::get<CnnPlanner>(planner);
  if (!cnn_planner.weights) throw InvalidArgument("cnn planner has no weights loaded");
  return plan_inference(task_positions, *cnn_planner.weights, ctx.grid, ctx.channel, ctx.p_max_dbm);
}

}  // namespace relaynet
