// relaynet: command-line front end for dataset generation, planning,
// scenario sweeps, statistics, timing and patrol simulation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "relaynet/relaynet.hpp"

namespace {

using namespace relaynet;

// CSV with an optional header line; the first two numeric columns are x, y.
Points read_tasks_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  Points pts;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double x = 0.0;
    double y = 0.0;
    if (!(row >> x >> y)) {
      if (pts.empty()) continue;  // header
      throw FormatError("bad task row in " + path + ": " + line);
    }
    pts.emplace_back(x, y);
  }
  return pts;
}

// "3..20", "3..20:2" or "6,12".
std::vector<int> parse_sizes(const std::string& text) {
  std::vector<int> sizes;
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const int lo = std::stoi(text.substr(0, dots));
    int step = 1;
    std::string rest = text.substr(dots + 2);
    if (const auto colon = rest.find(':'); colon != std::string::npos) {
      step = std::stoi(rest.substr(colon + 1));
      rest = rest.substr(0, colon);
    }
    const int hi = std::stoi(rest);
    if (step <= 0) throw InvalidArgument("size step must be positive");
    for (int n = lo; n <= hi; n += step) sizes.push_back(n);
  } else {
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) sizes.push_back(std::stoi(item));
  }
  return sizes;
}

std::vector<double> linspace(double lo, double hi, double step) {
  if (!(step > 0.0)) throw InvalidArgument("step must be positive");
  std::vector<double> xs;
  for (int i = 0; lo + i * step <= hi + 1e-9; ++i) xs.push_back(lo + i * step);
  return xs;
}

struct PlannerArgs {
  std::string kind = "expert";
  std::string weights;

  void attach(CLI::App* cmd) {
    cmd->add_option("--planner", kind, "expert or cnn")->check(CLI::IsMember({"expert", "cnn"}));
    cmd->add_option("--weights", weights, "CAEW weight file (cnn planner)");
  }

  PlannerKind make() const {
    if (kind == "expert") return ExpertPlanner{};
    if (weights.empty()) throw InvalidArgument("--planner cnn needs --weights FILE");
    return make_cnn_planner(weights);
  }
};

// Writes to a file, or stdout for "-".
template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  fn(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relay placement for connected multi-agent teams"};
  app.require_subcommand(1);

  PlanContext ctx;
  app.add_option("--p-max", ctx.p_max_dbm, "power ceiling for connectivity search, dBm");

  // generate-dataset
  DatasetConfig dcfg;
  std::string dataset_out;
  auto* gen = app.add_subcommand("generate-dataset", "expert-labelled image pairs + manifest.jsonl");
  gen->add_option("--count", dcfg.count)->required();
  gen->add_option("--agents-min", dcfg.agents_min);
  gen->add_option("--agents-max", dcfg.agents_max);
  gen->add_option("--seed", dcfg.base_seed);
  gen->add_option("--out", dataset_out, "output directory")->required();
  gen->add_option("--threads", dcfg.threads, "0 = all cores");

  // plan
  PlannerArgs plan_args;
  std::string tasks_csv;
  std::string plan_out = "-";
  auto* plan_cmd = app.add_subcommand("plan", "relay positions for one task team");
  plan_args.attach(plan_cmd);
  plan_cmd->add_option("--tasks", tasks_csv, "CSV of task positions (x,y)")->required();
  plan_cmd->add_option("--out", plan_out);

  // scenario
  PlannerArgs scen_args;
  std::string scen_kind;
  double scen_min = 10.0;
  double scen_max = 120.0;
  double scen_step = 10.0;
  int scen_tasks = 4;
  std::string scen_out = "-";
  auto* scen = app.add_subcommand("scenario", "line or circle sweep");
  scen->add_option("kind", scen_kind)->required()->check(CLI::IsMember({"line", "circle"}));
  scen_args.attach(scen);
  scen->add_option("--from", scen_min, "first separation / radius, m");
  scen->add_option("--to", scen_max, "last separation / radius, m");
  scen->add_option("--step", scen_step, "m");
  scen->add_option("--tasks", scen_tasks, "task count (circle)");
  scen->add_option("--out", scen_out);

  // eval-stats
  PlannerArgs eval_args;
  std::string eval_dataset;
  std::string eval_out = "-";
  auto* eval = app.add_subcommand("eval-stats", "power and relay-count histograms over a dataset");
  eval->add_option("--dataset", eval_dataset)->required();
  eval_args.attach(eval);
  eval->add_option("--out", eval_out);

  // bench
  std::string bench_sizes = "3..20";
  std::string bench_weights;
  BenchmarkOptions bench_opts;
  std::string bench_out = "-";
  std::vector<std::string> bench_planners = {"expert", "cnn"};
  auto* bench = app.add_subcommand("bench", "planner wall time versus team size");
  bench->add_option("--sizes", bench_sizes, "e.g. 3..20, 3..20:3 or 6,12");
  bench->add_option("--trials", bench_opts.trials);
  bench->add_option("--seed", bench_opts.seed);
  bench->add_option("--planners", bench_planners)->check(CLI::IsMember({"expert", "cnn"}));
  bench->add_option("--weights", bench_weights, "CAEW file; random weights when omitted");
  bench->add_option("--out", bench_out);

  // simulate
  PlannerArgs sim_args;
  PatrolParams patrol;
  std::string sim_out = "-";
  auto* sim = app.add_subcommand("simulate", "patrol with replanning at a fixed controller rate");
  sim_args.attach(sim);
  sim->add_option("--power-dbm", patrol.transmit_power_dbm);
  sim->add_option("--duration", patrol.duration_s, "s");
  sim->add_option("--tasks", patrol.n_tasks);
  sim->add_option("--task-speed", patrol.task_speed_mps, "m/s");
  sim->add_option("--relay-speed", patrol.relay_speed_mps, "m/s");
  sim->add_option("--period", patrol.controller_period_s, "s");
  sim->add_option("--out", sim_out);

  // init-weights
  std::uint64_t init_seed = 0;
  std::string init_out;
  bool init_zero = false;
  auto* init = app.add_subcommand("init-weights", "write an untrained weight file");
  init->add_option("--seed", init_seed);
  init->add_flag("--zero", init_zero, "all-zero weights");
  init->add_option("--out", init_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      dcfg.out_dir = dataset_out;
      const DatasetResult result = generate_dataset(dcfg, [](int done, int total) {
        if (done % 50 == 0 || done == total) std::fprintf(stderr, "\r%d/%d", done, total);
        if (done == total) std::fputc('\n', stderr);
      });
      std::fprintf(stderr, "%zu samples, %d reseeded\n", result.samples.size(), result.reseeded);
    } else if (*plan_cmd) {
      const PlanResult result = plan(plan_args.make(), read_tasks_csv(tasks_csv), ctx);
      with_output(plan_out, [&](std::ostream& out) {
        out << "x,y\n" << std::setprecision(10);
        for (const auto& p : result.comm_positions) out << p.x() << ',' << p.y() << '\n';
      });
      if (result.power_dbm)
        std::fprintf(stderr, "%zu relays, power %.3f dBm\n", result.comm_positions.size(), *result.power_dbm);
      else
        std::fprintf(stderr, "%zu relays, not connectable below %.1f dBm\n", result.comm_positions.size(),
                     ctx.p_max_dbm);
    } else if (*scen) {
      const PlannerKind planner = scen_args.make();
      const auto params = linspace(scen_min, scen_max, scen_step);
      const auto rows = scen_kind == "line" ? run_line_scenario(params, planner, ctx)
                                            : run_circle_scenario(params, scen_tasks, planner, ctx);
      with_output(scen_out, [&](std::ostream& out) { write_scenario_csv(out, rows); });
    } else if (*eval) {
      const auto samples = read_manifest(eval_dataset);
      const EvalStatistics stats = eval_statistics(samples, eval_args.make(), ctx);
      with_output(eval_out, [&](std::ostream& out) { write_statistics_csv(out, stats); });
    } else if (*bench) {
      std::vector<PlannerKind> planners;
      for (const auto& name : bench_planners) {
        if (name == "expert") {
          planners.emplace_back(ExpertPlanner{});
        } else if (bench_weights.empty()) {
          planners.emplace_back(CnnPlanner{std::make_shared<const cnn::ModelWeights>(cnn::random_weights(0)), "random"});
        } else {
          planners.push_back(make_cnn_planner(bench_weights));
        }
      }
      const auto rows = bench_timing(parse_sizes(bench_sizes), planners, ctx, bench_opts);
      with_output(bench_out, [&](std::ostream& out) { write_timing_csv(out, rows); });
    } else if (*sim) {
      const PatrolLog log = simulate_patrol(patrol, sim_args.make(), ctx);
      with_output(sim_out, [&](std::ostream& out) { write_patrol_csv(out, log); });
      std::fprintf(stderr, "scale %.5f, connected on %.1f%% of %zu ticks\n", log.scale,
                   100.0 * log.connected_fraction(), log.ticks.size());
    } else if (*init) {
      cnn::save_weights_file(init_out, init_zero ? cnn::zero_weights() : cnn::random_weights(init_seed));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
