// Two task agents too far apart to talk directly: seed relays along the
// gap, optimize them, then round-trip the result through an image.

#include <cstdio>

#include "relaynet/relaynet.hpp"

int main() {
  using namespace relaynet;
  const ChannelCurve curve = derive_curve(ChannelParams{});
  std::printf("d_t = %.3f m, d_c = %.3f m\n", curve.transition_distance_m, curve.cutoff_distance_m);

  const double half = 0.85 * curve.cutoff_distance_m;
  const Points tasks = {{-half, 0.0}, {half, 0.0}};
  std::printf("direct lambda2 = %.6f\n", algebraic_connectivity(tasks, curve));

  const ExpertSolution sol = optimize(tasks, curve);
  for (const auto& p : sol.comm_positions) std::printf("relay at (%.3f, %.3f)\n", p.x(), p.y());
  std::printf("lambda2 = %.6f after %d iterations\n", sol.lambda2, sol.iterations);

  const GridSpec grid;
  const IntensityImage target = render(sol.comm_positions, grid);
  const ExtractionResult back = extract_config(target, tasks, ChannelParams{}, 30.0);
  std::printf("extracted %zu relay(s), power %.2f dBm\n", back.comm_positions.size(), back.power_dbm.value_or(-1.0));
}
