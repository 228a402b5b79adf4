#pragma once

#include <utility>
#include <vector>

#include "dwm/mdp.hpp"
#include "dwm/simulate.hpp"

namespace dwm::sensornet {

/// Power-managed sensing node with a packet queue.
struct PowerModelParams {
  int n_queue = 20;
  double p0 = 0.2;  ///< activation probability in eco mode (action 0)
  double p1 = 0.8;  ///< activation probability in performance mode (action 1)
  double p_scene = 0.5;
  double r_trans = 0.8;
  double rho = 20.0;
  double alpha = 0.5;

  /// Throws std::invalid_argument unless 0 < p0 < p1 < 1, p_scene and
  /// r_trans lie in [0, 1], n_queue >= 1, rho > 0 and 0 < alpha < 1.
  void validate() const;
};

/// Node state s (0 sleep, 1 active) and queue length q.
struct CompositeState {
  int s = 0;
  int q = 0;
};

inline int encode(CompositeState x, int n_queue) { return x.s * (n_queue + 1) + x.q; }
inline CompositeState decode(int index, int n_queue) {
  return {index / (n_queue + 1), index % (n_queue + 1)};
}
inline int state_count(int n_queue) { return 2 * (n_queue + 1); }

struct BuildOptions {
  bool validate = true;  ///< off only for degenerate parameter studies
};

struct Model {
  PowerModelParams params;
  TransitionKernel kernel;
  CostFunction cost;
};

/// Per step: the next node state is active with probability p_a; one packet
/// departs with probability r_trans when q > 0; then one packet arrives if
/// the node is active now, dropped at capacity. h(x, a) = q - rho (p0 + (p1 - p0) a).
Model build_model(const PowerModelParams& params, BuildOptions options = {});

/// Two-state node kernel sigma: row (s, a) = (1 - p_a, p_a).
TransitionKernel node_kernel(const PowerModelParams& params);

/// Performance mode with probability 1 - beta when q <= l, eco mode with
/// probability 1 - beta otherwise. Ignores the node state.
Policy threshold_policy(int threshold, double beta, int n_queue);

enum class ThresholdObjective {
  initial_state,  ///< eta at (s = 0, q = 0)
  stationary,     ///< pi eta under the policy's own stationary law
};

struct ThresholdSearch {
  int best = -1;
  std::vector<std::pair<int, double>> table;
};

/// Exact discounted cost of every deterministic threshold policy in [lo, hi];
/// ties go to the smaller threshold.
ThresholdSearch find_optimal_threshold(const PowerModelParams& params, int lo, int hi,
                                       ThresholdObjective objective = ThresholdObjective::initial_state);

/// Same search on a prebuilt (possibly unvalidated) model.
ThresholdSearch find_optimal_threshold(const Model& model, int lo, int hi,
                                       ThresholdObjective objective = ThresholdObjective::initial_state);

/// Node-state component of the observations, paired with the actions.
struct Projection {
  std::vector<int> observations;
  std::vector<int> actions;
};

Projection node_projection(const Trajectory& trajectory, int n_queue);

}  // namespace dwm::sensornet
