#include "dwm/sensornet.hpp"

#include <stdexcept>

namespace dwm::sensornet {

void PowerModelParams::validate() const {
  if (n_queue < 1) throw std::invalid_argument("n_queue must be >= 1");
  if (!(0.0 < p0 && p0 < p1 && p1 < 1.0)) throw std::invalid_argument("need 0 < p0 < p1 < 1");
  if (!(p_scene >= 0.0 && p_scene <= 1.0)) throw std::invalid_argument("p_scene must lie in [0, 1]");
  if (!(r_trans >= 0.0 && r_trans <= 1.0)) throw std::invalid_argument("r_trans must lie in [0, 1]");
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be > 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
}

Model build_model(const PowerModelParams& params, BuildOptions options) {
  if (options.validate) params.validate();
  const int nq = params.n_queue;
  const int n = state_count(nq);
  Matrix rows = Matrix::Zero(2 * n, n);
  Matrix costs(n, 2);
  for (int x = 0; x < n; ++x) {
    const CompositeState cur = decode(x, nq);
    for (int a = 0; a < 2; ++a) {
      const double p_active = a == 1 ? params.p1 : params.p0;
      costs(x, a) = cur.q - params.rho * (params.p0 + (params.p1 - params.p0) * a);
      // Queue after departure, with its probability.
      const double depart = cur.q > 0 ? params.r_trans : 0.0;
      const std::pair<int, double> after[2] = {{cur.q, 1.0 - depart}, {cur.q - 1, depart}};
      for (const auto& [q_mid, w] : after) {
        if (w == 0.0) continue;
        const int q_next = std::min(nq, q_mid + cur.s);
        rows(pair_index(x, a, 2), encode({0, q_next}, nq)) += w * (1.0 - p_active);
        rows(pair_index(x, a, 2), encode({1, q_next}, nq)) += w * p_active;
      }
    }
  }
  return Model{params, TransitionKernel(n, 2, std::move(rows)), CostFunction(std::move(costs))};
}

TransitionKernel node_kernel(const PowerModelParams& params) {
  Matrix rows(4, 2);
  for (int s = 0; s < 2; ++s) {
    rows.row(pair_index(s, 0, 2)) << 1.0 - params.p0, params.p0;
    rows.row(pair_index(s, 1, 2)) << 1.0 - params.p1, params.p1;
  }
  return TransitionKernel(2, 2, std::move(rows));
}

Policy threshold_policy(int threshold, double beta, int n_queue) {
  if (threshold < 0 || threshold > n_queue) throw std::out_of_range("threshold outside [0, n_queue]");
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0, 1]");
  const int n = state_count(n_queue);
  Matrix probs(n, 2);
  for (int x = 0; x < n; ++x) {
    const bool busy_allowed = decode(x, n_queue).q <= threshold;
    probs(x, 1) = busy_allowed ? 1.0 - beta : beta;
    probs(x, 0) = busy_allowed ? beta : 1.0 - beta;
  }
  return Policy(std::move(probs));
}

ThresholdSearch find_optimal_threshold(const PowerModelParams& params, int lo, int hi,
                                       ThresholdObjective objective) {
  return find_optimal_threshold(build_model(params), lo, hi, objective);
}

ThresholdSearch find_optimal_threshold(const Model& model, int lo, int hi,
                                       ThresholdObjective objective) {
  if (lo > hi) throw std::invalid_argument("empty threshold range");
  const PowerModelParams& params = model.params;
  const DiscountFactor alpha(params.alpha);
  const int start = encode({0, 0}, params.n_queue);
  ThresholdSearch search;
  double best_cost = 0.0;
  for (int l = lo; l <= hi; ++l) {
    const Policy policy = threshold_policy(l, 0.0, params.n_queue);
    const Vector eta = discounted_cost(model.kernel, policy, model.cost, alpha);
    double value = eta(start);
    if (objective == ThresholdObjective::stationary) {
      value = stationary_distribution(induced_state_chain(model.kernel, policy)).pi.dot(eta);
    }
    search.table.emplace_back(l, value);
    if (search.best < 0 || value < best_cost) {
      search.best = l;
      best_cost = value;
    }
  }
  return search;
}

Projection node_projection(const Trajectory& trajectory, int n_queue) {
  Projection out;
  out.observations.reserve(trajectory.observations.size());
  for (int y : trajectory.observations) out.observations.push_back(decode(y, n_queue).s);
  out.actions = trajectory.actions;
  return out;
}

}  // namespace dwm::sensornet
