#include "dwm/simulate.hpp"

#include <stdexcept>

#include "dwm/error.hpp"

namespace dwm {

ClosedLoop::ClosedLoop(const TransitionKernel& kernel, const Policy& policy,
                       const AttackStrategy& attack, std::optional<int> onset,
                       std::uint64_t root_seed, std::uint64_t replicate, int initial_state)
    : kernel_(&kernel),
      plant_(kernel.matrix()),
      controller_(policy.matrix()),
      attacker_(attack.start(Rng(root_seed, replicate, StreamTag::attacker))),
      onset_(onset),
      plant_rng_(root_seed, replicate, StreamTag::plant),
      controller_rng_(root_seed, replicate, StreamTag::controller) {
  if (policy.states() != kernel.states() || policy.actions() != kernel.actions()) {
    throw DimensionError("policy does not match kernel");
  }
  if (initial_state < 0 || initial_state >= kernel.states()) {
    throw std::out_of_range("initial state out of range");
  }
  if (onset && *onset < 0) throw std::invalid_argument("attack onset must be >= 0");
  state_ = initial_state;
  observe_and_act(std::nullopt);
}

void ClosedLoop::observe_and_act(std::optional<int> previous) {
  if (!onset_ || t_ < *onset_) {
    observation_ = state_;
  } else if (t_ == *onset_) {
    observation_ = attacker_.onset(previous, state_);
  } else {
    observation_ = attacker_.next(*previous, state_);
  }
  action_ = controller_.sample(observation_, controller_rng_.uniform());
}

void ClosedLoop::step() {
  const int previous = state_;
  state_ = plant_.sample(pair_index(state_, action_, kernel_->actions()), plant_rng_.uniform());
  ++t_;
  observe_and_act(previous);
}

Trajectory simulate(const TransitionKernel& kernel, const Policy& policy,
                    const AttackStrategy& attack, int horizon, std::optional<int> onset,
                    std::uint64_t root_seed, std::uint64_t replicate, int initial_state) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  Trajectory traj;
  traj.horizon = horizon;
  traj.onset = onset;
  traj.root_seed = root_seed;
  traj.replicate = replicate;
  traj.states.reserve(horizon);
  traj.observations.reserve(horizon);
  traj.actions.reserve(horizon);
  ClosedLoop loop(kernel, policy, attack, onset, root_seed, replicate, initial_state);
  for (int t = 0; t < horizon; ++t) {
    if (t > 0) loop.step();
    traj.states.push_back(loop.state());
    traj.observations.push_back(loop.observation());
    traj.actions.push_back(loop.action());
  }
  return traj;
}

}  // namespace dwm
