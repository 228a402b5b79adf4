#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dwm/attack.hpp"
#include "dwm/mdp.hpp"

namespace dwm {

/// One closed-loop run. Time is 0-based: index t holds X_t, Y_t, A_t.
/// Before the onset Y_t = X_t; no onset means no attack.
struct Trajectory {
  int horizon = 0;
  std::optional<int> onset;
  std::vector<int> states;
  std::vector<int> observations;
  std::vector<int> actions;
  std::uint64_t root_seed = 0;
  std::uint64_t replicate = 0;
};

/// Step-at-a-time closed loop: A_t ~ gamma(. | Y_t), X_{t+1} ~ R(. | X_t, A_t),
/// Y_t supplied by the attack from the onset on. The plant, the controller
/// and the attacker draw from three independent streams of the replicate.
class ClosedLoop {
 public:
  ClosedLoop(const TransitionKernel& kernel, const Policy& policy, const AttackStrategy& attack,
             std::optional<int> onset, std::uint64_t root_seed, std::uint64_t replicate,
             int initial_state = 0);

  int time() const { return t_; }
  int state() const { return state_; }
  int observation() const { return observation_; }
  int action() const { return action_; }

  /// Advance to t+1.
  void step();

 private:
  void observe_and_act(std::optional<int> previous);

  const TransitionKernel* kernel_;
  RowSampler plant_;
  RowSampler controller_;
  Attacker attacker_;
  std::optional<int> onset_;
  Rng plant_rng_;
  Rng controller_rng_;
  int t_ = 0;
  int state_ = 0;
  int observation_ = 0;
  int action_ = 0;
};

Trajectory simulate(const TransitionKernel& kernel, const Policy& policy,
                    const AttackStrategy& attack, int horizon, std::optional<int> onset,
                    std::uint64_t root_seed, std::uint64_t replicate = 0, int initial_state = 0);

}  // namespace dwm
