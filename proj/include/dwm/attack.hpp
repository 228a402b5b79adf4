#pragma once

#include <memory>
#include <optional>
#include <tuple>

#include "dwm/mdp.hpp"
#include "dwm/rng.hpp"

namespace dwm {

/// Two-step-memory attack phi: row (i, i') is the law of the reported
/// observation given (X_t = i, X_{t+1} = i'). Shape (n*n) x n.
class AttackMatrix {
 public:
  AttackMatrix(int states, Matrix rows);

  /// phi((i,i'), l') = 1 iff l' = i'.
  static AttackMatrix truthful(int states);

  int states() const { return states_; }
  const Matrix& matrix() const { return rows_; }
  double operator()(int state, int next, int reported) const {
    return rows_(state * states_ + next, reported);
  }
  auto row(int state, int next) const { return rows_.row(state * states_ + next); }

 private:
  int states_;
  Matrix rows_;
};

enum class AttackKind { null, matrix, predictive_resampling, virtual_system };

/// How the predictive attacker turns the posterior over the hidden action into
/// a point estimate.
enum class PosteriorMode { sample, map };

const char* to_string(AttackKind kind);

class Attacker;

/// Immutable description of a feedback-channel attack. Cheap to copy; start()
/// creates the per-trajectory stateful generator.
class AttackStrategy {
 public:
  AttackKind kind() const { return kind_; }

  /// Matrix form when the attack has two-step memory: null and matrix attacks
  /// trivially, predictive resampling through its posterior mixture
  /// phi((i,i'),.) = sum_j post(j | i,i') R((i,j),.). Virtual system attacks
  /// carry hidden state and have no matrix form.
  std::optional<AttackMatrix> as_matrix(int states) const;

  Attacker start(Rng rng) const;

  struct Data;

 private:
  friend AttackStrategy null_attack();
  friend AttackStrategy matrix_attack(AttackMatrix phi);
  friend AttackStrategy predictive_resampling_attack(const TransitionKernel&, const Policy&,
                                                     PosteriorMode);
  friend AttackStrategy virtual_system_attack(const TransitionKernel&, const Policy&);

  AttackStrategy(AttackKind kind, std::shared_ptr<const Data> data)
      : kind_(kind), data_(std::move(data)) {}

  AttackKind kind_;
  std::shared_ptr<const Data> data_;
};

/// Reports the true state.
AttackStrategy null_attack();

/// Y_{t+1} ~ phi(. | X_t, X_{t+1}).
AttackStrategy matrix_attack(AttackMatrix phi);

/// Infers the controller's action from (X_t, X_{t+1}) through the posterior
/// gamma(X_t, j) R((X_t, j), X_{t+1}), then reports a fresh draw from
/// R(. | X_t, A_hat).
AttackStrategy predictive_resampling_attack(const TransitionKernel& kernel, const Policy& policy,
                                            PosteriorMode mode = PosteriorMode::sample);

/// Runs an independent copy of the closed loop (own action draws from the
/// known policy distribution) started at the true state at onset and reports
/// its states.
AttackStrategy virtual_system_attack(const TransitionKernel& kernel, const Policy& policy);

/// Per-trajectory attack generator. Single-threaded.
class Attacker {
 public:
  /// Observation reported at the onset time. `previous` is the true state one
  /// step earlier, absent when the attack starts at time 0.
  int onset(std::optional<int> previous, int state);

  /// Observation reported at every later step.
  int next(int previous, int state);

 private:
  friend class AttackStrategy;
  Attacker(AttackKind kind, std::shared_ptr<const AttackStrategy::Data> data, Rng rng)
      : kind_(kind), data_(std::move(data)), rng_(rng) {}

  int report_transition(int previous, int state);

  AttackKind kind_;
  std::shared_ptr<const AttackStrategy::Data> data_;
  Rng rng_;
  int virtual_state_ = -1;
};

/// Post-attack (state, action) chain:
/// P((i,j),(i',j')) = R((i,j),i') sum_l' phi((i,i'),l') gamma(l',j').
Matrix joint_chain_postattack(const TransitionKernel& kernel, const Policy& policy,
                              const AttackMatrix& phi);

/// Markov chain over Z = (X, A, Y) under a matrix attack:
/// P(z -> z') = R((x,a),x') phi((x,x'),y') gamma(y',a').
class ExtendedChain {
 public:
  ExtendedChain(const TransitionKernel& kernel, const Policy& policy, const AttackMatrix& phi);

  int states() const { return states_; }
  int actions() const { return actions_; }
  int size() const { return states_ * actions_ * states_; }

  int index(int state, int action, int observation) const {
    return (state * actions_ + action) * states_ + observation;
  }
  std::tuple<int, int, int> decode(int z) const {
    const int observation = z % states_;
    const int pair = z / states_;
    return {pair / actions_, pair % actions_, observation};
  }

  /// Sparse kernel; its nonzero pattern is the support set Omega(gamma, phi).
  const SparseMatrix& kernel() const { return kernel_; }

  /// Rows of the kernel depend on z only through (x, a); this is the
  /// (n*m) x (n*m*n) matrix of those distinct rows.
  const Matrix& pair_rows() const { return pair_rows_; }

  /// Minorization of the extended kernel at `lag`, computed through the
  /// factorization P_ext^lag(z, .) = [P_joint^(lag-1) pair_rows](xa(z), .).
  DoeblinCertificate minorization_at_lag(int lag) const;
  DoeblinCertificate doeblin_certificate(int max_lag) const;

 private:
  int states_;
  int actions_;
  Matrix joint_;
  Matrix pair_rows_;
  SparseMatrix kernel_;
};

}  // namespace dwm
