#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dwm/linalg.hpp"

namespace dwm {

/// Flattened (state, action) index. Rows of kernels and joint chains are laid
/// out state-major: k = state * actions + action.
constexpr int pair_index(int state, int action, int actions) {
  return state * actions + action;
}

/// Inverse of pair_index.
constexpr std::pair<int, int> split_pair_index(int k, int actions) {
  return {k / actions, k % actions};
}

/// Outcome of checking a matrix against the row-stochastic invariants.
struct ValidationReport {
  bool passed = true;
  double max_row_deviation = 0.0;
  int worst_row = -1;
  std::vector<std::pair<int, int>> negative_entries;
  std::vector<std::pair<int, int>> entries_above_one;
  bool has_nan = false;

  std::string summary() const;
};

/// Check shape (rows == states * actions, cols == states) and
/// row-stochasticity. Never throws.
ValidationReport validate_kernel(int states, int actions, const Matrix& rows);

/// Row-stochastic check for any rectangular probability matrix.
ValidationReport validate_stochastic(const Matrix& rows);

/// Controlled transition kernel R: row (state, action) is the distribution of
/// the next state. Inputs that fail validation are rejected, never
/// renormalized.
class TransitionKernel {
 public:
  TransitionKernel(int states, int actions, Matrix rows);

  int states() const { return states_; }
  int actions() const { return actions_; }
  const Matrix& matrix() const { return rows_; }

  double operator()(int state, int action, int next) const {
    return rows_(pair_index(state, action, actions_), next);
  }
  auto row(int state, int action) const {
    return rows_.row(pair_index(state, action, actions_));
  }

 private:
  int states_;
  int actions_;
  Matrix rows_;
};

/// Stationary Markov policy: row i is the action distribution in state i.
class Policy {
 public:
  explicit Policy(Matrix probabilities);

  static Policy deterministic(const std::vector<int>& actions, int action_count);
  static Policy uniform(int states, int actions);

  int states() const { return static_cast<int>(probs_.rows()); }
  int actions() const { return static_cast<int>(probs_.cols()); }
  const Matrix& matrix() const { return probs_; }
  double operator()(int state, int action) const { return probs_(state, action); }

 private:
  Matrix probs_;
};

/// Step cost h(state, action).
class CostFunction {
 public:
  explicit CostFunction(Matrix costs);

  int states() const { return static_cast<int>(costs_.rows()); }
  int actions() const { return static_cast<int>(costs_.cols()); }
  const Matrix& matrix() const { return costs_; }
  double operator()(int state, int action) const { return costs_(state, action); }

  /// Policy-averaged cost h_gamma(i) = sum_j h(i, j) gamma(i, j).
  Vector averaged(const Policy& policy) const;

 private:
  Matrix costs_;
};

/// Discount factor restricted to the open interval (0, 1).
class DiscountFactor {
 public:
  explicit DiscountFactor(double value);
  double value() const { return value_; }

 private:
  double value_;
};

/// L^gamma: the state chain induced by running a policy on the kernel.
Matrix induced_state_chain(const TransitionKernel& kernel, const Policy& policy);

/// P^gamma over (state, action) pairs with truthful observations:
/// P((i,j),(i',j')) = gamma(i', j') R((i,j), i').
Matrix joint_chain_preattack(const TransitionKernel& kernel, const Policy& policy);

/// Recurrence structure derived from the nonzero pattern of a chain.
struct ChainStructure {
  int closed_classes = 0;
  int period = 0;  ///< period of the closed class when there is exactly one
  std::vector<int> recurrent_states;

  /// Exactly one closed class and it is aperiodic. For a finite chain this is
  /// equivalent to the entry-wise Doeblin minorization holding at some lag.
  bool ergodic() const { return closed_classes == 1 && period == 1; }
};

ChainStructure analyze_structure(const SparseMatrix& chain);
ChainStructure analyze_structure(const Matrix& chain);

struct StationaryDist {
  Vector pi;
  double residual = 0.0;  ///< max |pi P - pi|
};

struct StationaryOptions {
  int dense_limit = 1024;
  int max_iterations = 2'000'000;
  double tolerance = 1e-12;
};

/// Unique stationary distribution of an ergodic chain. Dense LU solve (one
/// balance equation replaced by normalization) up to `dense_limit` states,
/// power iteration above. Throws NonErgodicChain if the chain is reducible
/// to several closed classes, periodic, or the iteration stalls.
StationaryDist stationary_distribution(const Matrix& chain,
                                       const StationaryOptions& options = {});
StationaryDist stationary_distribution(const SparseMatrix& chain,
                                       const StationaryOptions& options = {});

/// eta(gamma) = (I - alpha L^gamma)^{-1} h_gamma.
Vector discounted_cost(const TransitionKernel& kernel, const Policy& policy,
                       const CostFunction& cost, DiscountFactor alpha);

/// Same quantity for an explicit chain and per-state cost vector.
Vector discounted_cost(const Matrix& chain, const Vector& state_cost,
                       DiscountFactor alpha);

enum class PotentialVariant { matrix_form, definitional };

struct AlphaPotential {
  Vector g;
  PotentialVariant variant;
};

/// alpha-potential of a chain L with per-state cost h.
///   matrix_form:  (I - alpha L + alpha e pi)^{-1} h
///   definitional: (I - alpha L)^{-1} (h - (pi h) e)
/// The two differ by (pi h) e. Throws std::invalid_argument when pi is not
/// stationary for L (residual above 1e-8).
AlphaPotential alpha_potential(const Matrix& chain, const Vector& state_cost,
                               DiscountFactor alpha, const Vector& pi,
                               PotentialVariant variant);

/// Entry-wise Doeblin minorization P^lag(r, .) >= lambda * psi(.).
struct DoeblinCertificate {
  int lag = 0;
  double lambda = 0.0;
  Vector psi;
  bool found = false;
};

/// Minorization constant of P^lag: lambda = sum_c min_r P^lag(r, c).
DoeblinCertificate minorization_at_lag(const Matrix& chain, int lag);

/// Smallest lag <= max_lag with a positive minorization constant.
DoeblinCertificate doeblin_certificate(const Matrix& chain, int max_lag);

}  // namespace dwm
