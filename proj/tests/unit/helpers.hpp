#pragma once

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "dwm/attack.hpp"
#include "dwm/mdp.hpp"

namespace testing {

using dwm::Matrix;
using dwm::Vector;

// Strictly positive row-stochastic matrix; rows normalized by their sum.
inline Matrix random_stochastic(int rows, int cols, std::mt19937_64& gen, double floor = 0.05) {
  std::uniform_real_distribution<double> u(floor, 1.0);
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = u(gen);
    m.row(r) /= m.row(r).sum();
  }
  return m;
}

// Renormalize so each row sums to 1 within rounding, by fixing the last entry.
inline Matrix exact_rows(Matrix m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    m(r, m.cols() - 1) = 1.0 - m.row(r).head(m.cols() - 1).sum();
  }
  return m;
}

inline Matrix random_cost(int rows, int cols, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = u(gen);
  return m;
}

// Stationary law from the eigenvector of P^T closest to eigenvalue 1.
inline Vector eigen_stationary(const Matrix& P) {
  Eigen::EigenSolver<Matrix> solver(P.transpose());
  Eigen::Index best = 0;
  double gap = 1e300;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    const double d = std::abs(solver.eigenvalues()(i) - std::complex<double>(1.0, 0.0));
    if (d < gap) {
      gap = d;
      best = i;
    }
  }
  Vector v = solver.eigenvectors().col(best).real();
  return v / v.sum();
}

// Discounted cost by summing alpha^t L^t h until the terms vanish.
inline Vector series_discounted_cost(const Matrix& L, const Vector& h, double alpha) {
  Vector total = Vector::Zero(h.size());
  Vector term = h;
  for (int t = 0; t < 4000; ++t) {
    total += term;
    term = alpha * (L * term);
    if (term.cwiseAbs().maxCoeff() < 1e-18) break;
  }
  return total;
}

// Two-state two-action instance shared by the attack and bounds tests.
inline dwm::TransitionKernel small_kernel() {
  Matrix R(4, 2);
  R << 0.7, 0.3,
       0.2, 0.8,
       0.6, 0.4,
       0.1, 0.9;
  return dwm::TransitionKernel(2, 2, R);
}

inline dwm::Policy small_policy() {
  Matrix g(2, 2);
  g << 0.6, 0.4,
       0.3, 0.7;
  return dwm::Policy(g);
}

// Reports 1 - i' with probability 0.7; every row keeps full support.
inline dwm::AttackMatrix small_stealthy_attack() {
  Matrix phi(4, 2);
  phi << 0.3, 0.7,
         0.7, 0.3,
         0.3, 0.7,
         0.7, 0.3;
  return dwm::AttackMatrix(2, phi);
}

}  // namespace testing

namespace testing {

// Row-normalized empirical (X_t, A_t) -> (X_{t+1}, A_{t+1}) frequencies.
inline Matrix empirical_joint(const std::vector<int>& xs, const std::vector<int>& as, int n, int m) {
  Matrix counts = Matrix::Zero(n * m, n * m);
  for (std::size_t t = 0; t + 1 < xs.size(); ++t) {
    counts(xs[t] * m + as[t], xs[t + 1] * m + as[t + 1]) += 1.0;
  }
  for (Eigen::Index r = 0; r < counts.rows(); ++r) {
    const double s = counts.row(r).sum();
    if (s > 0) counts.row(r) /= s;
  }
  return counts;
}

}  // namespace testing

namespace testing {

// Deterministic optimal policy of a discounted MDP by policy iteration.
inline dwm::Policy optimal_policy(const dwm::TransitionKernel& R, const dwm::CostFunction& h,
                                  double alpha) {
  const int n = R.states(), m = R.actions();
  std::vector<int> act(n, 0);
  for (int iter = 0; iter < 1000; ++iter) {
    const dwm::Policy pol = dwm::Policy::deterministic(act, m);
    const Vector eta = dwm::discounted_cost(R, pol, h, dwm::DiscountFactor(alpha));
    bool changed = false;
    for (int x = 0; x < n; ++x) {
      double best = h(x, act[x]) + alpha * R.row(x, act[x]).dot(eta);
      for (int a = 0; a < m; ++a) {
        const double q = h(x, a) + alpha * R.row(x, a).dot(eta);
        if (q < best - 1e-12) {
          best = q;
          act[x] = a;
          changed = true;
        }
      }
    }
    if (!changed) break;
  }
  return dwm::Policy::deterministic(act, m);
}

}  // namespace testing
