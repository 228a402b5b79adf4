#include "dwm/bounds.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "dwm/error.hpp"

namespace dwm {

namespace {

constexpr double kZero = 1e-12;

double double_factorial(int k) {
  double r = 1.0;
  for (int i = k; i > 1; i -= 2) r *= i;
  return r;
}

}  // namespace

double min_nonzero(const Matrix& m) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double x = m.data()[i];
    if (x > 0.0 && x < best) best = x;
  }
  if (!std::isfinite(best)) throw std::invalid_argument("min_nonzero: no positive entry");
  return best;
}

double lambda1(double lambda, double r_min, double gamma_min, double phi_min) {
  for (double x : {lambda, r_min, gamma_min, phi_min}) {
    if (!(x > 0.0 && x <= 1.0)) throw std::invalid_argument("lambda1: inputs must lie in (0, 1]");
  }
  return lambda * r_min * gamma_min * gamma_min * phi_min * phi_min;
}

const char* to_string(SeriesVariant variant) {
  return variant == SeriesVariant::even_double_factorial ? "even_double_factorial"
                                                         : "twice_double_factorial";
}

double series_u(double c, int v, SeriesVariant variant) {
  if (v < 2) throw std::invalid_argument("series_u: v must be >= 2");
  double u = 0.0;
  double power = 1.0;
  double factorial = 1.0;
  for (int k = 0; k <= v / 2 - 1; ++k) {
    if (k > 0) {
      power *= c;
      factorial *= k;
    }
    const double denom = variant == SeriesVariant::even_double_factorial
                             ? std::ldexp(factorial, k)
                             : 2.0 * double_factorial(k);
    u += power / denom;
  }
  return u;
}

double mtbfa_lower_bound(double c, int M, int v, SeriesVariant variant) {
  if (!(c > 0.0)) throw std::invalid_argument("mtbfa_lower_bound: c must be > 0");
  const double u = series_u(c, v, variant);
  return M - 1 + 2.0 * std::sqrt(2.0) / (3.0 * std::sqrt(u)) * std::exp(c / 4.0);
}

LimitingQ limiting_Q(const TransitionKernel& kernel, const Policy& policy, const AttackMatrix& phi,
                     int max_lag) {
  const int n = kernel.states();
  const int m = kernel.actions();
  const ExtendedChain ext(kernel, policy, phi);
  LimitingQ out;
  out.extended_certificate = ext.doeblin_certificate(max_lag);
  if (!out.extended_certificate.found) {
    throw NonErgodicChain("extended chain has no Doeblin certificate; chain may be periodic/reducible");
  }
  out.pi_extended = stationary_distribution(ext.kernel()).pi;

  // pi over (x, y, a) and marginals.
  out.pi_y = Vector::Zero(n);
  out.pi_ya = Matrix::Zero(n, m);
  for (int z = 0; z < ext.size(); ++z) {
    const auto [x, a, y] = ext.decode(z);
    (void)x;
    out.pi_y(y) += out.pi_extended(z);
    out.pi_ya(y, a) += out.pi_extended(z);
  }

  out.Q = Matrix::Zero(n * m, n);
  out.Q_direct = Matrix::Zero(n * m, n);
  out.reachable.assign(n * m, false);
  for (int l = 0; l < n; ++l) {
    for (int j = 0; j < m; ++j) {
      const int row = pair_index(l, j, m);
      if (out.pi_ya(l, j) <= 0.0) {
        out.Q.row(row) = kernel.row(l, j);
        out.Q_direct.row(row) = kernel.row(l, j);
        continue;
      }
      out.reachable[row] = true;
      if (policy(l, j) == 0.0) {
        throw std::domain_error("limiting_Q: reachable (observation, action) with zero policy mass");
      }
      const double denom = out.pi_y(l) * policy(l, j);
      for (int i = 0; i < n; ++i) {
        const double weight = out.pi_extended(ext.index(i, j, l)) / denom;
        if (weight == 0.0) continue;
        for (int ip = 0; ip < n; ++ip) {
          const double r = kernel(i, j, ip);
          if (r == 0.0) continue;
          for (int lp = 0; lp < n; ++lp) out.Q(row, lp) += phi(i, ip, lp) * r * weight;
        }
      }
    }
  }

  // Direct conditional: P(Y' = l' | Y = l, A = j) from pi and the sparse kernel.
  const SparseMatrix& P = ext.kernel();
  for (int z = 0; z < ext.size(); ++z) {
    const auto [x, a, y] = ext.decode(z);
    (void)x;
    const int row = pair_index(y, a, m);
    if (!out.reachable[row] || out.pi_extended(z) == 0.0) continue;
    for (SparseMatrix::InnerIterator it(P, z); it; ++it) {
      const auto [xn, an, yn] = ext.decode(static_cast<int>(it.col()));
      (void)xn;
      (void)an;
      out.Q_direct(row, yn) += out.pi_extended(z) * it.value();
    }
  }
  for (int l = 0; l < n; ++l) {
    for (int j = 0; j < m; ++j) {
      const int row = pair_index(l, j, m);
      if (out.reachable[row]) out.Q_direct.row(row) /= out.pi_ya(l, j);
    }
  }
  return out;
}

StealthReport stealthiness_check(const Matrix& Q, const TransitionKernel& kernel) {
  if (Q.rows() != kernel.matrix().rows() || Q.cols() != kernel.matrix().cols()) {
    throw DimensionError("stealthiness_check: Q and R differ in shape");
  }
  StealthReport report;
  const int m = kernel.actions();
  for (Eigen::Index r = 0; r < Q.rows(); ++r) {
    for (Eigen::Index c = 0; c < Q.cols(); ++c) {
      const bool q_zero = Q(r, c) <= kZero;
      const bool r_zero = kernel.matrix()(r, c) <= kZero;
      if (q_zero != r_zero) {
        report.stealthy = false;
        report.violations.emplace_back(static_cast<int>(r) / m, static_cast<int>(r) % m,
                                       static_cast<int>(c));
      }
    }
  }
  return report;
}

double kl_rate(const Matrix& Q, const TransitionKernel& kernel, const Matrix& pi_ya) {
  const StealthReport stealth = stealthiness_check(Q, kernel);
  if (!stealth.stealthy) throw std::domain_error("kl_rate: Q and R supports differ");
  const int n = kernel.states();
  const int m = kernel.actions();
  double rate = 0.0;
  for (int l = 0; l < n; ++l) {
    for (int j = 0; j < m; ++j) {
      const int row = pair_index(l, j, m);
      double kl = 0.0;
      for (int lp = 0; lp < n; ++lp) {
        const double r = kernel(l, j, lp);
        const double q = Q(row, lp);
        if (r <= kZero || q <= 0.0) continue;
        kl += q * std::log(q / r);
      }
      rate += pi_ya(l, j) * kl;
    }
  }
  return std::max(rate, 0.0);
}

double slack_term(int lag, const Matrix& Q, const TransitionKernel& kernel, double lambda1_value) {
  double worst = 0.0;
  for (Eigen::Index r = 0; r < Q.rows(); ++r) {
    for (Eigen::Index c = 0; c < Q.cols(); ++c) {
      const double p = kernel.matrix()(r, c);
      if (p <= kZero || Q(r, c) <= 0.0) continue;
      worst = std::max(worst, std::abs(std::log(Q(r, c) / p)));
    }
  }
  return 2.0 * (lag + 2) * worst / lambda1_value;
}

double md_upper_bound(double c, int M, double kl, double slack) {
  if (kl <= kZero) return std::numeric_limits<double>::infinity();
  return std::max(static_cast<double>(M), (c + slack) / kl);
}

double hoeffding_tail(double n, double eps, double f_norm, int lag, double lambda1_value) {
  if (!(eps > 0.0)) throw std::invalid_argument("hoeffding_tail: eps must be > 0");
  const double mu = 2.0 * (lag + 2) * f_norm / lambda1_value;
  if (n <= mu / eps) return 1.0;
  const double gap = n * eps - mu;
  return 2.0 * std::exp(-2.0 * gap * gap / (n * mu * mu));
}

BoundsReport compute_bounds(const TransitionKernel& kernel, const Policy& policy,
                            const std::optional<AttackMatrix>& phi, const BoundsOptions& options) {
  BoundsReport report;
  report.series_variant = options.variant;
  report.c = options.c;
  report.M = options.M;
  const Matrix L = induced_state_chain(kernel, policy);
  report.v = static_cast<int>((L.array() > 0.0).count());
  report.u_c = series_u(options.c, report.v, options.variant);
  report.mtbfa_lb = mtbfa_lower_bound(options.c, options.M, report.v, options.variant);
  report.r_min = min_nonzero(kernel.matrix());
  report.gamma_min = min_nonzero(policy.matrix());
  if (!phi) {
    report.supported = false;
    report.note = "unsupported: Q undefined for attacks without a matrix form";
    report.md_ub = std::numeric_limits<double>::quiet_NaN();
    report.I_QR = std::numeric_limits<double>::quiet_NaN();
    report.slack = std::numeric_limits<double>::quiet_NaN();
    report.lambda1 = std::numeric_limits<double>::quiet_NaN();
    return report;
  }
  report.phi_min = min_nonzero(phi->matrix());
  report.doeblin = doeblin_certificate(joint_chain_postattack(kernel, policy, *phi), options.max_lag);
  if (!report.doeblin.found) {
    report.supported = false;
    report.note = "unsupported: post-attack chain has no Doeblin certificate";
    return report;
  }
  const LimitingQ lq = limiting_Q(kernel, policy, *phi, options.max_lag);
  report.extended_doeblin = lq.extended_certificate;
  report.Q = lq.Q;
  const StealthReport stealth = stealthiness_check(lq.Q, kernel);
  report.stealthy = stealth.stealthy;
  report.lambda1 = lambda1(report.doeblin.lambda, report.r_min, report.gamma_min, report.phi_min);
  if (!stealth.stealthy) {
    report.note = "bound not applicable: Q and R supports differ";
    report.I_QR = std::numeric_limits<double>::quiet_NaN();
    report.slack = std::numeric_limits<double>::quiet_NaN();
    report.md_ub = std::numeric_limits<double>::quiet_NaN();
    return report;
  }
  report.I_QR = kl_rate(lq.Q, kernel, lq.pi_ya);
  report.slack = slack_term(report.doeblin.lag, lq.Q, kernel, report.lambda1);
  report.md_ub = md_upper_bound(options.c, options.M, report.I_QR, report.slack);
  return report;
}

}  // namespace dwm
