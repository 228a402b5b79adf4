#pragma once

#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "dwm/attack.hpp"
#include "dwm/mdp.hpp"

namespace dwm {

/// Smallest strictly positive entry. Throws std::invalid_argument on an
/// all-zero matrix.
double min_nonzero(const Matrix& m);

/// lambda * R_min * gamma_min^2 * phi_min^2; every input must lie in (0, 1].
double lambda1(double lambda, double r_min, double gamma_min, double phi_min);

/// Denominator of the k-th term of u(c).
///   even_double_factorial: (2k)!! = 2^k k!
///   twice_double_factorial: 2 (k!!)
enum class SeriesVariant { even_double_factorial, twice_double_factorial };

const char* to_string(SeriesVariant variant);

/// u(c) = sum_{k=0}^{floor(v/2)-1} c^k / denom(k).
double series_u(double c, int v, SeriesVariant variant);

/// Asymptotic MTBFA lower bound M - 1 + 2 sqrt(2) / (3 sqrt(u(c))) e^{c/4}.
double mtbfa_lower_bound(double c, int M, int v, SeriesVariant variant);

/// Long-run law of the next observation given (observation, action) under a
/// matrix attack, from the extended chain Z = (X, A, Y).
struct LimitingQ {
  Matrix Q;             ///< (n*m) x n, closed-form conditional
  Matrix Q_direct;      ///< same conditional read off the extended chain
  Vector pi_extended;   ///< stationary law over z = (x, a, y)
  Vector pi_y;          ///< marginal over observations
  Matrix pi_ya;         ///< n x m marginal over (observation, action)
  std::vector<bool> reachable;  ///< rows with pi_ya > 0; others copy R
  DoeblinCertificate extended_certificate;
};

/// Throws NonErgodicChain when the extended chain has no Doeblin certificate
/// within `max_lag`, std::domain_error when a reachable (l, j) has
/// gamma(l, j) = 0.
LimitingQ limiting_Q(const TransitionKernel& kernel, const Policy& policy, const AttackMatrix& phi,
                     int max_lag = 256);

struct StealthReport {
  bool stealthy = true;
  std::vector<std::tuple<int, int, int>> violations;  ///< (l, j, l')
};

/// True iff Q and R have the same zero pattern (entries <= 1e-12 count as 0).
StealthReport stealthiness_check(const Matrix& Q, const TransitionKernel& kernel);

/// I(Q, R) = sum pi_ya(l, j) Q log(Q / R) over the support of R. Throws
/// std::domain_error on a support violation.
double kl_rate(const Matrix& Q, const TransitionKernel& kernel, const Matrix& pi_ya);

/// 2 (m + 2) max_{R > 0} |log(Q / R)| / lambda1.
double slack_term(int lag, const Matrix& Q, const TransitionKernel& kernel, double lambda1_value);

/// Asymptotic MD upper bound max{M, (c + slack) / I}; +inf when I <= 1e-12
/// (a rate at round-off level means Q = R).
double md_upper_bound(double c, int M, double kl, double slack);

/// Concentration bound 2 exp(-2 (n eps - mu)^2 / (n mu^2)), mu = 2 (m + 2)
/// f_norm / lambda1; 1 when n <= mu / eps.
double hoeffding_tail(double n, double eps, double f_norm, int lag, double lambda1_value);

struct BoundsReport {
  bool supported = true;
  std::string note;  ///< reason when unsupported
  SeriesVariant series_variant = SeriesVariant::even_double_factorial;
  double c = 0.0;
  int M = 0;
  int v = 0;
  double u_c = 0.0;
  double mtbfa_lb = 0.0;
  Matrix Q;
  bool stealthy = true;
  double I_QR = 0.0;
  double slack = 0.0;
  double lambda1 = 0.0;
  double r_min = 0.0;
  double gamma_min = 0.0;
  double phi_min = 0.0;
  DoeblinCertificate doeblin;           ///< post-attack (X, A) chain
  DoeblinCertificate extended_doeblin;  ///< extended (X, A, Y) chain
  double md_ub = 0.0;
};

struct BoundsOptions {
  double c = 15.0;
  int M = 10;
  SeriesVariant variant = SeriesVariant::even_double_factorial;
  int max_lag = 256;
};

/// Full report for a deployed policy under an attack. `phi` empty means the
/// attack has no matrix form: the MTBFA part is still filled in and the rest
/// is marked unsupported.
BoundsReport compute_bounds(const TransitionKernel& kernel, const Policy& policy,
                            const std::optional<AttackMatrix>& phi, const BoundsOptions& options);

}  // namespace dwm
