#include "dwm/watermark.hpp"

#include <stdexcept>

#include "dwm/error.hpp"

namespace dwm {

namespace {

void require_ergodic(const Matrix& chain, const char* what) {
  if (!analyze_structure(chain).ergodic()) {
    throw NonErgodicChain(std::string(what) + ": chain may be periodic/reducible");
  }
}

Matrix resolvent_factor(const Matrix& chain, double alpha) {
  return Matrix::Identity(chain.rows(), chain.cols()) - alpha * chain;
}

}  // namespace

Policy mix_policy(const Policy& optimal, const WatermarkSpec& spec) {
  if (spec.beta < 0.0 || spec.beta > 1.0) throw std::invalid_argument("beta must lie in [0, 1]");
  if (spec.nu.states() != optimal.states() || spec.nu.actions() != optimal.actions()) {
    throw DimensionError("watermark distribution does not match policy");
  }
  if (spec.beta == 0.0) return optimal;
  if (spec.beta == 1.0) return spec.nu;
  return Policy((1.0 - spec.beta) * optimal.matrix() + spec.beta * spec.nu.matrix());
}

ExactLoss perturbation_gap(const Matrix& base_chain, const Matrix& perturbed_chain,
                           const Vector& common_cost, DiscountFactor alpha) {
  if (base_chain.rows() != perturbed_chain.rows() || base_chain.rows() != common_cost.size()) {
    throw DimensionError("perturbation_gap: shapes disagree");
  }
  require_ergodic(base_chain, "base policy");
  require_ergodic(perturbed_chain, "perturbed policy");
  const double a = alpha.value();
  const StationaryDist pi = stationary_distribution(base_chain);
  const Vector g =
      alpha_potential(base_chain, common_cost, alpha, pi.pi, PotentialVariant::matrix_form).g;
  const auto perturbed_lu = resolvent_factor(perturbed_chain, a).partialPivLu();

  ExactLoss loss;
  loss.common_cost_gap = discounted_cost(perturbed_chain, common_cost, alpha) -
                         discounted_cost(base_chain, common_cost, alpha);
  loss.identity_rhs = a * perturbed_lu.solve((perturbed_chain - base_chain) * g);
  loss.direct_gap = loss.common_cost_gap;
  return loss;
}

ExactLoss control_loss_exact(const TransitionKernel& kernel, const Policy& base,
                             const Policy& perturbed, const CostFunction& cost,
                             DiscountFactor alpha) {
  const Matrix base_chain = induced_state_chain(kernel, base);
  const Matrix perturbed_chain = induced_state_chain(kernel, perturbed);
  const Vector base_cost = cost.averaged(base);
  ExactLoss loss = perturbation_gap(base_chain, perturbed_chain, base_cost, alpha);
  loss.direct_gap = discounted_cost(perturbed_chain, cost.averaged(perturbed), alpha) -
                    discounted_cost(base_chain, base_cost, alpha);
  return loss;
}

Matrix sensitivity_matrix(const TransitionKernel& kernel, const Policy& nu,
                          const Policy& optimal, DiscountFactor alpha) {
  const Matrix base = induced_state_chain(kernel, optimal);
  const Matrix watermark = induced_state_chain(kernel, nu);
  return resolvent_factor(base, alpha.value()).partialPivLu().solve(watermark - base);
}

Vector control_loss_derivative(const TransitionKernel& kernel, const Policy& nu,
                               const Policy& optimal, const CostFunction& cost,
                               DiscountFactor alpha, DerivativeMode mode) {
  const Matrix base = induced_state_chain(kernel, optimal);
  require_ergodic(base, "optimal policy");
  const Matrix watermark = induced_state_chain(kernel, nu);
  const double a = alpha.value();
  const Vector h = cost.averaged(optimal);
  const StationaryDist pi = stationary_distribution(base);
  const Vector g = alpha_potential(base, h, alpha, pi.pi, PotentialVariant::matrix_form).g;
  const auto lu = resolvent_factor(base, a).partialPivLu();
  const Matrix B = lu.solve(watermark - base);
  Vector derivative = a * B * g;
  if (mode == DerivativeMode::full) derivative += lu.solve(cost.averaged(nu) - h);
  return derivative;
}

LossReport loss_report(const TransitionKernel& kernel, const Policy& optimal,
                       const WatermarkSpec& spec, const CostFunction& cost, DiscountFactor alpha) {
  LossReport report;
  report.beta = spec.beta;
  report.exact_gap =
      control_loss_exact(kernel, optimal, mix_policy(optimal, spec), cost, alpha).direct_gap;
  report.derivative_kernel_only =
      control_loss_derivative(kernel, spec.nu, optimal, cost, alpha, DerivativeMode::kernel_only);
  report.derivative_full =
      control_loss_derivative(kernel, spec.nu, optimal, cost, alpha, DerivativeMode::full);
  report.B = sensitivity_matrix(kernel, spec.nu, optimal, alpha);
  return report;
}

}  // namespace dwm
