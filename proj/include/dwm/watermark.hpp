#pragma once

#include "dwm/mdp.hpp"

namespace dwm {

/// Watermark distribution nu and magnitude beta in [0, 1].
struct WatermarkSpec {
  Policy nu;
  double beta = 0.0;
};

/// (1 - beta) gamma* + beta nu.
Policy mix_policy(const Policy& optimal, const WatermarkSpec& spec);

/// eta(gamma') - eta(gamma) in three forms.
///   direct_gap:      each policy with its own averaged cost h_gamma, h_gamma'
///   common_cost_gap: both policies with the common cost vector h_gamma
///   identity_rhs:    alpha (I - alpha L')^{-1} (L' - L) g_alpha(gamma), from
///                    the same common cost vector
/// The last two agree to rounding; the first differs whenever h depends on
/// the action.
struct ExactLoss {
  Vector direct_gap;
  Vector common_cost_gap;
  Vector identity_rhs;
};

/// Throws NonErgodicChain if either induced chain is not ergodic.
ExactLoss control_loss_exact(const TransitionKernel& kernel, const Policy& base,
                             const Policy& perturbed, const CostFunction& cost,
                             DiscountFactor alpha);

/// Chain-level form with an explicit common per-state cost vector.
ExactLoss perturbation_gap(const Matrix& base_chain, const Matrix& perturbed_chain,
                           const Vector& common_cost, DiscountFactor alpha);

enum class DerivativeMode { kernel_only, full };

/// B(nu, gamma*) = (I - alpha L*)^{-1} (L^nu - L*).
Matrix sensitivity_matrix(const TransitionKernel& kernel, const Policy& nu,
                          const Policy& optimal, DiscountFactor alpha);

/// d eta(gamma~) / d beta at beta = 0.
///   kernel_only: alpha B g_alpha(gamma*)
///   full:        kernel_only + (I - alpha L*)^{-1} (h_nu - h_gamma*)
Vector control_loss_derivative(const TransitionKernel& kernel, const Policy& nu,
                               const Policy& optimal, const CostFunction& cost,
                               DiscountFactor alpha, DerivativeMode mode);

struct LossReport {
  double beta = 0.0;
  Vector exact_gap;
  Vector derivative_kernel_only;
  Vector derivative_full;
  Matrix B;
};

LossReport loss_report(const TransitionKernel& kernel, const Policy& optimal,
                       const WatermarkSpec& spec, const CostFunction& cost, DiscountFactor alpha);

}  // namespace dwm
