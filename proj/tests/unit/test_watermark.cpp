#include <doctest.h>

#include "dwm/error.hpp"
#include "dwm/sensornet.hpp"
#include "dwm/serialize.hpp"
#include "dwm/watermark.hpp"
#include "helpers.hpp"

using namespace dwm;
using testing::random_stochastic;

namespace {

Vector fd_derivative(const TransitionKernel& R, const Policy& g, const Policy& nu, const CostFunction& h,
                     DiscountFactor alpha, double step) {
  auto eta = [&](double b) {
    return discounted_cost(R, Policy((1.0 - b) * g.matrix() + b * nu.matrix()), h, alpha);
  };
  return (eta(step) - eta(-step)) / (2 * step);
}

}  // namespace

TEST_CASE("mix_policy endpoints and affinity") {
  std::mt19937_64 gen(1);
  const TransitionKernel R(4, 3, random_stochastic(12, 4, gen));
  const Policy g(random_stochastic(4, 3, gen));
  const Policy nu(random_stochastic(4, 3, gen));
  CHECK((mix_policy(g, {nu, 0.0}).matrix() - g.matrix()).norm() == 0.0);
  CHECK((mix_policy(g, {nu, 1.0}).matrix() - nu.matrix()).norm() == 0.0);
  CHECK_THROWS(mix_policy(g, {nu, 1.5}));
  CHECK_THROWS_AS(mix_policy(g, {Policy::uniform(3, 3), 0.5}), DimensionError);
  for (double beta : {0.01, 0.05, 0.3, 0.77}) {
    const Matrix mixed = induced_state_chain(R, mix_policy(g, {nu, beta}));
    const Matrix affine = (1 - beta) * induced_state_chain(R, g) + beta * induced_state_chain(R, nu);
    CHECK((mixed - affine).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("exact control loss") {
  std::mt19937_64 gen(2);
  const DiscountFactor alpha(0.9);
  SUBCASE("identical policies give zero") {
    const TransitionKernel R(4, 3, random_stochastic(12, 4, gen));
    const Policy g(random_stochastic(4, 3, gen));
    const ExactLoss loss = control_loss_exact(R, g, g, CostFunction(testing::random_cost(4, 3, gen)), alpha);
    CHECK(loss.direct_gap.cwiseAbs().maxCoeff() == 0.0);
    CHECK(loss.identity_rhs.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("common-cost identity holds on random instances") {
    for (int trial = 0; trial < 50; ++trial) {
      const TransitionKernel R(4, 3, random_stochastic(12, 4, gen));
      const Policy g(random_stochastic(4, 3, gen));
      const Policy gp(random_stochastic(4, 3, gen));
      const CostFunction h(testing::random_cost(4, 3, gen));
      const ExactLoss loss = control_loss_exact(R, g, gp, h, alpha);
      CHECK((loss.common_cost_gap - loss.identity_rhs).cwiseAbs().maxCoeff() < 1e-9);
      // Ground truth with policy-dependent costs, from the series oracle.
      const Vector truth =
          testing::series_discounted_cost(induced_state_chain(R, gp), h.averaged(gp), 0.9) -
          testing::series_discounted_cost(induced_state_chain(R, g), h.averaged(g), 0.9);
      CHECK((loss.direct_gap - truth).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
  SUBCASE("identity is invariant to the potential variant") {
    const Matrix L = random_stochastic(5, 5, gen);
    const Matrix L2 = random_stochastic(5, 5, gen);
    const Vector h = Vector::LinSpaced(5, -2, 3);
    const Vector pi = stationary_distribution(L).pi;
    const Vector gm = alpha_potential(L, h, alpha, pi, PotentialVariant::matrix_form).g;
    const Vector gd = alpha_potential(L, h, alpha, pi, PotentialVariant::definitional).g;
    CHECK(((L2 - L) * gm - (L2 - L) * gd).cwiseAbs().maxCoeff() < 1e-9);
    const ExactLoss loss = perturbation_gap(L, L2, h, alpha);
    CHECK((loss.common_cost_gap - loss.identity_rhs).cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("reducible chains are rejected") {
    CHECK_THROWS_AS(perturbation_gap(Matrix::Identity(2, 2), Matrix::Constant(2, 2, 0.5), Vector::Ones(2), alpha),
                    NonErgodicChain);
  }
}

TEST_CASE("control loss derivative") {
  std::mt19937_64 gen(3);
  const DiscountFactor alpha(0.9);
  SUBCASE("nu equal to gamma gives zero") {
    const TransitionKernel R(3, 2, random_stochastic(6, 3, gen));
    const Policy g(random_stochastic(3, 2, gen));
    const CostFunction h(testing::random_cost(3, 2, gen));
    for (auto mode : {DerivativeMode::kernel_only, DerivativeMode::full})
      CHECK(control_loss_derivative(R, g, g, h, alpha, mode).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("action-independent cost: both modes match finite differences") {
    for (int trial = 0; trial < 30; ++trial) {
      const TransitionKernel R(3, 2, random_stochastic(6, 3, gen));
      const Policy g(random_stochastic(3, 2, gen));
      const Policy nu(random_stochastic(3, 2, gen));
      Matrix hm(3, 2);
      for (int i = 0; i < 3; ++i) hm.row(i).setConstant(std::uniform_real_distribution<double>(-4, 4)(gen));
      const CostFunction h(hm);
      const Vector full = control_loss_derivative(R, nu, g, h, alpha, DerivativeMode::full);
      const Vector kernel = control_loss_derivative(R, nu, g, h, alpha, DerivativeMode::kernel_only);
      const Vector fd = fd_derivative(R, g, nu, h, alpha, 1e-4);
      CHECK((full - fd).cwiseAbs().maxCoeff() <= 1e-3 * fd.cwiseAbs().maxCoeff());
      CHECK((full - kernel).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("action-dependent cost: full mode matches finite differences, kernel_only does not") {
    double worst_kernel_gap = 0.0;
    for (int trial = 0; trial < 30; ++trial) {
      const TransitionKernel R(3, 2, random_stochastic(6, 3, gen));
      const Policy g(random_stochastic(3, 2, gen));
      const Policy nu(random_stochastic(3, 2, gen));
      const CostFunction h(testing::random_cost(3, 2, gen));
      const Vector full = control_loss_derivative(R, nu, g, h, alpha, DerivativeMode::full);
      const Vector kernel = control_loss_derivative(R, nu, g, h, alpha, DerivativeMode::kernel_only);
      const Vector fd = fd_derivative(R, g, nu, h, alpha, 1e-4);
      CHECK((full - fd).cwiseAbs().maxCoeff() <= 1e-3 * fd.cwiseAbs().maxCoeff());
      worst_kernel_gap = std::max(worst_kernel_gap, (kernel - fd).cwiseAbs().maxCoeff());
    }
    CHECK(worst_kernel_gap > 1e-3);
  }
  SUBCASE("kernel_only equals alpha B g") {
    const TransitionKernel R(3, 2, random_stochastic(6, 3, gen));
    const Policy g(random_stochastic(3, 2, gen));
    const Policy nu(random_stochastic(3, 2, gen));
    const CostFunction h(testing::random_cost(3, 2, gen));
    const LossReport report = loss_report(R, g, {nu, 0.1}, h, alpha);
    const Matrix L = induced_state_chain(R, g);
    const Vector pi = stationary_distribution(L).pi;
    const Vector pot = alpha_potential(L, h.averaged(g), alpha, pi, PotentialVariant::matrix_form).g;
    CHECK((report.derivative_kernel_only - 0.9 * report.B * pot).cwiseAbs().maxCoeff() < 1e-12);
    const Matrix B = (Matrix::Identity(3, 3) - 0.9 * L).inverse() * (induced_state_chain(R, nu) - L);
    CHECK((report.B - B).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("sensornet control loss") {
  const sensornet::PowerModelParams params;
  const sensornet::Model model = sensornet::build_model(params);
  const DiscountFactor alpha(params.alpha);
  const int start = sensornet::encode({0, 0}, params.n_queue);
  SUBCASE("threshold 3 with a 0.05 watermark: small positive loss") {
    const Policy g = sensornet::threshold_policy(3, 0.0, params.n_queue);
    const Policy wm = sensornet::threshold_policy(3, 0.05, params.n_queue);
    const double loss = control_loss_exact(model.kernel, g, wm, model.cost, alpha).direct_gap(start);
    CHECK(loss > 0.0);
    CHECK(loss < 11.65);
  }
  SUBCASE("optimal policy with a uniform watermark") {
    const Policy g = testing::optimal_policy(model.kernel, model.cost, params.alpha);
    const Policy nu = Policy::uniform(g.states(), 2);
    const Vector d = control_loss_derivative(model.kernel, nu, g, model.cost, alpha, DerivativeMode::full);
    CHECK(d.minCoeff() > 0.0);
    // Approximately linear for beta <= 0.1.
    for (double beta : {0.01, 0.02, 0.05, 0.1}) {
      const Vector gap = control_loss_exact(model.kernel, g, mix_policy(g, {nu, beta}), model.cost, alpha).direct_gap;
      CHECK(gap(start) == doctest::Approx(beta * d(start)).epsilon(0.1));
    }
  }
}

TEST_CASE("loss report serialization") {
  std::mt19937_64 gen(6);
  const TransitionKernel R(3, 2, random_stochastic(6, 3, gen));
  const Policy g(random_stochastic(3, 2, gen));
  const Policy nu(random_stochastic(3, 2, gen));
  const LossReport report = loss_report(R, g, {nu, 0.2}, CostFunction(testing::random_cost(3, 2, gen)), DiscountFactor(0.5));
  const Json doc = to_json(report);
  CHECK(doc["beta"] == 0.2);
  CHECK(doc["exact_gap"].size() == 3);
  CHECK(doc["B"].size() == 3);
  CHECK(loss_csv_header(3).rfind("beta,exact_gap_0", 0) == 0);
  const std::string row = loss_csv_row(report);
  CHECK(std::count(row.begin(), row.end(), ',') == 9);
  CHECK(row.back() == '\n');
}
