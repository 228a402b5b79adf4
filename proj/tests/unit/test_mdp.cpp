#include <doctest.h>

#include <random>

#include "dwm/error.hpp"
#include "dwm/mdp.hpp"
#include "dwm/rng.hpp"
#include "helpers.hpp"

using namespace dwm;
using testing::random_stochastic;

TEST_CASE("validate_kernel reports problems without throwing") {
  Matrix ok(2, 2);
  ok << 0.5, 0.5, 1.0, 0.0;
  CHECK(validate_kernel(2, 1, ok).passed);

  Matrix over(1, 2);
  over << 0.5, 0.6;
  const ValidationReport r = validate_kernel(1, 1, over);
  CHECK_FALSE(r.passed);
  CHECK(r.max_row_deviation == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(r.worst_row == 0);

  Matrix neg(1, 2);
  neg << -0.1, 1.1;
  const ValidationReport n = validate_kernel(1, 1, neg);
  CHECK_FALSE(n.passed);
  REQUIRE(n.negative_entries.size() == 1);
  CHECK(n.negative_entries[0] == std::pair<int, int>{0, 0});

  Matrix nan(1, 2);
  nan << std::nan(""), 1.0;
  CHECK(validate_kernel(1, 1, nan).has_nan);

  CHECK_FALSE(validate_kernel(2, 2, ok).passed);  // wrong row count
}

TEST_CASE("kernel construction rejects instead of renormalizing") {
  Matrix bad(2, 2);
  bad << 0.5, 0.5, 0.5, 0.5 + 1e-9;
  CHECK_THROWS_AS(TransitionKernel(2, 1, bad), InvalidModel);
  Matrix good(2, 2);
  good << 0.5, 0.5, 0.25, 0.75;
  CHECK_THROWS_AS(TransitionKernel(2, 2, good), DimensionError);
  CHECK_THROWS_AS(DiscountFactor(1.0), std::invalid_argument);
  CHECK_THROWS_AS(DiscountFactor(0.0), std::invalid_argument);
  Matrix inf_cost(1, 1);
  inf_cost << std::numeric_limits<double>::infinity();
  CHECK_THROWS(CostFunction(inf_cost));
}

TEST_CASE("pair index round trip") {
  for (int m = 1; m <= 4; ++m) {
    for (int k = 0; k < 5 * m; ++k) {
      const auto [i, j] = split_pair_index(k, m);
      CHECK(pair_index(i, j, m) == k);
      CHECK(j < m);
    }
  }
}

TEST_CASE("induced_state_chain") {
  std::mt19937_64 gen(11);
  const TransitionKernel R(3, 2, random_stochastic(6, 3, gen));
  SUBCASE("deterministic policy selects kernel rows") {
    const Policy g = Policy::deterministic({1, 0, 1}, 2);
    const Matrix L = induced_state_chain(R, g);
    CHECK((L.row(0) - R.row(0, 1)).norm() == 0.0);
    CHECK((L.row(1) - R.row(1, 0)).norm() == 0.0);
    CHECK((L.row(2) - R.row(2, 1)).norm() == 0.0);
  }
  SUBCASE("brute-force sum over actions") {
    const Policy g(random_stochastic(3, 2, gen));
    const Matrix L = induced_state_chain(R, g);
    for (int i = 0; i < 3; ++i)
      for (int ip = 0; ip < 3; ++ip) {
        double s = 0.0;
        for (int j = 0; j < 2; ++j) s += R(i, j, ip) * g(i, j);
        CHECK(L(i, ip) == doctest::Approx(s).epsilon(1e-15));
      }
    CHECK(max_row_sum_deviation(L) < 1e-12);
  }
  CHECK_THROWS_AS(induced_state_chain(R, Policy::uniform(2, 2)), DimensionError);
}

TEST_CASE("joint_chain_preattack") {
  SUBCASE("single pair") {
    const TransitionKernel R(1, 1, Matrix::Ones(1, 1));
    const Matrix P = joint_chain_preattack(R, Policy::uniform(1, 1));
    CHECK(P.rows() == 1);
    CHECK(P(0, 0) == 1.0);
  }
  SUBCASE("block column j' scales the R column by gamma(i', j')") {
    std::mt19937_64 gen(5);
    const TransitionKernel R(3, 2, random_stochastic(6, 3, gen));
    const Policy g(random_stochastic(3, 2, gen));
    const Matrix P = joint_chain_preattack(R, g);
    CHECK(max_row_sum_deviation(P) < 1e-12);
    for (int k = 0; k < 6; ++k)
      for (int ip = 0; ip < 3; ++ip)
        for (int jp = 0; jp < 2; ++jp)
          CHECK(P(k, pair_index(ip, jp, 2)) ==
                doctest::Approx(R.matrix()(k, ip) * g(ip, jp)).epsilon(1e-15));
  }
}

TEST_CASE("stationary_distribution") {
  SUBCASE("periodic chain is rejected") {
    Matrix P(2, 2);
    P << 0, 1, 1, 0;
    CHECK_THROWS_WITH_AS(stationary_distribution(P), doctest::Contains("periodic/reducible"),
                         NonErgodicChain);
    StationaryOptions sparse_path;
    sparse_path.dense_limit = 0;
    CHECK_THROWS_AS(stationary_distribution(P, sparse_path), NonErgodicChain);
  }
  SUBCASE("two closed classes are rejected") {
    CHECK_THROWS_AS(stationary_distribution(Matrix::Identity(3, 3)), NonErgodicChain);
  }
  SUBCASE("symmetric chain") {
    Matrix P = Matrix::Constant(2, 2, 0.5);
    const StationaryDist s = stationary_distribution(P);
    CHECK(s.pi(0) == doctest::Approx(0.5));
    CHECK(s.pi(1) == doctest::Approx(0.5));
  }
  SUBCASE("random chains match the eigenvector oracle") {
    std::mt19937_64 gen(7);
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix P = random_stochastic(5, 5, gen);
      const Vector oracle = testing::eigen_stationary(P);
      const StationaryDist s = stationary_distribution(P);
      CHECK((s.pi - oracle).cwiseAbs().maxCoeff() < 1e-10);
      CHECK(s.pi.sum() == doctest::Approx(1.0).epsilon(1e-10));
      CHECK((s.pi.transpose() * P - s.pi.transpose()).cwiseAbs().maxCoeff() < 1e-8);

      StationaryOptions sparse_path;
      sparse_path.dense_limit = 0;
      const SparseMatrix S = P.sparseView();
      const StationaryDist it = stationary_distribution(S, sparse_path);
      CHECK((it.pi - oracle).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
  SUBCASE("transient states get zero mass") {
    Matrix P(3, 3);
    P << 0.5, 0.5, 0.0,
         0.0, 0.3, 0.7,
         0.0, 0.6, 0.4;
    const StationaryDist s = stationary_distribution(P);
    CHECK(std::abs(s.pi(0)) < 1e-14);
    CHECK(s.pi(1) == doctest::Approx(6.0 / 13.0));
  }
}

TEST_CASE("discounted_cost") {
  SUBCASE("zero cost") {
    std::mt19937_64 gen(2);
    const TransitionKernel R(3, 2, random_stochastic(6, 3, gen));
    const Vector eta = discounted_cost(R, Policy::uniform(3, 2), CostFunction(Matrix::Zero(3, 2)),
                                       DiscountFactor(0.9));
    CHECK(eta.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("geometric series") {
    const TransitionKernel R(1, 1, Matrix::Ones(1, 1));
    const Vector eta = discounted_cost(R, Policy::uniform(1, 1), CostFunction(Matrix::Ones(1, 1)),
                                       DiscountFactor(0.5));
    CHECK(eta(0) == doctest::Approx(2.0).epsilon(1e-15));
  }
  SUBCASE("Bellman fixed point and series oracle") {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 20; ++trial) {
      const TransitionKernel R(4, 3, random_stochastic(12, 4, gen));
      const Policy g(random_stochastic(4, 3, gen));
      const CostFunction h(testing::random_cost(4, 3, gen));
      const DiscountFactor alpha(0.9);
      const Vector eta = discounted_cost(R, g, h, alpha);
      const Matrix L = induced_state_chain(R, g);
      const Vector hg = h.averaged(g);
      CHECK((eta - hg - 0.9 * L * eta).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((eta - testing::series_discounted_cost(L, hg, 0.9)).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
  SUBCASE("Monte Carlo oracle, 1e5 paths of 60 steps") {
    std::mt19937_64 gen(4);
    const Matrix Rm = random_stochastic(6, 3, gen);
    const Matrix gm = random_stochastic(3, 2, gen);
    const Matrix hm = testing::random_cost(3, 2, gen);
    const TransitionKernel R(3, 2, Rm);
    const Policy g(gm);
    const double alpha = 0.5;
    const Vector eta = discounted_cost(R, g, CostFunction(hm), DiscountFactor(alpha));

    std::mt19937_64 sim(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto draw = [&](const auto& row) {
      double x = u(sim), acc = 0.0;
      for (int c = 0; c < row.size(); ++c) {
        acc += row(c);
        if (x < acc) return c;
      }
      return static_cast<int>(row.size()) - 1;
    };
    for (int start = 0; start < 3; ++start) {
      const int paths = 100000;
      double sum = 0.0, sumsq = 0.0;
      for (int p = 0; p < paths; ++p) {
        int x = start;
        double w = 1.0, total = 0.0;
        for (int t = 0; t < 60; ++t) {
          const int a = draw(gm.row(x));
          total += w * hm(x, a);
          w *= alpha;
          x = draw(Rm.row(pair_index(x, a, 2)));
        }
        sum += total;
        sumsq += total * total;
      }
      const double mean = sum / paths;
      const double se = std::sqrt((sumsq / paths - mean * mean) / paths);
      CHECK(std::abs(mean - eta(start)) < 3 * se);
    }
  }
}

TEST_CASE("alpha_potential") {
  std::mt19937_64 gen(8);
  const DiscountFactor alpha(0.8);
  SUBCASE("constant cost") {
    const Matrix L = random_stochastic(4, 4, gen);
    const Vector pi = stationary_distribution(L).pi;
    const Vector h = Vector::Constant(4, 2.5);
    const Vector gm = alpha_potential(L, h, alpha, pi, PotentialVariant::matrix_form).g;
    const Vector gd = alpha_potential(L, h, alpha, pi, PotentialVariant::definitional).g;
    CHECK((gm - h).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(gd.cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("variants differ by a multiple of e; (L' - L) g agrees") {
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix L = random_stochastic(5, 5, gen);
      const Matrix L2 = random_stochastic(5, 5, gen);
      const Vector pi = stationary_distribution(L).pi;
      Vector h(5);
      for (int i = 0; i < 5; ++i) h(i) = std::uniform_real_distribution<double>(-3, 3)(gen);
      const Vector gm = alpha_potential(L, h, alpha, pi, PotentialVariant::matrix_form).g;
      const Vector gd = alpha_potential(L, h, alpha, pi, PotentialVariant::definitional).g;
      const Vector diff = gm - gd;
      CHECK((diff.array() - diff(0)).abs().maxCoeff() < 1e-8);
      CHECK(diff(0) == doctest::Approx(pi.dot(h)).epsilon(1e-9));
      CHECK(((L2 - L) * (gm - gd)).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
  SUBCASE("non-stationary pi is rejected") {
    const Matrix L = random_stochastic(3, 3, gen);
    Vector wrong = stationary_distribution(L).pi;
    wrong(0) += 0.05;
    wrong(1) -= 0.05;
    CHECK_THROWS_AS(alpha_potential(L, Vector::Ones(3), alpha, wrong, PotentialVariant::matrix_form),
                    std::invalid_argument);
  }
}

TEST_CASE("doeblin_certificate") {
  SUBCASE("all-positive chain minorizes at lag 1") {
    std::mt19937_64 gen(9);
    const Matrix P = random_stochastic(4, 4, gen);
    const DoeblinCertificate c = doeblin_certificate(P, 5);
    REQUIRE(c.found);
    CHECK(c.lag == 1);
    CHECK(c.lambda == doctest::Approx(P.colwise().minCoeff().sum()));
  }
  SUBCASE("identity never minorizes") {
    CHECK_FALSE(doeblin_certificate(Matrix::Identity(3, 3), 50).found);
  }
  SUBCASE("worked 2x2 example") {
    Matrix P(2, 2);
    P << 0.9, 0.1, 0.2, 0.8;
    const DoeblinCertificate c = doeblin_certificate(P, 3);
    CHECK(c.lag == 1);
    CHECK(c.lambda == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(c.psi(0) == doctest::Approx(2.0 / 3.0));
    CHECK(c.psi(1) == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("P^m >= lambda psi on sparse random chains") {
    std::mt19937_64 gen(10);
    std::bernoulli_distribution keep(0.4);
    for (int trial = 0; trial < 30; ++trial) {
      Matrix P = random_stochastic(6, 6, gen);
      for (int r = 0; r < 6; ++r) {
        for (int c = 0; c < 6; ++c)
          if (c != (r + 1) % 6 && c != r && !keep(gen)) P(r, c) = 0.0;
        P.row(r) /= P.row(r).sum();
      }
      const DoeblinCertificate cert = doeblin_certificate(P, 30);
      REQUIRE(cert.found);
      Matrix Pm = Matrix::Identity(6, 6);
      for (int k = 0; k < cert.lag; ++k) Pm = Pm * P;
      for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c) CHECK(Pm(r, c) >= cert.lambda * cert.psi(c) - 1e-12);
      if (cert.lag > 1) CHECK_FALSE(minorization_at_lag(P, cert.lag - 1).found);
    }
  }
}

TEST_CASE("rng streams") {
  Rng a(42, 3, StreamTag::plant), b(42, 3, StreamTag::plant), c(42, 3, StreamTag::attacker),
      d(42, 4, StreamTag::plant);
  bool differs_tag = false, differs_rep = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    differs_tag |= x != c.uniform();
    differs_rep |= x != d.uniform();
  }
  CHECK(differs_tag);
  CHECK(differs_rep);
  CHECK(stream_seed(1, 0, StreamTag::plant) != stream_seed(1, 0, StreamTag::controller));

  Matrix rows(2, 3);
  rows << 0.2, 0.0, 0.8,
          0.0, 1.0, 0.0;
  const RowSampler sampler(rows);
  Rng gen(5);
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < 100000; ++i) ++counts[sampler.sample(0, gen.uniform())];
  CHECK(counts[1] == 0);
  CHECK(std::abs(counts[0] / 100000.0 - 0.2) < 0.01);
  CHECK(sampler.sample(1, 0.999999) == 1);
}
