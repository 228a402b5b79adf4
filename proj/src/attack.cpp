#include "dwm/attack.hpp"

#include <stdexcept>

#include "dwm/error.hpp"

namespace dwm {

struct AttackStrategy::Data {
  int states = 0;
  // matrix: reported-observation sampler over (i, i') rows.
  RowSampler report;
  std::optional<AttackMatrix> phi;
  // predictive: action posterior sampler over (i, i') rows, plus R.
  RowSampler posterior;
  Matrix posterior_rows;
  std::vector<int> map_action;
  PosteriorMode mode = PosteriorMode::sample;
  // predictive and virtual: R over (x, a) rows and policy over states.
  RowSampler kernel;
  RowSampler policy;
  int actions = 0;
};

namespace {

void check_shapes(const TransitionKernel& kernel, const Policy& policy) {
  if (policy.states() != kernel.states() || policy.actions() != kernel.actions()) {
    throw DimensionError("policy does not match kernel");
  }
}

void check_shapes(const TransitionKernel& kernel, const Policy& policy, const AttackMatrix& phi) {
  check_shapes(kernel, policy);
  if (phi.states() != kernel.states()) throw DimensionError("attack matrix does not match kernel");
}

// Posterior over the hidden action given the observed transition (i, i').
// Rows with no mass (impossible transitions) are left all-zero.
Matrix action_posterior(const TransitionKernel& kernel, const Policy& policy) {
  const int n = kernel.states();
  const int m = kernel.actions();
  Matrix post = Matrix::Zero(n * n, m);
  for (int i = 0; i < n; ++i) {
    for (int next = 0; next < n; ++next) {
      double mass = 0.0;
      for (int j = 0; j < m; ++j) {
        post(i * n + next, j) = policy(i, j) * kernel(i, j, next);
        mass += post(i * n + next, j);
      }
      if (mass > 0.0) post.row(i * n + next) /= mass;
    }
  }
  return post;
}

}  // namespace

const char* to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::null: return "null";
    case AttackKind::matrix: return "matrix";
    case AttackKind::predictive_resampling: return "predictive";
    case AttackKind::virtual_system: return "virtual";
  }
  return "?";
}

AttackMatrix::AttackMatrix(int states, Matrix rows) : states_(states), rows_(std::move(rows)) {
  if (states < 1) throw DimensionError("attack matrix needs at least one state");
  if (rows_.rows() != static_cast<Eigen::Index>(states) * states || rows_.cols() != states) {
    throw DimensionError("attack matrix must be (n*n) x n");
  }
  const ValidationReport report = validate_stochastic(rows_);
  if (!report.passed) throw InvalidModel("attack matrix " + report.summary());
}

AttackMatrix AttackMatrix::truthful(int states) {
  Matrix rows = Matrix::Zero(states * states, states);
  for (int i = 0; i < states; ++i) {
    for (int next = 0; next < states; ++next) rows(i * states + next, next) = 1.0;
  }
  return AttackMatrix(states, std::move(rows));
}

AttackStrategy null_attack() {
  return AttackStrategy(AttackKind::null, std::make_shared<const AttackStrategy::Data>());
}

AttackStrategy matrix_attack(AttackMatrix phi) {
  auto data = std::make_shared<AttackStrategy::Data>();
  data->states = phi.states();
  data->report = RowSampler(phi.matrix());
  data->phi = std::move(phi);
  return AttackStrategy(AttackKind::matrix, std::move(data));
}

AttackStrategy predictive_resampling_attack(const TransitionKernel& kernel, const Policy& policy,
                                            PosteriorMode mode) {
  check_shapes(kernel, policy);
  auto data = std::make_shared<AttackStrategy::Data>();
  data->states = kernel.states();
  data->actions = kernel.actions();
  data->mode = mode;
  data->posterior_rows = action_posterior(kernel, policy);
  // Zero-mass rows get a placeholder so the sampler stays well formed; they are
  // rejected at runtime.
  Matrix sampler_rows = data->posterior_rows;
  data->map_action.assign(sampler_rows.rows(), -1);
  for (Eigen::Index r = 0; r < sampler_rows.rows(); ++r) {
    if (sampler_rows.row(r).sum() == 0.0) {
      sampler_rows(r, 0) = 1.0;
      continue;
    }
    Eigen::Index best = 0;
    sampler_rows.row(r).maxCoeff(&best);  // first maximum: ties go to the lower action
    data->map_action[r] = static_cast<int>(best);
  }
  data->posterior = RowSampler(sampler_rows);
  data->kernel = RowSampler(kernel.matrix());

  const int n = kernel.states();
  Matrix phi = Matrix::Zero(n * n, n);
  for (int i = 0; i < n; ++i) {
    for (int next = 0; next < n; ++next) {
      const int r = i * n + next;
      if (data->map_action[r] < 0) {
        phi(r, next) = 1.0;  // unreachable transition: report the truth
      } else if (mode == PosteriorMode::map) {
        phi.row(r) = kernel.row(i, data->map_action[r]);
      } else {
        for (int j = 0; j < kernel.actions(); ++j) {
          phi.row(r) += data->posterior_rows(r, j) * kernel.row(i, j);
        }
      }
    }
  }
  data->phi = AttackMatrix(n, std::move(phi));
  return AttackStrategy(AttackKind::predictive_resampling, std::move(data));
}

AttackStrategy virtual_system_attack(const TransitionKernel& kernel, const Policy& policy) {
  check_shapes(kernel, policy);
  auto data = std::make_shared<AttackStrategy::Data>();
  data->states = kernel.states();
  data->actions = kernel.actions();
  data->kernel = RowSampler(kernel.matrix());
  data->policy = RowSampler(policy.matrix());
  return AttackStrategy(AttackKind::virtual_system, std::move(data));
}

std::optional<AttackMatrix> AttackStrategy::as_matrix(int states) const {
  switch (kind_) {
    case AttackKind::null:
      return AttackMatrix::truthful(states);
    case AttackKind::matrix:
    case AttackKind::predictive_resampling:
      if (data_->phi->states() != states) throw DimensionError("attack matrix state count");
      return data_->phi;
    case AttackKind::virtual_system:
      return std::nullopt;
  }
  return std::nullopt;
}

Attacker AttackStrategy::start(Rng rng) const { return Attacker(kind_, data_, rng); }

int Attacker::report_transition(int previous, int state) {
  const AttackStrategy::Data& d = *data_;
  switch (kind_) {
    case AttackKind::null:
      return state;
    case AttackKind::matrix:
      return d.report.sample(previous * d.states + state, rng_.uniform());
    case AttackKind::predictive_resampling: {
      const int row = previous * d.states + state;
      if (d.map_action[row] < 0) {
        throw std::logic_error("predictive attack observed a transition with zero probability");
      }
      const int action = d.mode == PosteriorMode::map ? d.map_action[row]
                                                      : d.posterior.sample(row, rng_.uniform());
      return d.kernel.sample(pair_index(previous, action, d.actions), rng_.uniform());
    }
    case AttackKind::virtual_system: {
      const int action = d.policy.sample(virtual_state_, rng_.uniform());
      virtual_state_ = d.kernel.sample(pair_index(virtual_state_, action, d.actions), rng_.uniform());
      return virtual_state_;
    }
  }
  return state;
}

int Attacker::onset(std::optional<int> previous, int state) {
  if (kind_ == AttackKind::virtual_system) {
    virtual_state_ = state;
    return state;
  }
  if (!previous) return state;
  return report_transition(*previous, state);
}

int Attacker::next(int previous, int state) { return report_transition(previous, state); }

Matrix joint_chain_postattack(const TransitionKernel& kernel, const Policy& policy,
                              const AttackMatrix& phi) {
  check_shapes(kernel, policy, phi);
  const int n = kernel.states();
  const int m = kernel.actions();
  // Action law given the true transition: sum_l' phi((i,i'),l') gamma(l', .).
  const Matrix action_given_transition = phi.matrix() * policy.matrix();
  Matrix joint = Matrix::Zero(n * m, n * m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const int k = pair_index(i, j, m);
      for (int next = 0; next < n; ++next) {
        const double r = kernel(i, j, next);
        if (r == 0.0) continue;
        for (int a = 0; a < m; ++a) {
          joint(k, pair_index(next, a, m)) = r * action_given_transition(i * n + next, a);
        }
      }
    }
  }
  return joint;
}

ExtendedChain::ExtendedChain(const TransitionKernel& kernel, const Policy& policy,
                             const AttackMatrix& phi)
    : states_(kernel.states()), actions_(kernel.actions()) {
  check_shapes(kernel, policy, phi);
  const int n = states_;
  const int m = actions_;
  joint_ = joint_chain_postattack(kernel, policy, phi);
  pair_rows_ = Matrix::Zero(n * m, size());
  for (int x = 0; x < n; ++x) {
    for (int a = 0; a < m; ++a) {
      const int k = pair_index(x, a, m);
      for (int xn = 0; xn < n; ++xn) {
        const double r = kernel(x, a, xn);
        if (r == 0.0) continue;
        for (int yn = 0; yn < n; ++yn) {
          const double f = phi(x, xn, yn);
          if (f == 0.0) continue;
          for (int an = 0; an < m; ++an) {
            const double g = policy(yn, an);
            if (g == 0.0) continue;
            pair_rows_(k, index(xn, an, yn)) = r * f * g;
          }
        }
      }
    }
  }
  std::vector<Eigen::Triplet<double>> triplets;
  for (int z = 0; z < size(); ++z) {
    const auto [x, a, y] = decode(z);
    (void)y;
    const int k = pair_index(x, a, m);
    for (int zn = 0; zn < size(); ++zn) {
      const double p = pair_rows_(k, zn);
      if (p != 0.0) triplets.emplace_back(z, zn, p);
    }
  }
  kernel_.resize(size(), size());
  kernel_.setFromTriplets(triplets.begin(), triplets.end());
  kernel_.makeCompressed();
}

DoeblinCertificate ExtendedChain::minorization_at_lag(int lag) const {
  if (lag < 1) throw std::invalid_argument("lag must be >= 1");
  Matrix power = Matrix::Identity(joint_.rows(), joint_.cols());
  for (int k = 1; k < lag; ++k) power = power * joint_;
  const Matrix rows = power * pair_rows_;
  DoeblinCertificate cert;
  cert.lag = lag;
  const Vector column_min = rows.colwise().minCoeff().transpose();
  cert.lambda = column_min.sum();
  cert.found = cert.lambda > 0.0;
  cert.psi = cert.found ? Vector(column_min / cert.lambda) : Vector::Zero(size());
  return cert;
}

DoeblinCertificate ExtendedChain::doeblin_certificate(int max_lag) const {
  if (max_lag < 1) throw std::invalid_argument("max_lag must be >= 1");
  Matrix power = Matrix::Identity(joint_.rows(), joint_.cols());
  for (int lag = 1; lag <= max_lag; ++lag) {
    if (lag > 1) power = power * joint_;
    const Vector column_min = (power * pair_rows_).colwise().minCoeff().transpose();
    const double lambda = column_min.sum();
    if (lambda > 0.0) return DoeblinCertificate{lag, lambda, column_min / lambda, true};
  }
  DoeblinCertificate none;
  none.psi = Vector::Zero(size());
  return none;
}

}  // namespace dwm
