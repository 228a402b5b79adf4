#include "dwm/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dwm/error.hpp"

namespace dwm {

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// Adjacency lists of the positive entries.
std::vector<std::vector<int>> adjacency(const SparseMatrix& chain) {
  std::vector<std::vector<int>> out(chain.rows());
  for (Eigen::Index r = 0; r < chain.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(chain, r); it; ++it) {
      if (it.value() > 0.0) out[r].push_back(static_cast<int>(it.col()));
    }
  }
  return out;
}

// Iterative Tarjan; returns the component id of every vertex.
std::vector<int> strongly_connected(const std::vector<std::vector<int>>& adj,
                                    int& count) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<char> on_stack(n, 0);
  std::vector<int> stack;
  std::vector<std::pair<int, std::size_t>> call;
  int next_index = 0;
  count = 0;
  for (int root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    call.emplace_back(root, 0);
    while (!call.empty()) {
      auto& [v, edge] = call.back();
      if (edge == 0 && index[v] < 0) {
        index[v] = low[v] = next_index++;
        stack.push_back(v);
        on_stack[v] = 1;
      }
      if (edge < adj[v].size()) {
        const int w = adj[v][edge++];
        if (index[w] < 0) {
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = count;
        } while (w != v);
        ++count;
      }
      const int finished = v;
      call.pop_back();
      if (!call.empty()) {
        const int parent = call.back().first;
        low[parent] = std::min(low[parent], low[finished]);
      }
    }
  }
  return comp;
}

Matrix to_dense(const SparseMatrix& s) { return Matrix(s); }

StationaryDist solve_dense(const Matrix& chain) {
  const Eigen::Index n = chain.rows();
  Matrix a = chain.transpose() - Matrix::Identity(n, n);
  a.row(n - 1).setOnes();
  Vector b = Vector::Zero(n);
  b(n - 1) = 1.0;
  Vector pi = a.fullPivLu().solve(b);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (pi(i) < 0.0) {
      if (pi(i) < -1e-9) throw NonErgodicChain("stationary solve produced a negative mass");
      pi(i) = 0.0;
    }
  }
  pi /= pi.sum();
  StationaryDist out;
  out.residual = (pi.transpose() * chain - pi.transpose()).cwiseAbs().maxCoeff();
  out.pi = std::move(pi);
  return out;
}

StationaryDist power_iteration(const SparseMatrix& chain, const StationaryOptions& opt) {
  const Eigen::Index n = chain.rows();
  SparseMatrix transposed = chain.transpose();
  Vector pi = Vector::Constant(n, 1.0 / static_cast<double>(n));
  Vector next(n);
  for (int it = 0; it < opt.max_iterations; ++it) {
    next.noalias() = transposed * pi;
    next /= next.sum();
    const double residual = (next - pi).cwiseAbs().maxCoeff();
    pi.swap(next);
    if (residual < opt.tolerance) {
      StationaryDist out;
      out.residual = (transposed * pi - pi).cwiseAbs().maxCoeff();
      out.pi = std::move(pi);
      return out;
    }
  }
  throw NonErgodicChain("power iteration did not converge: chain may be periodic/reducible");
}

}  // namespace

std::string ValidationReport::summary() const {
  std::ostringstream os;
  os << (passed ? "pass" : "fail") << ": max row deviation " << max_row_deviation;
  if (worst_row >= 0) os << " (row " << worst_row << ")";
  if (!negative_entries.empty()) os << ", " << negative_entries.size() << " negative entries";
  if (!entries_above_one.empty()) os << ", " << entries_above_one.size() << " entries above 1";
  if (has_nan) os << ", NaN present";
  return os.str();
}

ValidationReport validate_stochastic(const Matrix& rows) {
  ValidationReport report;
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    double sum = 0.0;
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
      const double v = rows(r, c);
      if (std::isnan(v)) {
        report.has_nan = true;
        continue;
      }
      if (v < 0.0) report.negative_entries.emplace_back(static_cast<int>(r), static_cast<int>(c));
      if (v > 1.0) report.entries_above_one.emplace_back(static_cast<int>(r), static_cast<int>(c));
      sum += v;
    }
    const double dev = std::abs(sum - 1.0);
    if (report.worst_row < 0 || dev > report.max_row_deviation) {
      report.max_row_deviation = dev;
      report.worst_row = static_cast<int>(r);
    }
  }
  report.passed = !report.has_nan && report.negative_entries.empty() &&
                  report.entries_above_one.empty() &&
                  report.max_row_deviation <= kRowSumTolerance && rows.rows() > 0;
  return report;
}

ValidationReport validate_kernel(int states, int actions, const Matrix& rows) {
  ValidationReport report = validate_stochastic(rows);
  if (states < 1 || actions < 1 || rows.rows() != static_cast<Eigen::Index>(states) * actions ||
      rows.cols() != states) {
    report.passed = false;
  }
  return report;
}

TransitionKernel::TransitionKernel(int states, int actions, Matrix rows)
    : states_(states), actions_(actions), rows_(std::move(rows)) {
  if (states < 1 || actions < 1) throw DimensionError("kernel needs at least one state and action");
  if (rows_.rows() != static_cast<Eigen::Index>(states) * actions || rows_.cols() != states) {
    throw DimensionError("kernel must be (n*m)x n = " + std::to_string(states * actions) + "x" +
                         std::to_string(states) + ", got " + shape(rows_));
  }
  const ValidationReport report = validate_kernel(states, actions, rows_);
  if (!report.passed) throw InvalidModel("transition kernel " + report.summary());
}

Policy::Policy(Matrix probabilities) : probs_(std::move(probabilities)) {
  if (probs_.rows() < 1 || probs_.cols() < 1) throw DimensionError("empty policy");
  const ValidationReport report = validate_stochastic(probs_);
  if (!report.passed) throw InvalidModel("policy " + report.summary());
}

Policy Policy::deterministic(const std::vector<int>& actions, int action_count) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(actions.size()), action_count);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i] < 0 || actions[i] >= action_count) throw DimensionError("action out of range");
    m(static_cast<Eigen::Index>(i), actions[i]) = 1.0;
  }
  return Policy(std::move(m));
}

Policy Policy::uniform(int states, int actions) {
  return Policy(Matrix::Constant(states, actions, 1.0 / actions));
}

CostFunction::CostFunction(Matrix costs) : costs_(std::move(costs)) {
  if (costs_.rows() < 1 || costs_.cols() < 1) throw DimensionError("empty cost function");
  if (!costs_.allFinite()) throw InvalidModel("cost function has non-finite entries");
}

Vector CostFunction::averaged(const Policy& policy) const {
  if (policy.states() != states() || policy.actions() != actions()) {
    throw DimensionError("cost " + shape(costs_) + " vs policy " + shape(policy.matrix()));
  }
  return costs_.cwiseProduct(policy.matrix()).rowwise().sum();
}

DiscountFactor::DiscountFactor(double value) : value_(value) {
  if (!(value > 0.0 && value < 1.0)) {
    throw std::invalid_argument("discount factor must lie in (0, 1)");
  }
}

Matrix induced_state_chain(const TransitionKernel& kernel, const Policy& policy) {
  const int n = kernel.states();
  const int m = kernel.actions();
  if (policy.states() != n || policy.actions() != m) {
    throw DimensionError("policy " + shape(policy.matrix()) + " does not match kernel with " +
                         std::to_string(n) + " states and " + std::to_string(m) + " actions");
  }
  Matrix chain = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      chain.row(i) += policy(i, j) * kernel.row(i, j);
    }
  }
  return chain;
}

Matrix joint_chain_preattack(const TransitionKernel& kernel, const Policy& policy) {
  const int n = kernel.states();
  const int m = kernel.actions();
  if (policy.states() != n || policy.actions() != m) {
    throw DimensionError("policy does not match kernel");
  }
  Matrix joint = Matrix::Zero(n * m, n * m);
  for (int k = 0; k < n * m; ++k) {
    for (int next = 0; next < n; ++next) {
      const double r = kernel.matrix()(k, next);
      if (r == 0.0) continue;
      for (int a = 0; a < m; ++a) {
        joint(k, pair_index(next, a, m)) = policy(next, a) * r;
      }
    }
  }
  return joint;
}

ChainStructure analyze_structure(const SparseMatrix& chain) {
  if (chain.rows() != chain.cols()) throw DimensionError("chain must be square");
  const auto adj = adjacency(chain);
  int count = 0;
  const std::vector<int> comp = strongly_connected(adj, count);

  std::vector<char> closed(count, 1);
  for (std::size_t v = 0; v < adj.size(); ++v) {
    for (int w : adj[v]) {
      if (comp[w] != comp[v]) closed[comp[v]] = 0;
    }
  }
  ChainStructure out;
  int closed_id = -1;
  for (int c = 0; c < count; ++c) {
    if (closed[c]) {
      ++out.closed_classes;
      closed_id = c;
    }
  }
  if (out.closed_classes != 1) return out;

  const int n = static_cast<int>(adj.size());
  for (int v = 0; v < n; ++v) {
    if (comp[v] == closed_id) out.recurrent_states.push_back(v);
  }
  // Period: gcd over class edges of level(u) + 1 - level(v) from a BFS.
  std::vector<int> level(n, -1);
  std::vector<int> queue{out.recurrent_states.front()};
  level[queue.front()] = 0;
  int period = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int u = queue[head];
    for (int w : adj[u]) {
      if (comp[w] != closed_id) continue;
      if (level[w] < 0) {
        level[w] = level[u] + 1;
        queue.push_back(w);
      } else {
        period = std::gcd(period, std::abs(level[u] + 1 - level[w]));
      }
    }
  }
  out.period = period;
  return out;
}

ChainStructure analyze_structure(const Matrix& chain) {
  return analyze_structure(SparseMatrix(chain.sparseView()));
}

StationaryDist stationary_distribution(const Matrix& chain, const StationaryOptions& options) {
  if (chain.rows() != chain.cols() || chain.rows() == 0) {
    throw DimensionError("stationary_distribution needs a non-empty square matrix");
  }
  if (chain.rows() > options.dense_limit) {
    return stationary_distribution(SparseMatrix(chain.sparseView()), options);
  }
  if (!analyze_structure(chain).ergodic()) {
    throw NonErgodicChain("chain may be periodic/reducible: no unique aperiodic recurrent class");
  }
  StationaryDist out = solve_dense(chain);
  if (out.residual > 1e-8) throw NonErgodicChain("stationary residual too large");
  return out;
}

StationaryDist stationary_distribution(const SparseMatrix& chain, const StationaryOptions& options) {
  if (chain.rows() != chain.cols() || chain.rows() == 0) {
    throw DimensionError("stationary_distribution needs a non-empty square matrix");
  }
  if (!analyze_structure(chain).ergodic()) {
    throw NonErgodicChain("chain may be periodic/reducible: no unique aperiodic recurrent class");
  }
  if (chain.rows() <= options.dense_limit) {
    StationaryDist out = solve_dense(to_dense(chain));
    if (out.residual > 1e-8) throw NonErgodicChain("stationary residual too large");
    return out;
  }
  return power_iteration(chain, options);
}

Vector discounted_cost(const Matrix& chain, const Vector& state_cost, DiscountFactor alpha) {
  const Eigen::Index n = chain.rows();
  if (chain.cols() != n || state_cost.size() != n) throw DimensionError("discounted_cost shapes");
  const Matrix a = Matrix::Identity(n, n) - alpha.value() * chain;
  return a.partialPivLu().solve(state_cost);
}

Vector discounted_cost(const TransitionKernel& kernel, const Policy& policy,
                       const CostFunction& cost, DiscountFactor alpha) {
  return discounted_cost(induced_state_chain(kernel, policy), cost.averaged(policy), alpha);
}

AlphaPotential alpha_potential(const Matrix& chain, const Vector& state_cost, DiscountFactor alpha,
                               const Vector& pi, PotentialVariant variant) {
  const Eigen::Index n = chain.rows();
  if (chain.cols() != n || state_cost.size() != n || pi.size() != n) {
    throw DimensionError("alpha_potential shapes");
  }
  const double residual = (pi.transpose() * chain - pi.transpose()).cwiseAbs().maxCoeff();
  if (residual > 1e-8 || std::abs(pi.sum() - 1.0) > 1e-8) {
    throw std::invalid_argument("alpha_potential: pi is not stationary for the chain");
  }
  const double a = alpha.value();
  const Matrix identity = Matrix::Identity(n, n);
  AlphaPotential out{Vector(), variant};
  if (variant == PotentialVariant::matrix_form) {
    const Matrix system = identity - a * chain + a * Vector::Ones(n) * pi.transpose();
    out.g = system.partialPivLu().solve(state_cost);
  } else {
    const double average = pi.dot(state_cost);
    out.g = (identity - a * chain).partialPivLu().solve(
        state_cost - average * Vector::Ones(n));
  }
  return out;
}

DoeblinCertificate minorization_at_lag(const Matrix& chain, int lag) {
  if (chain.rows() != chain.cols()) throw DimensionError("chain must be square");
  if (lag < 1) throw std::invalid_argument("lag must be >= 1");
  Matrix power = chain;
  for (int k = 1; k < lag; ++k) power = power * chain;
  DoeblinCertificate cert;
  cert.lag = lag;
  const Vector column_min = power.colwise().minCoeff().transpose();
  cert.lambda = column_min.sum();
  cert.found = cert.lambda > 0.0;
  cert.psi = cert.found ? Vector(column_min / cert.lambda) : Vector::Zero(chain.cols());
  return cert;
}

DoeblinCertificate doeblin_certificate(const Matrix& chain, int max_lag) {
  if (chain.rows() != chain.cols()) throw DimensionError("chain must be square");
  if (max_lag < 1) throw std::invalid_argument("max_lag must be >= 1");
  Matrix power = chain;
  for (int lag = 1; lag <= max_lag; ++lag) {
    if (lag > 1) power = power * chain;
    const Vector column_min = power.colwise().minCoeff().transpose();
    const double lambda = column_min.sum();
    if (lambda > 0.0) {
      return DoeblinCertificate{lag, lambda, column_min / lambda, true};
    }
  }
  DoeblinCertificate none;
  none.psi = Vector::Zero(chain.cols());
  return none;
}

}  // namespace dwm
