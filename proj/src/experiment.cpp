#include "dwm/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <thread>

#include "dwm/error.hpp"
#include "dwm/simulate.hpp"
#include "dwm/watermark.hpp"

namespace dwm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Reads one config section, rejecting unknown keys.
class Section {
 public:
  Section(const Json& doc, std::string path, std::set<std::string> keys)
      : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw ConfigError(path_ + ": expected an object");
    for (const auto& item : doc_.items()) {
      if (!keys.count(item.key())) throw ConfigError(path_ + "." + item.key() + ": unknown field");
    }
  }

  bool has(const char* key) const { return doc_.contains(key); }
  std::string at(const char* key) const { return path_ + "." + key; }
  const Json& raw(const char* key) const { return doc_.at(key); }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    const Json& v = doc_.at(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string() && (v == "inf" || v == "infinity")) return std::numeric_limits<double>::infinity();
    throw ConfigError(at(key) + ": expected a number");
  }

  int integer(const char* key, int fallback) const {
    if (!has(key)) return fallback;
    const Json& v = doc_.at(key);
    if (!v.is_number_integer()) throw ConfigError(at(key) + ": expected an integer");
    return v.get<int>();
  }

  std::string text(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const Json& v = doc_.at(key);
    if (!v.is_string()) throw ConfigError(at(key) + ": expected a string");
    return v.get<std::string>();
  }

 private:
  const Json& doc_;
  std::string path_;
};

template <typename T>
T checked(const std::string& where, T value, bool ok, const char* message) {
  if (!ok) throw ConfigError(where + ": " + message);
  return value;
}

void parse_model(const Json& doc, ExperimentConfig& cfg) {
  Section s(doc, "model", {"type", "params", "kernel", "cost", "alpha", "initial_state"});
  const std::string type = s.text("type", "sensornet");
  if (type == "sensornet") {
    cfg.sensornet = true;
    if (s.has("kernel") || s.has("cost")) throw ConfigError("model: kernel/cost given for a sensornet model");
    if (s.has("params")) {
      Section p(s.raw("params"), "model.params",
                {"n_queue", "p0", "p1", "p_scene", "r_trans", "rho", "alpha"});
      auto& q = cfg.params;
      q.n_queue = p.integer("n_queue", q.n_queue);
      q.p0 = p.number("p0", q.p0);
      q.p1 = p.number("p1", q.p1);
      q.p_scene = p.number("p_scene", q.p_scene);
      q.r_trans = p.number("r_trans", q.r_trans);
      q.rho = p.number("rho", q.rho);
      q.alpha = p.number("alpha", q.alpha);
    }
    cfg.params.alpha = s.number("alpha", cfg.params.alpha);
    try {
      cfg.params.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("model.params: ") + e.what());
    }
    cfg.alpha = cfg.params.alpha;
  } else if (type == "explicit") {
    cfg.sensornet = false;
    if (!s.has("kernel")) throw ConfigError("model.kernel: required for an explicit model");
    if (!s.has("cost")) throw ConfigError("model.cost: required for an explicit model");
    cfg.kernel = kernel_from_json(s.raw("kernel"), "model.kernel");
    cfg.cost = cost_from_json(s.raw("cost"), "model.cost");
    if (cfg.cost->states() != cfg.kernel->states() || cfg.cost->actions() != cfg.kernel->actions()) {
      throw ConfigError("model.cost: shape does not match the kernel");
    }
    cfg.alpha = s.number("alpha", cfg.alpha);
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError("model.alpha: must lie in (0, 1)");
  } else {
    throw ConfigError("model.type: expected \"sensornet\" or \"explicit\"");
  }
  cfg.initial_state = s.integer("initial_state", 0);
}

void parse_policy(const Json& doc, ExperimentConfig& cfg) {
  Section s(doc, "policy", {"type", "threshold", "range", "objective", "gamma"});
  const std::string type = s.text("type", cfg.sensornet ? "threshold" : "explicit");
  if (type == "threshold") {
    cfg.policy = PolicySource::threshold;
    cfg.threshold = s.integer("threshold", cfg.threshold);
  } else if (type == "optimal_threshold") {
    cfg.policy = PolicySource::optimal_threshold;
    if (s.has("range")) {
      const Json& r = s.raw("range");
      if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer() || !r[1].is_number_integer()) {
        throw ConfigError("policy.range: expected [lo, hi]");
      }
      cfg.threshold_lo = r[0].get<int>();
      cfg.threshold_hi = r[1].get<int>();
      if (cfg.threshold_lo > cfg.threshold_hi) throw ConfigError("policy.range: lo > hi");
    }
    const std::string objective = s.text("objective", "initial_state");
    if (objective == "initial_state") {
      cfg.objective = sensornet::ThresholdObjective::initial_state;
    } else if (objective == "stationary") {
      cfg.objective = sensornet::ThresholdObjective::stationary;
    } else {
      throw ConfigError("policy.objective: expected \"initial_state\" or \"stationary\"");
    }
  } else if (type == "explicit") {
    cfg.policy = PolicySource::explicit_matrix;
    if (!s.has("gamma")) throw ConfigError("policy.gamma: required for an explicit policy");
    cfg.gamma = policy_from_json(s.raw("gamma"), "policy.gamma");
  } else {
    throw ConfigError("policy.type: expected \"threshold\", \"optimal_threshold\" or \"explicit\"");
  }
  if (cfg.policy != PolicySource::explicit_matrix && !cfg.sensornet) {
    throw ConfigError("policy.type: threshold policies need the sensornet model");
  }
  if (cfg.policy == PolicySource::threshold &&
      (cfg.threshold < 0 || cfg.threshold > cfg.params.n_queue)) {
    throw ConfigError("policy.threshold: outside [0, n_queue]");
  }
}

void parse_watermark(const Json& doc, ExperimentConfig& cfg) {
  Section s(doc, "watermark", {"nu", "beta", "beta_grid"});
  if (s.has("nu")) {
    const Json& nu = s.raw("nu");
    if (nu == "inverted") {
      cfg.watermark = WatermarkSource::inverted;
    } else if (nu == "uniform") {
      cfg.watermark = WatermarkSource::uniform;
    } else if (nu.is_object()) {
      cfg.watermark = WatermarkSource::explicit_matrix;
      cfg.nu = policy_from_json(nu, "watermark.nu");
    } else {
      throw ConfigError("watermark.nu: expected \"inverted\", \"uniform\" or a policy object");
    }
  }
  cfg.beta = s.number("beta", cfg.beta);
  if (!(cfg.beta >= 0.0 && cfg.beta <= 1.0)) throw ConfigError("watermark.beta: must lie in [0, 1]");
  if (s.has("beta_grid")) {
    const Json& grid = s.raw("beta_grid");
    if (!grid.is_array() || grid.empty()) throw ConfigError("watermark.beta_grid: expected a non-empty array");
    cfg.beta_grid.clear();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const std::string where = "watermark.beta_grid[" + std::to_string(i) + "]";
      if (!grid[i].is_number()) throw ConfigError(where + ": expected a number");
      const double b = grid[i].get<double>();
      cfg.beta_grid.push_back(checked(where, b, b >= 0.0 && b <= 1.0, "must lie in [0, 1]"));
    }
  }
}

void parse_attack(const Json& doc, ExperimentConfig& cfg) {
  Section s(doc, "attack", {"kind", "phi", "onset", "posterior"});
  const std::string kind = s.text("kind", "null");
  if (kind == "null") {
    cfg.attack = AttackKind::null;
  } else if (kind == "matrix") {
    cfg.attack = AttackKind::matrix;
    if (!s.has("phi")) throw ConfigError("attack.phi: required for a matrix attack");
    cfg.phi = attack_matrix_from_json(s.raw("phi"), "attack.phi");
  } else if (kind == "predictive") {
    cfg.attack = AttackKind::predictive_resampling;
  } else if (kind == "virtual") {
    cfg.attack = AttackKind::virtual_system;
  } else {
    throw ConfigError("attack.kind: expected \"null\", \"matrix\", \"predictive\" or \"virtual\"");
  }
  if (s.has("onset")) {
    const Json& onset = s.raw("onset");
    if (onset.is_null() || onset == "never" || onset == "inf") {
      cfg.onset.reset();
    } else if (onset.is_number_integer() && onset.get<int>() >= 0) {
      cfg.onset = onset.get<int>();
    } else {
      throw ConfigError("attack.onset: expected a non-negative integer or null");
    }
  }
  const std::string posterior = s.text("posterior", "sample");
  if (posterior == "sample") {
    cfg.posterior = PosteriorMode::sample;
  } else if (posterior == "map") {
    cfg.posterior = PosteriorMode::map;
  } else {
    throw ConfigError("attack.posterior: expected \"sample\" or \"map\"");
  }
}

void parse_detector(const Json& doc, ExperimentConfig& cfg) {
  Section s(doc, "detector", {"c", "M", "window", "off_support", "projection"});
  auto& d = cfg.detector;
  d.threshold = s.number("c", d.threshold);
  d.min_segment = s.integer("M", d.min_segment);
  if (s.has("window")) {
    const Json& w = s.raw("window");
    if (w.is_null() || w == "inf") {
      d.window.reset();
    } else if (w.is_number_integer()) {
      d.window = w.get<int>();
    } else {
      throw ConfigError("detector.window: expected an integer or null");
    }
  }
  const std::string off = s.text("off_support", "immediate_alarm");
  if (off == "immediate_alarm") {
    d.off_support = OffSupportPolicy::immediate_alarm;
  } else if (off == "clip") {
    d.off_support = OffSupportPolicy::clip;
  } else {
    throw ConfigError("detector.off_support: expected \"immediate_alarm\" or \"clip\"");
  }
  const std::string projection = s.text("projection", "node");
  if (projection != "node" && projection != "full") {
    throw ConfigError("detector.projection: expected \"node\" or \"full\"");
  }
  cfg.node_projection = projection == "node";
  if (!(d.threshold > 0.0)) throw ConfigError("detector.c: must be > 0");
  if (d.min_segment < 1) throw ConfigError("detector.M: must be >= 1");
  if (d.window && *d.window < d.min_segment) throw ConfigError("detector.window: must be >= M");
}

void parse_run(const Json& doc, ExperimentConfig& cfg) {
  Section s(doc, "run", {"horizon", "replicates", "seed", "threads", "out"});
  cfg.horizon = s.integer("horizon", cfg.horizon);
  cfg.replicates = s.integer("replicates", cfg.replicates);
  if (s.has("seed")) {
    const Json& seed = s.raw("seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
      throw ConfigError("run.seed: expected a non-negative integer");
    }
    cfg.seed = seed.get<std::uint64_t>();
  }
  cfg.threads = s.integer("threads", cfg.threads);
  cfg.out = s.text("out", cfg.out);
  if (cfg.replicates < 1) throw ConfigError("run.replicates: must be >= 1");
  if (cfg.threads < 0) throw ConfigError("run.threads: must be >= 0");
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const double pos = p * (values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - lo) * (values[hi] - values[lo]);
}

// Runs f(i) for i in [0, count) on `threads` workers. Results are written by
// index, so the output does not depend on scheduling.
template <typename F>
void parallel_for(int count, int threads, F f) {
  const int workers = std::max(1, std::min(count, threads > 0 ? threads
                                                                 : static_cast<int>(std::thread::hardware_concurrency())));
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// Discounted cost of an attack-free run from the auxiliary stream.
double nominal_cost(const ExperimentConfig& config, const Setup& setup, const Policy& policy,
                    std::uint64_t replicate) {
  const std::uint64_t root = stream_seed(config.seed, replicate, StreamTag::auxiliary);
  const AttackStrategy none = null_attack();
  ClosedLoop loop(setup.kernel, policy, none, std::nullopt, root, 0, config.initial_state);
  double weight = 1.0;
  double cost = 0.0;
  for (int t = 0; t < config.horizon && weight > 0.0; ++t) {
    if (t > 0) loop.step();
    cost += weight * setup.cost(loop.state(), loop.action());
    weight *= setup.alpha.value();
  }
  return cost;
}

}  // namespace

ExperimentConfig parse_config(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  for (const auto& item : doc.items()) {
    static const std::set<std::string> sections{"model", "policy", "watermark", "attack", "detector", "run"};
    if (!sections.count(item.key())) throw ConfigError(item.key() + ": unknown section");
  }
  ExperimentConfig cfg;
  parse_model(doc.value("model", Json::object()), cfg);
  parse_policy(doc.value("policy", Json::object()), cfg);
  parse_watermark(doc.value("watermark", Json::object()), cfg);
  parse_attack(doc.value("attack", Json::object()), cfg);
  parse_detector(doc.value("detector", Json::object()), cfg);
  parse_run(doc.value("run", Json::object()), cfg);

  const int states = cfg.sensornet ? sensornet::state_count(cfg.params.n_queue) : cfg.kernel->states();
  const int actions = cfg.sensornet ? 2 : cfg.kernel->actions();
  if (cfg.initial_state < 0 || cfg.initial_state >= states) {
    throw ConfigError("model.initial_state: out of range");
  }
  if (cfg.gamma && (cfg.gamma->states() != states || cfg.gamma->actions() != actions)) {
    throw ConfigError("policy.gamma: shape does not match the model");
  }
  if (cfg.nu && (cfg.nu->states() != states || cfg.nu->actions() != actions)) {
    throw ConfigError("watermark.nu: shape does not match the model");
  }
  if (cfg.watermark == WatermarkSource::inverted && actions != 2) {
    throw ConfigError("watermark.nu: \"inverted\" needs exactly two actions");
  }
  if (cfg.phi && cfg.phi->states() != states) throw ConfigError("attack.phi: shape does not match the model");
  if (cfg.horizon <= cfg.detector.min_segment + 1) throw ConfigError("run.horizon: must exceed M + 1");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(doc);
}

Setup prepare(const ExperimentConfig& config) {
  std::optional<sensornet::ThresholdSearch> search;
  std::optional<sensornet::Model> model;
  if (config.sensornet) model = sensornet::build_model(config.params);
  const TransitionKernel kernel = model ? model->kernel : *config.kernel;
  const CostFunction cost = model ? model->cost : *config.cost;

  Policy optimal = Policy::uniform(kernel.states(), kernel.actions());
  int threshold = config.threshold;
  switch (config.policy) {
    case PolicySource::threshold:
      optimal = sensornet::threshold_policy(threshold, 0.0, config.params.n_queue);
      break;
    case PolicySource::optimal_threshold:
      search = sensornet::find_optimal_threshold(*model, config.threshold_lo, config.threshold_hi,
                                                 config.objective);
      threshold = search->best;
      optimal = sensornet::threshold_policy(threshold, 0.0, config.params.n_queue);
      break;
    case PolicySource::explicit_matrix:
      optimal = *config.gamma;
      break;
  }

  Policy nu = Policy::uniform(kernel.states(), kernel.actions());
  switch (config.watermark) {
    case WatermarkSource::inverted: {
      Matrix swapped(optimal.states(), 2);
      swapped.col(0) = optimal.matrix().col(1);
      swapped.col(1) = optimal.matrix().col(0);
      nu = Policy(std::move(swapped));
      break;
    }
    case WatermarkSource::uniform:
      break;
    case WatermarkSource::explicit_matrix:
      nu = *config.nu;
      break;
  }

  const bool projection = config.sensornet && config.node_projection;
  TransitionKernel detect_kernel = projection ? sensornet::node_kernel(config.params) : kernel;
  return Setup{kernel,        cost,       DiscountFactor(config.alpha), optimal, nu,
               detect_kernel, projection, config.params.n_queue,        search};
}

Policy deployed_policy(const Setup& setup, double beta) {
  return mix_policy(setup.optimal, WatermarkSpec{setup.nu, beta});
}

AttackStrategy make_attack(const ExperimentConfig& config, const Setup& setup, const Policy& deployed) {
  switch (config.attack) {
    case AttackKind::null: return null_attack();
    case AttackKind::matrix: return matrix_attack(*config.phi);
    case AttackKind::predictive_resampling:
      return predictive_resampling_attack(setup.kernel, deployed, config.posterior);
    case AttackKind::virtual_system: return virtual_system_attack(setup.kernel, deployed);
  }
  return null_attack();
}

ReplicateResult run_replicate(const ExperimentConfig& config, const Setup& setup, double beta,
                              std::uint64_t replicate) {
  const Policy policy = deployed_policy(setup, beta);
  const AttackStrategy attack = make_attack(config, setup, policy);
  ClosedLoop loop(setup.kernel, policy, attack, config.onset, config.seed, replicate,
                  config.initial_state);
  CusumDetector detector(setup.detect_kernel, config.detector);
  ReplicateResult result;
  result.replicate = replicate;
  double weight = 1.0;
  for (int t = 0; t < config.horizon; ++t) {
    if (t > 0) loop.step();
    result.cost += weight * setup.cost(loop.state(), loop.action());
    weight *= setup.alpha.value();
    if (!detector.alarmed()) {
      const int y = setup.projection ? sensornet::decode(loop.observation(), setup.n_queue).s
                                     : loop.observation();
      detector.observe(y, loop.action());
    } else if (weight == 0.0) {
      break;
    }
  }
  result.alarm_time = detector.alarm_time();
  return result;
}

MetricsRow aggregate(const ExperimentConfig& config, double beta,
                     const std::vector<ReplicateResult>& results) {
  MetricsRow row;
  row.beta = beta;
  row.replicates = static_cast<int>(results.size());
  row.seed = config.seed;
  std::vector<double> delays;
  int censored = 0;
  int false_alarms = 0;
  double run_length = 0.0;
  double cost_sum = 0.0;
  for (const ReplicateResult& r : results) {
    cost_sum += r.cost;
    if (!r.alarm_time) {
      ++censored;
      run_length += config.horizon;
      continue;
    }
    const int T = *r.alarm_time;
    run_length += std::min(T, config.horizon);
    if (config.onset && T > *config.onset) {
      delays.push_back(T - *config.onset);
    } else {
      ++false_alarms;
    }
  }
  const double count = static_cast<double>(results.size());
  row.censored_frac = censored / count;
  row.false_alarm_rate = false_alarms / count;
  row.mtbfa_est = config.onset ? kNaN : run_length / count;
  if (delays.empty()) {
    row.mean_delay = row.delay_q25 = row.delay_q75 = kNaN;
  } else {
    double sum = 0.0;
    for (double d : delays) sum += d;
    row.mean_delay = sum / delays.size();
    row.delay_q25 = quantile(delays, 0.25);
    row.delay_q75 = quantile(delays, 0.75);
  }
  row.mean_cost = cost_sum / count;
  double ss = 0.0;
  for (const ReplicateResult& r : results) ss += (r.cost - row.mean_cost) * (r.cost - row.mean_cost);
  row.cost_se = results.size() > 1 ? std::sqrt(ss / (count - 1) / count) : kNaN;
  return row;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const Setup& setup, double beta) {
  ExperimentResult result;
  result.replicates.resize(config.replicates);
  parallel_for(config.replicates, config.threads, [&](int i) {
    result.replicates[i] = run_replicate(config, setup, beta, static_cast<std::uint64_t>(i));
  });
  result.metrics = aggregate(config, beta, result.replicates);
  return result;
}

SweepResult sweep_beta(const ExperimentConfig& config, const Setup& setup,
                       const std::vector<double>& grid) {
  if (grid.empty()) throw ConfigError("watermark.beta_grid: empty");
  SweepResult sweep;
  const int s0 = config.initial_state;
  double derivative = kNaN;
  try {
    derivative = control_loss_derivative(setup.kernel, setup.nu, setup.optimal, setup.cost,
                                         setup.alpha, DerivativeMode::full)(s0);
  } catch (const NonErgodicChain&) {
  }

  std::vector<double> baseline(config.replicates);
  parallel_for(config.replicates, config.threads, [&](int i) {
    baseline[i] = nominal_cost(config, setup, setup.optimal, static_cast<std::uint64_t>(i));
  });

  for (double beta : grid) {
    sweep.rows.push_back(run_experiment(config, setup, beta).metrics);

    LossRow loss;
    loss.beta = beta;
    try {
      loss.exact_loss = control_loss_exact(setup.kernel, setup.optimal, deployed_policy(setup, beta),
                                           setup.cost, setup.alpha)
                            .direct_gap(s0);
    } catch (const NonErgodicChain&) {
      loss.exact_loss = kNaN;
    }
    loss.derivative_full = derivative;
    loss.linear_approx = beta * derivative;
    const Policy policy = deployed_policy(setup, beta);
    std::vector<double> diff(config.replicates);
    parallel_for(config.replicates, config.threads, [&](int i) {
      diff[i] = nominal_cost(config, setup, policy, static_cast<std::uint64_t>(i)) - baseline[i];
    });
    double mean = 0.0;
    for (double d : diff) mean += d;
    mean /= diff.size();
    double ss = 0.0;
    for (double d : diff) ss += (d - mean) * (d - mean);
    loss.empirical_loss = mean;
    loss.empirical_loss_se = diff.size() > 1 ? std::sqrt(ss / (diff.size() - 1) / diff.size()) : kNaN;
    sweep.loss.push_back(loss);
  }
  return sweep;
}

std::vector<TraceRow> emit_trace(const ExperimentConfig& config, const Setup& setup,
                                 std::uint64_t replicate) {
  const Policy policy = deployed_policy(setup, config.beta);
  const AttackStrategy attack = make_attack(config, setup, policy);
  const Trajectory traj = simulate(setup.kernel, policy, attack, config.horizon, config.onset,
                                   config.seed, replicate, config.initial_state);
  std::vector<int> ys = traj.observations;
  if (setup.projection) ys = sensornet::node_projection(traj, setup.n_queue).observations;
  CusumDetector detector(setup.detect_kernel, config.detector);
  std::vector<TraceRow> rows;
  rows.reserve(ys.size());
  for (std::size_t t = 0; t < ys.size(); ++t) {
    detector.observe(ys[t], traj.actions[t]);
    rows.push_back({static_cast<int>(t), detector.score(), detector.alarmed()});
  }
  return rows;
}

BoundsReport bounds_report(const ExperimentConfig& config, const Setup& setup) {
  const Policy policy = deployed_policy(setup, config.beta);
  const AttackStrategy attack = make_attack(config, setup, policy);
  BoundsOptions options;
  options.c = config.detector.threshold;
  options.M = config.detector.min_segment;
  return compute_bounds(setup.kernel, policy, attack.as_matrix(setup.kernel.states()), options);
}

std::string sweep_csv(const std::vector<MetricsRow>& rows) {
  std::string out = csv_line({"beta", "mean_delay", "delay_q25", "delay_q75", "censored_frac",
                              "false_alarm_rate", "mtbfa_est", "mean_cost", "cost_se",
                              "replicates", "seed"});
  for (const MetricsRow& r : rows) {
    out += csv_line({format_double(r.beta), format_double(r.mean_delay), format_double(r.delay_q25),
                     format_double(r.delay_q75), format_double(r.censored_frac),
                     format_double(r.false_alarm_rate), format_double(r.mtbfa_est),
                     format_double(r.mean_cost), format_double(r.cost_se),
                     std::to_string(r.replicates), std::to_string(r.seed)});
  }
  return out;
}

std::string sweep_loss_csv(const std::vector<LossRow>& rows) {
  std::string out = csv_line({"beta", "exact_loss", "derivative_full", "linear_approx",
                              "empirical_loss", "empirical_loss_se"});
  for (const LossRow& r : rows) {
    out += csv_line({format_double(r.beta), format_double(r.exact_loss),
                     format_double(r.derivative_full), format_double(r.linear_approx),
                     format_double(r.empirical_loss), format_double(r.empirical_loss_se)});
  }
  return out;
}

std::string outcomes_csv(const ExperimentConfig& config, double beta,
                         const std::vector<ReplicateResult>& results) {
  std::string out = csv_line({"replicate", "alarm_time", "censored", "tau", "beta", "c", "M"});
  const std::string tau = config.onset ? std::to_string(*config.onset) : "inf";
  for (const ReplicateResult& r : results) {
    out += csv_line({std::to_string(r.replicate),
                     r.alarm_time ? std::to_string(*r.alarm_time) : "",
                     r.alarm_time ? "0" : "1", tau, format_double(beta),
                     format_double(config.detector.threshold),
                     std::to_string(config.detector.min_segment)});
  }
  return out;
}

std::string trace_csv(const std::vector<TraceRow>& rows) {
  std::string out = csv_line({"t", "score", "alarmed"});
  for (const TraceRow& r : rows) {
    out += csv_line({std::to_string(r.t), format_double(r.score), r.alarmed ? "1" : "0"});
  }
  return out;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = csv_line({"t", "state", "observation", "action"});
  for (int t = 0; t < static_cast<int>(traj.states.size()); ++t) {
    out += csv_line({std::to_string(t), std::to_string(traj.states[t]),
                     std::to_string(traj.observations[t]), std::to_string(traj.actions[t])});
  }
  return out;
}

}  // namespace dwm
