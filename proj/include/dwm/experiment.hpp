#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dwm/attack.hpp"
#include "dwm/bounds.hpp"
#include "dwm/detector.hpp"
#include "dwm/sensornet.hpp"
#include "dwm/serialize.hpp"

namespace dwm {

enum class PolicySource { threshold, optimal_threshold, explicit_matrix };
enum class WatermarkSource { inverted, uniform, explicit_matrix };

struct ExperimentConfig {
  // model
  bool sensornet = true;
  sensornet::PowerModelParams params;
  std::optional<TransitionKernel> kernel;
  std::optional<CostFunction> cost;
  double alpha = 0.5;
  int initial_state = 0;
  // policy
  PolicySource policy = PolicySource::threshold;
  int threshold = 3;
  int threshold_lo = 1;
  int threshold_hi = 10;
  sensornet::ThresholdObjective objective = sensornet::ThresholdObjective::initial_state;
  std::optional<Policy> gamma;
  // watermark
  WatermarkSource watermark = WatermarkSource::inverted;
  std::optional<Policy> nu;
  double beta = 0.05;
  std::vector<double> beta_grid{0.0, 0.01, 0.02, 0.05, 0.1, 0.2};
  // attack
  AttackKind attack = AttackKind::null;
  std::optional<AttackMatrix> phi;
  std::optional<int> onset = 0;  ///< 0-based trajectory time; empty = never
  PosteriorMode posterior = PosteriorMode::sample;
  // detector
  DetectorConfig detector;
  bool node_projection = true;  ///< sensornet only
  // run
  int horizon = 10000;
  int replicates = 1000;
  std::uint64_t seed = 1;
  int threads = 0;  ///< 0 = hardware concurrency
  std::string out = "out";
};

/// Parses the JSON document; every error is a ConfigError naming the field.
ExperimentConfig parse_config(const Json& doc);
ExperimentConfig load_config(const std::string& path);

/// Model objects resolved from a config.
struct Setup {
  TransitionKernel kernel;
  CostFunction cost;
  DiscountFactor alpha;
  Policy optimal;
  Policy nu;
  TransitionKernel detect_kernel;  ///< node kernel under projection, else kernel
  bool projection = false;
  int n_queue = 0;
  std::optional<sensornet::ThresholdSearch> search;
};

Setup prepare(const ExperimentConfig& config);

Policy deployed_policy(const Setup& setup, double beta);
AttackStrategy make_attack(const ExperimentConfig& config, const Setup& setup, const Policy& deployed);

struct ReplicateResult {
  std::uint64_t replicate = 0;
  std::optional<int> alarm_time;  ///< detector observation count n
  double cost = 0.0;              ///< discounted cost of the run
};

/// One closed-loop run with the detector attached. The run stops at the
/// horizon, or once an alarm is raised and the discount weight has
/// underflowed.
ReplicateResult run_replicate(const ExperimentConfig& config, const Setup& setup, double beta,
                              std::uint64_t replicate);

struct MetricsRow {
  double beta = 0.0;
  double mean_delay = 0.0;
  double delay_q25 = 0.0;
  double delay_q75 = 0.0;
  double censored_frac = 0.0;
  double false_alarm_rate = 0.0;
  double mtbfa_est = 0.0;
  double mean_cost = 0.0;
  double cost_se = 0.0;
  int replicates = 0;
  std::uint64_t seed = 0;
};

/// Delay T - tau over runs alarming after the onset; a false alarm is an
/// alarm at T <= tau (any alarm when there is no onset). The MTBFA estimate
/// is the mean of min(T, horizon) and is only reported without an onset.
MetricsRow aggregate(const ExperimentConfig& config, double beta,
                     const std::vector<ReplicateResult>& results);

struct ExperimentResult {
  MetricsRow metrics;
  std::vector<ReplicateResult> replicates;
};

ExperimentResult run_experiment(const ExperimentConfig& config, const Setup& setup, double beta);

struct LossRow {
  double beta = 0.0;
  double exact_loss = 0.0;       ///< at the initial state
  double derivative_full = 0.0;  ///< at the initial state
  double linear_approx = 0.0;    ///< beta * derivative_full
  double empirical_loss = 0.0;   ///< attack-free rollouts, paired with beta = 0
  double empirical_loss_se = 0.0;
};

struct SweepResult {
  std::vector<MetricsRow> rows;
  std::vector<LossRow> loss;
};

SweepResult sweep_beta(const ExperimentConfig& config, const Setup& setup,
                       const std::vector<double>& grid);

struct TraceRow {
  int t = 0;
  double score = 0.0;
  bool alarmed = false;
};

std::vector<TraceRow> emit_trace(const ExperimentConfig& config, const Setup& setup,
                                 std::uint64_t replicate);

BoundsReport bounds_report(const ExperimentConfig& config, const Setup& setup);

// CSV writers; byte-identical output for identical inputs.
std::string sweep_csv(const std::vector<MetricsRow>& rows);
std::string sweep_loss_csv(const std::vector<LossRow>& rows);
std::string outcomes_csv(const ExperimentConfig& config, double beta,
                         const std::vector<ReplicateResult>& results);
std::string trace_csv(const std::vector<TraceRow>& rows);
std::string trajectory_csv(const Trajectory& trajectory);

}  // namespace dwm
