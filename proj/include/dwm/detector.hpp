#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "dwm/mdp.hpp"

namespace dwm {

/// Prefix transition counts over an observed (Y, A) stream. Observations are
/// numbered n = 1, 2, ...; transition s is (Y_s, A_s, Y_{s+1}). C_t counts the
/// transitions s < t, so after n observations sum(C_n) = n - 1 (minus any
/// transitions dropped by the caller).
class TransitionCounts {
 public:
  TransitionCounts(int states, int actions);

  int states() const { return states_; }
  int actions() const { return actions_; }
  int cell(int l, int j, int next) const { return (l * actions_ + j) * states_ + next; }

  /// Record transition number `s` (1-based) landing in (l, j, next).
  void add(int s, int l, int j, int next);

  /// C_t(l, j, next): transitions s < t in that cell.
  int prefix(int t, int l, int j, int next) const;
  /// Current totals.
  int total(int l, int j, int next) const { return totals_[cell(l, j, next)]; }
  const std::vector<int>& totals() const { return totals_; }
  std::int64_t recorded() const { return recorded_; }

 private:
  int states_;
  int actions_;
  std::vector<int> totals_;
  std::vector<std::vector<int>> times_;
  std::int64_t recorded_ = 0;
};

/// Log-likelihood terms of the nominal kernel p(. | l, j) = R((l, j), .).
class ScoreKernel {
 public:
  explicit ScoreKernel(const TransitionKernel& kernel);

  int states() const { return states_; }
  int actions() const { return actions_; }
  bool on_support(int l, int j, int next) const {
    return p_[(l * actions_ + j) * states_ + next] > 0.0;
  }

  /// Make log(k) available for k <= count without further allocation.
  void reserve_logs(int count) const;

  /// sum_{l'} d(l') log(qhat(l') / p(l')) for one (l, j) block, qhat = d / N.
  /// Zero counts contribute 0; an exact match qhat == p contributes 0; the
  /// block is clamped at 0 against rounding. Returns +inf when d > 0 off the
  /// support.
  double block_score(int l, int j, std::span<const int> counts) const;

  /// Same as block_score with the segment counts given as totals - snapshot
  /// over the block's cells. Requires reserve_logs(sum of totals).
  double block_score_diff(int l, int j, const int* totals, const int* snapshot) const {
    const int row = (l * actions_ + j) * states_;
    int total = 0;
    for (int next = 0; next < states_; ++next) total += totals[next] - snapshot[next];
    if (total == 0) return 0.0;
    const double* logs = log_table_.data();
    const double log_total = logs[total];
    double sum = 0.0;
    for (int next = 0; next < states_; ++next) {
      const int d = totals[next] - snapshot[next];
      if (d == 0) continue;
      const double p = p_[row + next];
      if (p == 0.0) return std::numeric_limits<double>::infinity();
      if (static_cast<double>(d) / total == p) continue;
      sum += d * (logs[d] - log_total - log_p_[row + next]);
    }
    return sum > 0.0 ? sum : 0.0;
  }

 private:
  double log_int(int k) const;

  int states_;
  int actions_;
  std::vector<double> p_;
  std::vector<double> log_p_;
  mutable std::vector<double> log_table_;
};

/// qhat^{k:n}(. | l, j); all zeros when (l, j) is not visited in [k, n-1].
Vector qhat(const TransitionCounts& counts, int k, int n, int l, int j);

/// S_{k:n} over transitions k .. n-1, computed from scratch.
double segment_score(const TransitionCounts& counts, int k, int n, const ScoreKernel& kernel);

enum class OffSupportPolicy { immediate_alarm, clip };

struct DetectorConfig {
  double threshold = 15.0;  ///< c; may be +inf
  int min_segment = 10;     ///< M
  std::optional<int> window = 500;  ///< W; nullopt keeps every candidate
  OffSupportPolicy off_support = OffSupportPolicy::immediate_alarm;

  void validate() const;
};

/// CUSUM-type detector T_n(M) = max_{k <= n-M} S_{k:n} with the stopping rule
/// inf{n > M : T_n(M) > c}. Candidate k = 1 is always kept; otherwise only
/// the W most recent eligible candidates are scored.
class CusumDetector {
 public:
  CusumDetector(const TransitionKernel& kernel, DetectorConfig config);

  /// Feed observation n = count() + 1.
  void observe(int y, int a);

  int count() const { return n_; }
  /// T_n(M); 0 before any candidate is eligible, +inf after an off-support
  /// alarm.
  double score() const { return score_; }
  bool alarmed() const { return alarm_time_.has_value(); }
  std::optional<int> alarm_time() const { return alarm_time_; }
  std::int64_t dropped() const { return dropped_; }
  const TransitionCounts& counts() const { return counts_; }
  const DetectorConfig& config() const { return config_; }

 private:
  // Candidates live in flat arrays; entries before head_ have been evicted.
  // Candidate slot c holds k, the snapshot C_k and the per-(l, j) block terms
  // of S_{k:n}; its score is the sum of the block terms in index order.
  int slots() const { return static_cast<int>(ks_.size()); }
  void add_candidate();
  void update_slot(int slot, int l, int j);
  void evict();
  void refresh_score();

  ScoreKernel kernel_;
  DetectorConfig config_;
  TransitionCounts counts_;
  int cells_;
  int blocks_;
  std::vector<int> ks_;
  std::vector<int> snapshots_;
  std::vector<double> block_terms_;
  std::vector<double> scores_;
  int head_ = 1;  // slot 0 is k = 1 and is never evicted
  int n_ = 0;
  int last_y_ = -1;
  int last_a_ = -1;
  double score_ = 0.0;
  bool off_support_hit_ = false;
  std::optional<int> alarm_time_;
  std::int64_t dropped_ = 0;
};

struct DetectionOutcome {
  std::optional<int> alarm_time;  ///< detector time n; empty when censored
  int observed = 0;
  std::vector<double> trace;  ///< T_n(M) after each observation, when requested
};

struct RunOptions {
  bool record_trace = false;
  bool stop_at_alarm = true;
};

DetectionOutcome run_detector(std::span<const int> observations, std::span<const int> actions,
                              const TransitionKernel& kernel, const DetectorConfig& config,
                              const RunOptions& options = {});

}  // namespace dwm
