#include "dwm/detector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dwm/error.hpp"

namespace dwm {

TransitionCounts::TransitionCounts(int states, int actions)
    : states_(states),
      actions_(actions),
      totals_(static_cast<std::size_t>(states) * actions * states, 0),
      times_(totals_.size()) {}

void TransitionCounts::add(int s, int l, int j, int next) {
  const int c = cell(l, j, next);
  ++totals_[c];
  times_[c].push_back(s);
  ++recorded_;
}

int TransitionCounts::prefix(int t, int l, int j, int next) const {
  const auto& times = times_[cell(l, j, next)];
  return static_cast<int>(std::lower_bound(times.begin(), times.end(), t) - times.begin());
}

ScoreKernel::ScoreKernel(const TransitionKernel& kernel)
    : states_(kernel.states()), actions_(kernel.actions()), log_table_{0.0, 0.0} {
  const Matrix& R = kernel.matrix();
  for (Eigen::Index r = 0; r < R.rows(); ++r) {
    for (Eigen::Index c = 0; c < R.cols(); ++c) {
      p_.push_back(R(r, c));
      log_p_.push_back(R(r, c) > 0.0 ? std::log(R(r, c)) : 0.0);
    }
  }
}

void ScoreKernel::reserve_logs(int count) const {
  while (static_cast<int>(log_table_.size()) <= count) {
    log_table_.push_back(std::log(static_cast<double>(log_table_.size())));
  }
}

double ScoreKernel::log_int(int k) const {
  if (k >= static_cast<int>(log_table_.size())) reserve_logs(k);
  return log_table_[k];
}

double ScoreKernel::block_score(int l, int j, std::span<const int> counts) const {
  const int row = (l * actions_ + j) * states_;
  int total = 0;
  for (int d : counts) total += d;
  if (total == 0) return 0.0;
  const double log_total = log_int(total);
  double sum = 0.0;
  for (int next = 0; next < states_; ++next) {
    const int d = counts[next];
    if (d == 0) continue;
    const double p = p_[row + next];
    if (p == 0.0) return std::numeric_limits<double>::infinity();
    if (static_cast<double>(d) / total == p) continue;
    sum += d * (log_int(d) - log_total - log_p_[row + next]);
  }
  return std::max(sum, 0.0);
}

Vector qhat(const TransitionCounts& counts, int k, int n, int l, int j) {
  if (k >= n) throw std::invalid_argument("qhat needs k < n");
  Vector q = Vector::Zero(counts.states());
  double total = 0.0;
  for (int next = 0; next < counts.states(); ++next) {
    q(next) = counts.prefix(n, l, j, next) - counts.prefix(k, l, j, next);
    total += q(next);
  }
  if (total > 0.0) q /= total;
  return q;
}

double segment_score(const TransitionCounts& counts, int k, int n, const ScoreKernel& kernel) {
  if (k > n - 1) throw std::invalid_argument("segment_score needs k <= n - 1");
  std::vector<int> d(counts.states());
  double score = 0.0;
  for (int l = 0; l < counts.states(); ++l) {
    for (int j = 0; j < counts.actions(); ++j) {
      for (int next = 0; next < counts.states(); ++next) {
        d[next] = counts.prefix(n, l, j, next) - counts.prefix(k, l, j, next);
      }
      score += kernel.block_score(l, j, d);
    }
  }
  return score;
}

void DetectorConfig::validate() const {
  if (!(threshold > 0.0)) throw std::invalid_argument("detector threshold c must be > 0");
  if (min_segment < 1) throw std::invalid_argument("detector M must be >= 1");
  if (window && *window < min_segment) throw std::invalid_argument("detector W must be >= M");
}

CusumDetector::CusumDetector(const TransitionKernel& kernel, DetectorConfig config)
    : kernel_(kernel),
      config_(config),
      counts_(kernel.states(), kernel.actions()),
      cells_(kernel.states() * kernel.actions() * kernel.states()),
      blocks_(kernel.states() * kernel.actions()) {
  config_.validate();
}

void CusumDetector::add_candidate() {
  ks_.push_back(n_);
  snapshots_.insert(snapshots_.end(), counts_.totals().begin(), counts_.totals().end());
  block_terms_.resize(block_terms_.size() + blocks_, 0.0);
  scores_.push_back(0.0);
}

void CusumDetector::update_slot(int slot, int l, int j) {
  const int base = counts_.cell(l, j, 0);
  const int* snap = snapshots_.data() + static_cast<std::size_t>(slot) * cells_ + base;
  double* terms = block_terms_.data() + static_cast<std::size_t>(slot) * blocks_;
  terms[l * kernel_.actions() + j] = kernel_.block_score_diff(l, j, counts_.totals().data() + base, snap);
  double s = 0.0;
  for (int b = 0; b < blocks_; ++b) s += terms[b];
  scores_[slot] = s;
}

void CusumDetector::evict() {
  if (!config_.window) return;
  const int oldest = n_ - config_.min_segment - *config_.window + 1;
  while (head_ < slots() && ks_[head_] < oldest) ++head_;
  // Compact once the dead prefix dominates.
  if (head_ > 64 && head_ * 2 > slots()) {
    const int dead = head_ - 1;
    ks_.erase(ks_.begin() + 1, ks_.begin() + head_);
    snapshots_.erase(snapshots_.begin() + cells_, snapshots_.begin() + static_cast<std::size_t>(head_) * cells_);
    block_terms_.erase(block_terms_.begin() + blocks_,
                       block_terms_.begin() + static_cast<std::size_t>(head_) * blocks_);
    scores_.erase(scores_.begin() + 1, scores_.begin() + head_);
    head_ -= dead;
  }
}

void CusumDetector::refresh_score() {
  if (off_support_hit_) {
    score_ = std::numeric_limits<double>::infinity();
    return;
  }
  const int last_eligible = n_ - config_.min_segment;
  double best = 0.0;
  if (!ks_.empty() && ks_[0] <= last_eligible) best = scores_[0];
  for (int slot = head_; slot < slots() && ks_[slot] <= last_eligible; ++slot) {
    best = std::max(best, scores_[slot]);
  }
  score_ = best;
}

void CusumDetector::observe(int y, int a) {
  if (y < 0 || y >= kernel_.states() || a < 0 || a >= kernel_.actions()) {
    throw std::out_of_range("detector observation out of range");
  }
  ++n_;
  if (n_ > 1) {
    const int s = n_ - 1;
    if (!kernel_.on_support(last_y_, last_a_, y)) {
      if (config_.off_support == OffSupportPolicy::immediate_alarm) {
        off_support_hit_ = true;
        if (!alarm_time_) alarm_time_ = n_;
      } else {
        ++dropped_;
      }
    } else {
      counts_.add(s, last_y_, last_a_, y);
      kernel_.reserve_logs(n_);
      update_slot(0, last_y_, last_a_);
      for (int slot = head_; slot < slots(); ++slot) update_slot(slot, last_y_, last_a_);
    }
  }
  last_y_ = y;
  last_a_ = a;

  add_candidate();  // k = n, empty segment so far
  evict();
  refresh_score();
  if (!alarm_time_ && n_ > config_.min_segment && score_ > config_.threshold) alarm_time_ = n_;
}

DetectionOutcome run_detector(std::span<const int> observations, std::span<const int> actions,
                              const TransitionKernel& kernel, const DetectorConfig& config,
                              const RunOptions& options) {
  if (observations.size() != actions.size()) {
    throw DimensionError("observation and action streams differ in length");
  }
  CusumDetector detector(kernel, config);
  DetectionOutcome outcome;
  if (options.record_trace) outcome.trace.reserve(observations.size());
  for (std::size_t t = 0; t < observations.size(); ++t) {
    detector.observe(observations[t], actions[t]);
    if (options.record_trace) outcome.trace.push_back(detector.score());
    if (detector.alarmed() && options.stop_at_alarm) break;
  }
  outcome.alarm_time = detector.alarm_time();
  outcome.observed = detector.count();
  return outcome;
}

}  // namespace dwm
