#include "dwm/rng.hpp"

#include <cmath>

namespace dwm {

double max_row_sum_deviation(const Matrix& m) {
  double worst = 0.0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    worst = std::max(worst, std::abs(m.row(r).sum() - 1.0));
  }
  return worst;
}

double max_row_sum_deviation(const SparseMatrix& m) {
  double worst = 0.0;
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) s += it.value();
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t root_seed, std::uint64_t replicate,
                          StreamTag tag) {
  std::uint64_t s = splitmix64(root_seed);
  s = splitmix64(s ^ replicate);
  return splitmix64(s ^ static_cast<std::uint64_t>(tag));
}

int Rng::categorical(std::span<const double> probs) {
  const double u = uniform();
  double acc = 0.0;
  int last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last_positive = static_cast<int>(i);
    if (u < acc) return last_positive;
  }
  // u landed in the rounding gap above the cumulative sum.
  return last_positive;
}

RowSampler::RowSampler(const Matrix& rows) {
  offsets_.reserve(rows.rows() + 1);
  offsets_.push_back(0);
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
      const double p = rows(r, c);
      if (p <= 0.0) continue;
      acc += p;
      columns_.push_back(static_cast<int>(c));
      cumulative_.push_back(acc);
    }
    offsets_.push_back(static_cast<int>(columns_.size()));
  }
}

int RowSampler::sample(int row, double u) const {
  const int begin = offsets_[row];
  const int end = offsets_[row + 1];
  for (int k = begin; k < end; ++k) {
    if (u < cumulative_[k]) return columns_[k];
  }
  return columns_[end - 1];
}

}  // namespace dwm
