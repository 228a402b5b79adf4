#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace dwm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Entry-wise row-sum tolerance for every probability object in the library.
inline constexpr double kRowSumTolerance = 1e-12;

/// Largest |row sum - 1| of a dense matrix.
double max_row_sum_deviation(const Matrix& m);

/// Largest |row sum - 1| of a sparse matrix.
double max_row_sum_deviation(const SparseMatrix& m);

}  // namespace dwm
