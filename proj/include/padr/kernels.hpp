#pragma once

// Sample-averaging kernels shared by every estimator stage.
//
// All empirical means in the library go through these functions. Rows are cut
// into fixed blocks of kBlockRows; each block is summed independently (in
// parallel under OpenMP) and the block partials are combined by a pairwise
// tree in block order. The partition never depends on the thread count, so the
// result is bitwise identical for any number of workers.
//
// `reference::` holds the plain serial versions (long double accumulation).
// They are kept for tests and the benchmark, not called by the library.

#include <Eigen/Dense>

namespace padr::kernels {

inline constexpr Eigen::Index kBlockRows = 256;

using ConstVecRef = Eigen::Ref<const Eigen::VectorXd>;
using ConstMatRef = Eigen::Ref<const Eigen::MatrixXd>;

/// n^-1 sum_i v_i
double mean(ConstVecRef v);

/// n^-1 sum_i w_i x_i, where x_i is row i of `rows`.
Eigen::VectorXd weighted_mean(ConstMatRef rows, ConstVecRef w);

/// n^-1 sum_i x_i
Eigen::VectorXd column_mean(ConstMatRef rows);

/// n^-1 sum_i w_i a_i b_i^T  (a_i, b_i rows of A, B; result cols(A) x cols(B))
Eigen::MatrixXd weighted_cross(ConstMatRef a, ConstMatRef b, ConstVecRef w);

/// n^-1 sum_i w_i a_i a_i^T, exactly symmetric.
Eigen::MatrixXd weighted_gram(ConstMatRef a, ConstVecRef w);

/// Number of OpenMP workers the kernels and replicate loops will use.
int thread_count();

/// 0 restores the OpenMP default.
void set_thread_count(int threads);

namespace reference {

double mean(ConstVecRef v);
Eigen::VectorXd weighted_mean(ConstMatRef rows, ConstVecRef w);
Eigen::MatrixXd weighted_cross(ConstMatRef a, ConstMatRef b, ConstVecRef w);

}  // namespace reference

}  // namespace padr::kernels
