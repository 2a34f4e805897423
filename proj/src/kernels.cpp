#include "padr/kernels.hpp"

#include <omp.h>

#include <cassert>
#include <vector>

namespace padr::kernels {

namespace {

using Eigen::Index;

Index block_count(Index n) { return (n + kBlockRows - 1) / kBlockRows; }

// Fewer blocks than this are summed on the calling thread.
constexpr Index kMinParallelBlocks = 4;

template <class T>
T pairwise_combine(std::vector<T>& parts) {
  std::size_t width = parts.size();
  while (width > 1) {
    const std::size_t half = width / 2;
    for (std::size_t k = 0; k < half; ++k) parts[k] = parts[2 * k] + parts[2 * k + 1];
    if (width % 2 == 1) {
      parts[half] = parts[width - 1];
      width = half + 1;
    } else {
      width = half;
    }
  }
  return parts.front();
}

// Sums block_fn(start, len) over the fixed row partition of [0, n).
template <class T, class BlockFn>
T blocked_sum(Index n, const T& zero, BlockFn&& block_fn) {
  if (n == 0) return zero;
  const Index nb = block_count(n);
  std::vector<T> parts(static_cast<std::size_t>(nb), zero);
  const bool parallel = nb >= kMinParallelBlocks && !omp_in_parallel();
#pragma omp parallel for schedule(static) if (parallel)
  for (Index b = 0; b < nb; ++b) {
    const Index start = b * kBlockRows;
    const Index len = std::min(kBlockRows, n - start);
    parts[static_cast<std::size_t>(b)] = block_fn(start, len);
  }
  return pairwise_combine(parts);
}

}  // namespace

double mean(ConstVecRef v) {
  const Index n = v.size();
  assert(n > 0);
  const double total = blocked_sum(n, 0.0, [&](Index s, Index len) { return v.segment(s, len).sum(); });
  return total / static_cast<double>(n);
}

Eigen::VectorXd weighted_mean(ConstMatRef rows, ConstVecRef w) {
  const Index n = rows.rows();
  assert(w.size() == n && n > 0);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(rows.cols());
  Eigen::VectorXd total = blocked_sum(n, zero, [&](Index s, Index len) -> Eigen::VectorXd {
    return rows.middleRows(s, len).transpose() * w.segment(s, len);
  });
  return total / static_cast<double>(n);
}

Eigen::VectorXd column_mean(ConstMatRef rows) {
  return weighted_mean(rows, Eigen::VectorXd::Ones(rows.rows()));
}

Eigen::MatrixXd weighted_cross(ConstMatRef a, ConstMatRef b, ConstVecRef w) {
  const Index n = a.rows();
  assert(b.rows() == n && w.size() == n && n > 0);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(a.cols(), b.cols());
  Eigen::MatrixXd total = blocked_sum(n, zero, [&](Index s, Index len) -> Eigen::MatrixXd {
    return a.middleRows(s, len).transpose() *
           (w.segment(s, len).asDiagonal() * b.middleRows(s, len));
  });
  return total / static_cast<double>(n);
}

Eigen::MatrixXd weighted_gram(ConstMatRef a, ConstVecRef w) {
  Eigen::MatrixXd g = weighted_cross(a, a, w);
  g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
  return g;
}

int thread_count() { return omp_get_max_threads(); }

void set_thread_count(int threads) {
  if (threads > 0) {
    omp_set_num_threads(threads);
  } else {
    omp_set_num_threads(omp_get_num_procs());
  }
}

namespace reference {

double mean(ConstVecRef v) {
  long double acc = 0.0L;
  for (Index i = 0; i < v.size(); ++i) acc += v(i);
  return static_cast<double>(acc / static_cast<long double>(v.size()));
}

Eigen::VectorXd weighted_mean(ConstMatRef rows, ConstVecRef w) {
  Eigen::VectorXd out(rows.cols());
  for (Index j = 0; j < rows.cols(); ++j) {
    long double acc = 0.0L;
    for (Index i = 0; i < rows.rows(); ++i) acc += static_cast<long double>(w(i)) * rows(i, j);
    out(j) = static_cast<double>(acc / static_cast<long double>(rows.rows()));
  }
  return out;
}

Eigen::MatrixXd weighted_cross(ConstMatRef a, ConstMatRef b, ConstVecRef w) {
  Eigen::MatrixXd out(a.cols(), b.cols());
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index k = 0; k < b.cols(); ++k) {
      long double acc = 0.0L;
      for (Index i = 0; i < a.rows(); ++i) {
        acc += static_cast<long double>(w(i)) * a(i, j) * b(i, k);
      }
      out(j, k) = static_cast<double>(acc / static_cast<long double>(a.rows()));
    }
  }
  return out;
}

}  // namespace reference

}  // namespace padr::kernels
