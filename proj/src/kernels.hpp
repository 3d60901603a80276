#pragma once

// Dense row-major helpers shared by the forward and backward passes.

#include <cstddef>
#include <span>

namespace btpk::kernels {

/// y += A x, A is rows x cols.
inline void gemv_add(std::span<const double> a, std::size_t rows, std::size_t cols,
                     const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = a.data() + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] += acc;
  }
}

/// y += A^T x, A is rows x cols.
inline void gemv_t_add(std::span<const double> a, std::size_t rows, std::size_t cols,
                       const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    const double* row = a.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) y[c] += row[c] * xr;
  }
}

/// A += u v^T, A is rows x cols. `stride` is the row length of A when the
/// update targets a column block of a wider matrix.
inline void outer_add(double* a, std::size_t rows, std::size_t cols, std::size_t stride,
                      const double* u, const double* v) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double ur = u[r];
    if (ur == 0.0) continue;
    double* row = a + r * stride;
    for (std::size_t c = 0; c < cols; ++c) row[c] += ur * v[c];
  }
}

}  // namespace btpk::kernels
