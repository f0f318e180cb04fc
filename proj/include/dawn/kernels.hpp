#pragma once

// Dense scoring kernels for exhaustive retrieval. The serial versions are
// the reference the parallel versions are tested and benchmarked against.

#include <cstddef>
#include <span>

namespace dawn::kernels {

/// out[i] = dot(matrix row i, query) for a row-major `rows x dim` matrix.
void dot_scores_serial(std::span<const double> matrix, std::size_t dim,
                       std::span<const double> query, std::span<double> out);

/// OpenMP version of dot_scores_serial; identical per-row summation order.
void dot_scores_parallel(std::span<const double> matrix, std::size_t dim,
                         std::span<const double> query, std::span<double> out);

/// Number of OpenMP threads the parallel kernels will use.
int max_threads();

}  // namespace dawn::kernels
