#include "dawn/kernels.hpp"

#include <omp.h>

namespace dawn::kernels {

namespace {

inline double row_dot(const double* row, const double* q, std::size_t dim) {
  double acc = 0.0;
  for (std::size_t j = 0; j < dim; ++j) acc += row[j] * q[j];
  return acc;
}

}  // namespace

void dot_scores_serial(std::span<const double> matrix, std::size_t dim,
                       std::span<const double> query, std::span<double> out) {
  const std::size_t rows = out.size();
  for (std::size_t i = 0; i < rows; ++i) {
    out[i] = row_dot(matrix.data() + i * dim, query.data(), dim);
  }
}

void dot_scores_parallel(std::span<const double> matrix, std::size_t dim,
                         std::span<const double> query, std::span<double> out) {
  const auto rows = static_cast<std::ptrdiff_t>(out.size());
  const double* m = matrix.data();
  const double* q = query.data();
  double* o = out.data();
#pragma omp parallel for schedule(static) if (rows > 256)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    o[i] = row_dot(m + static_cast<std::size_t>(i) * dim, q, dim);
  }
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace dawn::kernels
