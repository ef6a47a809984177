#include "kernels_impl.hpp"

namespace mtil::kernels::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_scalar(const double* m, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_scalar(m + r * cols, x, cols);
}

void gemv_t_acc_scalar(const double* m, std::size_t rows, std::size_t cols, const double* x,
                       double* y) {
  for (std::size_t r = 0; r < rows; ++r) axpy_scalar(x[r], m + r * cols, y, cols);
}

void ger_scalar(double alpha, const double* x, std::size_t rows, const double* y, std::size_t cols,
                double* m) {
  for (std::size_t r = 0; r < rows; ++r) axpy_scalar(alpha * x[r], y, m + r * cols, cols);
}

}  // namespace

const KernelTable kScalarTable{dot_scalar, axpy_scalar, gemv_scalar, gemv_t_acc_scalar, ger_scalar};

}  // namespace mtil::kernels::detail
