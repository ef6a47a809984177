#pragma once

// Inner-loop arithmetic used by every forward and backward pass.
//
// Each kernel has a scalar reference implementation and, where the target
// supports it, an AVX2+FMA (x86-64) or NEON (aarch64) variant. The variant is
// chosen once at startup from the CPU's capabilities; the MTIL_KERNELS
// environment variable (scalar | avx2 | neon | auto) or set_backend()
// overrides the choice. Vector variants reassociate sums, so results agree
// with the scalar path to rounding, not bit for bit.

#include <cstddef>
#include <span>
#include <string_view>

#include "mtil/numkit/linalg.hpp"

namespace mtil::kernels {

enum class Backend { Scalar, Avx2, Neon };

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = M x, M is rows x cols row-major
  void (*gemv)(const double* m, std::size_t rows, std::size_t cols, const double* x, double* y);
  // y += M^T x
  void (*gemv_t_acc)(const double* m, std::size_t rows, std::size_t cols, const double* x,
                     double* y);
  // M += alpha * x y^T, x has `rows` entries and y has `cols`
  void (*ger)(double alpha, const double* x, std::size_t rows, const double* y, std::size_t cols,
              double* m);
};

const KernelTable& scalar_table();
// nullptr when the variant was not compiled in or the CPU lacks the feature.
const KernelTable* avx2_table();
const KernelTable* neon_table();

bool backend_available(Backend backend);
Backend active_backend();
// Throws InvalidInput if the backend is unavailable.
void set_backend(Backend backend);
const KernelTable& active();

std::string_view backend_name(Backend backend);
Backend parse_backend(std::string_view name);

double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void gemv(const Matrix& m, std::span<const double> x, std::span<double> y);
void gemv_t_acc(const Matrix& m, std::span<const double> x, std::span<double> y);
void ger(double alpha, std::span<const double> x, std::span<const double> y, Matrix& m);

}  // namespace mtil::kernels
