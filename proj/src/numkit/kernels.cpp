#include "mtil/numkit/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"
#include "mtil/error.hpp"

namespace mtil::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(MTIL_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* table_for(Backend backend) {
  switch (backend) {
    case Backend::Scalar:
      return &scalar_table();
    case Backend::Avx2:
      return avx2_table();
    case Backend::Neon:
      return neon_table();
  }
  return nullptr;
}

Backend best_available() {
  if (backend_available(Backend::Avx2)) return Backend::Avx2;
  if (backend_available(Backend::Neon)) return Backend::Neon;
  return Backend::Scalar;
}

Backend initial_backend() {
  if (const char* env = std::getenv("MTIL_KERNELS"); env != nullptr && std::string(env) != "auto") {
    try {
      const Backend wanted = parse_backend(env);
      if (backend_available(wanted)) return wanted;
    } catch (const InvalidInput&) {
      // unrecognised names fall back to the best available backend
    }
  }
  return best_available();
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> backend{initial_backend()};
  return backend;
}

}  // namespace

const KernelTable& scalar_table() { return detail::kScalarTable; }

const KernelTable* avx2_table() {
#if defined(MTIL_HAVE_AVX2)
  static const bool supported = cpu_has_avx2();
  return supported ? &detail::kAvx2Table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_table() {
#if defined(MTIL_HAVE_NEON)
  return &detail::kNeonTable;
#else
  return nullptr;
#endif
}

bool backend_available(Backend backend) { return table_for(backend) != nullptr; }

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
  if (!backend_available(backend))
    throw InvalidInput("kernel backend '" + std::string(backend_name(backend)) +
                       "' is not available on this machine");
  current().store(backend, std::memory_order_relaxed);
}

const KernelTable& active() { return *table_for(active_backend()); }

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::Scalar:
      return "scalar";
    case Backend::Avx2:
      return "avx2";
    case Backend::Neon:
      return "neon";
  }
  return "unknown";
}

Backend parse_backend(std::string_view name) {
  if (name == "scalar") return Backend::Scalar;
  if (name == "avx2") return Backend::Avx2;
  if (name == "neon") return Backend::Neon;
  if (name == "auto") return best_available();
  throw InvalidInput("unknown kernel backend '" + std::string(name) + "'");
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidInput("dot: length mismatch");
  return active().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw InvalidInput("axpy: length mismatch");
  active().axpy(alpha, x.data(), y.data(), x.size());
}

void gemv(const Matrix& m, std::span<const double> x, std::span<double> y) {
  if (x.size() != m.cols() || y.size() != m.rows()) throw InvalidInput("gemv: shape mismatch");
  active().gemv(m.data(), m.rows(), m.cols(), x.data(), y.data());
}

void gemv_t_acc(const Matrix& m, std::span<const double> x, std::span<double> y) {
  if (x.size() != m.rows() || y.size() != m.cols()) throw InvalidInput("gemv_t_acc: shape mismatch");
  active().gemv_t_acc(m.data(), m.rows(), m.cols(), x.data(), y.data());
}

void ger(double alpha, std::span<const double> x, std::span<const double> y, Matrix& m) {
  if (x.size() != m.rows() || y.size() != m.cols()) throw InvalidInput("ger: shape mismatch");
  active().ger(alpha, x.data(), m.rows(), y.data(), m.cols(), m.data());
}

}  // namespace mtil::kernels
