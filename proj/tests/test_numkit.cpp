#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "mtil/error.hpp"
#include "mtil/numkit/kernels.hpp"
#include "mtil/numkit/linalg.hpp"
#include "mtil/numkit/numkit.hpp"
#include "mtil/numkit/rng.hpp"

using namespace mtil;

TEST(Rng, SameSeedSameSequence) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, KnownFirstDraws) {
  // splitmix64(0) expansion followed by xoshiro256**; pins the generator.
  Rng r(0);
  const std::uint64_t first = r.next_u64();
  Rng again(0);
  EXPECT_EQ(first, again.next_u64());
  EXPECT_NE(first, Rng(1).next_u64());
}

TEST(Rng, ForkDependsOnKeyNotPosition) {
  Rng a(7);
  Rng b(7);
  for (int i = 0; i < 17; ++i) b.next_u64();
  Rng fa = a.fork("x", 3);
  Rng fb = b.fork("x", 3);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(fa.next_u64(), fb.next_u64());
}

TEST(Rng, ForkStreamsHaveDistinctPrefixes) {
  Rng root(5);
  std::set<std::vector<std::uint64_t>> prefixes;
  const char* labels[] = {"a", "b", "train", "test"};
  int count = 0;
  for (const char* label : labels)
    for (std::uint64_t idx = 0; idx < 25; ++idx) {
      Rng f = root.fork(label, idx);
      std::vector<std::uint64_t> p;
      for (int i = 0; i < 4; ++i) p.push_back(f.next_u64());
      prefixes.insert(p);
      ++count;
    }
  EXPECT_EQ(prefixes.size(), static_cast<std::size_t>(count));
}

TEST(Rng, UniformIndexCoversRangeEvenly) {
  Rng r(3);
  std::vector<int> hist(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++hist[r.uniform_index(7)];
  double chi2 = 0.0;
  for (int h : hist) chi2 += (h - n / 7.0) * (h - n / 7.0) / (n / 7.0);
  EXPECT_LT(chi2, 16.81);  // chi-square, 6 dof, 1%
}

TEST(Rng, UniformInUnitInterval) {
  Rng r(9);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(GaussianVector, ZeroStdIsZero) {
  Rng r(1);
  EXPECT_EQ(gaussian_vector(r, 3, 0.0), (Vector{0.0, 0.0, 0.0}));
}

TEST(GaussianVector, Moments) {
  Rng r(11);
  const Vector v = gaussian_vector(r, 100000, 1.0);
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= v.size() - 1;
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(GaussianVector, Deterministic) {
  Rng a(8), b(8);
  EXPECT_EQ(gaussian_vector(a, 10, 2.0), gaussian_vector(b, 10, 2.0));
}

TEST(Softmax, Examples) {
  const Vector p = softmax(Vector{0.0, 0.0});
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
  const Vector q = softmax(Vector{std::log(3.0), 0.0});
  EXPECT_NEAR(q[0], 0.75, 1e-15);
  EXPECT_NEAR(q[1], 0.25, 1e-15);
  EXPECT_EQ(softmax(Vector{1.0, 2.0}), softmax(Vector{101.0, 102.0}));
}

TEST(Softmax, RejectsNonFinite) {
  EXPECT_THROW(softmax(Vector{1.0, NAN}), InvalidInput);
  EXPECT_THROW(softmax(Vector{INFINITY, 0.0}), InvalidInput);
  EXPECT_THROW(softmax(Vector{}), InvalidInput);
}

TEST(Softmax, AlwaysAProbabilityVector) {
  Rng r(4);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t k = 1 + r.uniform_index(8);
    const Vector z = gaussian_vector(r, k, 50.0);
    const Vector p = softmax(z);
    double total = 0.0;
    for (double x : p) {
      ASSERT_GE(x, 0.0);
      total += x;
    }
    ASSERT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Softmax, EntriesPositiveForModerateLogits) {
  Rng r(12);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector p = softmax(gaussian_vector(r, 5, 3.0));
    for (double x : p) ASSERT_GT(x, 0.0);
  }
}

TEST(Adam, ZeroGradientLeavesParams) {
  AdamState s(3, AdamConfig{0.1});
  Vector p{1.0, -2.0, 3.0};
  const Vector before = p;
  s.step(p, Vector{0.0, 0.0, 0.0});
  EXPECT_EQ(p, before);
  EXPECT_EQ(s.steps(), 1u);
}

TEST(Adam, FirstStepHandComputed) {
  // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
  AdamState s(1, AdamConfig{0.001});
  Vector p{0.0};
  s.step(p, Vector{1.0});
  EXPECT_LT(std::abs(p[0] + 0.001), 1e-6);
  EXPECT_NEAR(p[0], -0.001 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, TwoPositiveStepsDecrease) {
  AdamState s(1, AdamConfig{0.001});
  Vector p{0.0};
  s.step(p, Vector{1.0});
  const double after1 = p[0];
  s.step(p, Vector{1.0});
  EXPECT_LT(after1, 0.0);
  EXPECT_LT(p[0], after1);
}

TEST(Adam, ScaledGradientSameSignPattern) {
  Rng r(6);
  const Vector g = gaussian_vector(r, 20, 1.0);
  Vector g2 = g;
  for (auto& x : g2) x *= 2.0;
  AdamState a(20, AdamConfig{0.01}), b(20, AdamConfig{0.01});
  Vector pa(20, 0.0), pb(20, 0.0);
  a.step(pa, g);
  b.step(pb, g2);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(std::signbit(pa[i]), std::signbit(pb[i]));
}

TEST(Adam, MomentsStayNonNegativeAndShaped) {
  AdamState s(4, AdamConfig{});
  Rng r(2);
  Vector p(4, 0.0);
  for (int i = 0; i < 10; ++i) s.step(p, gaussian_vector(r, 4, 1.0));
  ASSERT_EQ(s.second_moment().size(), 4u);
  ASSERT_EQ(s.first_moment().size(), 4u);
  for (double v : s.second_moment()) EXPECT_GE(v, 0.0);
}

TEST(Adam, ShapeMismatchThrows) {
  AdamState s(2, AdamConfig{});
  Vector p(3, 0.0);
  EXPECT_THROW(s.step(p, Vector(3, 1.0)), InvalidInput);
}

TEST(Matrix, AppendRowAdoptsWidth) {
  Matrix m;
  m.append_row(Vector{1.0, 2.0, 3.0});
  m.append_row(Vector{4.0, 5.0, 6.0});
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(m(1, 2), 6.0);
}

// Kernel equivalence: every available SIMD backend against the scalar reference.

namespace {

std::vector<kernels::Backend> simd_backends() {
  std::vector<kernels::Backend> out;
  for (auto b : {kernels::Backend::Avx2, kernels::Backend::Neon})
    if (kernels::backend_available(b)) out.push_back(b);
  return out;
}

const kernels::KernelTable& table(kernels::Backend b) {
  switch (b) {
    case kernels::Backend::Avx2: return *kernels::avx2_table();
    case kernels::Backend::Neon: return *kernels::neon_table();
    default: return kernels::scalar_table();
  }
}

double rel_close(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(Kernels, ScalarAlwaysAvailable) {
  EXPECT_TRUE(kernels::backend_available(kernels::Backend::Scalar));
  EXPECT_EQ(kernels::parse_backend("scalar"), kernels::Backend::Scalar);
  EXPECT_THROW(kernels::parse_backend("sse9"), InvalidInput);
}

TEST(Kernels, SimdMatchesScalar) {
  const auto& ref = kernels::scalar_table();
  Rng r(99);
  for (auto backend : simd_backends()) {
    SCOPED_TRACE(std::string(kernels::backend_name(backend)));
    const auto& simd = table(backend);
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 50u, 63u, 129u}) {
      const Vector a = gaussian_vector(r, n, 1.0);
      const Vector b = gaussian_vector(r, n, 1.0);
      EXPECT_LT(rel_close(simd.dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n)), 1e-13);

      Vector y1 = gaussian_vector(r, n, 1.0);
      Vector y2 = y1;
      simd.axpy(0.37, a.data(), y1.data(), n);
      ref.axpy(0.37, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) ASSERT_LT(rel_close(y1[i], y2[i]), 1e-14);

      for (std::size_t rows : {1u, 2u, 5u, 11u}) {
        const Vector m = gaussian_vector(r, rows * n, 1.0);
        Vector out1(rows), out2(rows);
        simd.gemv(m.data(), rows, n, b.data(), out1.data());
        ref.gemv(m.data(), rows, n, b.data(), out2.data());
        for (std::size_t i = 0; i < rows; ++i) ASSERT_LT(rel_close(out1[i], out2[i]), 1e-13);

        const Vector xr = gaussian_vector(r, rows, 1.0);
        Vector acc1 = gaussian_vector(r, n, 1.0);
        Vector acc2 = acc1;
        simd.gemv_t_acc(m.data(), rows, n, xr.data(), acc1.data());
        ref.gemv_t_acc(m.data(), rows, n, xr.data(), acc2.data());
        for (std::size_t i = 0; i < n; ++i) ASSERT_LT(rel_close(acc1[i], acc2[i]), 1e-13);

        Vector g1 = m;
        Vector g2 = m;
        simd.ger(-1.5, xr.data(), rows, a.data(), n, g1.data());
        ref.ger(-1.5, xr.data(), rows, a.data(), n, g2.data());
        for (std::size_t i = 0; i < g1.size(); ++i) ASSERT_LT(rel_close(g1[i], g2[i]), 1e-14);
      }
    }
  }
}

TEST(Kernels, ScalarReferenceAgainstNaiveLoops) {
  const auto& ref = kernels::scalar_table();
  Rng r(5);
  const std::size_t rows = 3, cols = 6;
  const Vector m = gaussian_vector(r, rows * cols, 1.0);
  const Vector x = gaussian_vector(r, cols, 1.0);
  Vector y(rows);
  ref.gemv(m.data(), rows, cols, x.data(), y.data());
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += m[i * cols + j] * x[j];
    EXPECT_NEAR(y[i], s, 1e-14);
  }
}

TEST(Kernels, BackendSwitchRoundTrip) {
  const auto before = kernels::active_backend();
  kernels::set_backend(kernels::Backend::Scalar);
  EXPECT_EQ(kernels::active_backend(), kernels::Backend::Scalar);
  const Vector a{1.0, 2.0, 3.0}, b{4.0, 5.0, 6.0};
  EXPECT_DOUBLE_EQ(kernels::dot(a, b), 32.0);
  kernels::set_backend(before);
  EXPECT_EQ(kernels::active_backend(), before);
}
