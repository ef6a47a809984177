#pragma once

// Monte-Carlo estimate of the Gaussian average
//   G(H(X)) = E sup_{h in H} sum_{i<d, j<n} gamma_ij h_i(X_j),  gamma_ij ~ N(0, 1).
//
// Finite classes take the exact sup per draw. For parametric classes the sup
// is replaced by the best of `samples_per_draw` random members followed by
// `refine_steps` of accept-if-better random search, so the result is a LOWER
// BOUND on the true Gaussian average (flagged in the returned estimate).

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "mtil/numkit/linalg.hpp"
#include "mtil/numkit/rng.hpp"

namespace mtil::complexity {

/// h(params, x) -> vector of length output_dim
using Evaluator = std::function<Vector(std::span<const double> params, std::span<const double> x)>;

struct FunctionClassHandle {
  std::size_t output_dim = 1;
  Evaluator evaluate;
  // Finite class: one parameter vector per member.
  std::vector<Vector> candidates;
  // Parametric class: member sampler and projection back into the class.
  std::function<Vector(Rng&)> sampler;
  std::function<void(Vector&)> project;
  std::size_t samples_per_draw = 256;
  std::size_t refine_steps = 0;
  double refine_scale = 0.1;

  bool is_finite() const noexcept { return !candidates.empty(); }
};

struct GaussianAverage {
  double estimate = 0.0;
  double se = 0.0;
  bool lower_bound = false;  // true for parametric classes
  std::size_t draws = 0;
};

/// Throws InvalidInput when draws < 2, no points are given, or the class is empty.
GaussianAverage gaussian_average_mc(const FunctionClassHandle& cls,
                                    std::span<const Vector> points, std::size_t draws, Rng& rng);

/// Per-draw sup values for a finite class, in draw order.
std::vector<double> finite_class_sups(const FunctionClassHandle& cls,
                                      std::span<const Vector> points, std::size_t draws, Rng& rng);

// Built-in classes.

/// Constant scalar functions h == c for each c in `values`.
FunctionClassHandle constant_class(std::vector<double> values);
/// Scalar linear maps x -> w . x with |w|_2 <= radius (parametric).
FunctionClassHandle linear_ball_class(std::size_t input_dim, double radius);
/// ReLU representations x -> relu(W x + b) with ||[W b]||_F <= radius (parametric).
FunctionClassHandle relu_repr_class(std::size_t input_dim, std::size_t hidden, double radius);

}  // namespace mtil::complexity
