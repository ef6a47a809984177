#include "mtil/complexity/gaussian_average.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mtil/error.hpp"
#include "mtil/numkit/kernels.hpp"
#include "mtil/numkit/numkit.hpp"

namespace mtil::complexity {
namespace {

void check_inputs(const FunctionClassHandle& cls, std::span<const Vector> points, std::size_t draws) {
  if (draws < 2) throw InvalidInput("gaussian_average_mc: need at least two draws");
  if (points.empty()) throw InvalidInput("gaussian_average_mc: no input points");
  if (!cls.evaluate) throw InvalidInput("gaussian_average_mc: class has no evaluator");
  if (!cls.is_finite() && !cls.sampler) throw InvalidInput("gaussian_average_mc: empty class");
  if (cls.output_dim == 0) throw InvalidInput("gaussian_average_mc: zero output dimension");
}

// Flattened outputs [h_i(X_j)] in (j, i) order, matching the gamma layout.
Vector outputs(const FunctionClassHandle& cls, std::span<const double> params,
               std::span<const Vector> points) {
  Vector out;
  out.reserve(cls.output_dim * points.size());
  for (const auto& x : points) {
    const Vector h = cls.evaluate(params, x);
    if (h.size() != cls.output_dim) throw InvalidInput("gaussian_average_mc: evaluator output size");
    out.insert(out.end(), h.begin(), h.end());
  }
  return out;
}

GaussianAverage summarize(const std::vector<double>& sups, bool lower_bound) {
  const double m = static_cast<double>(sups.size());
  double mean = 0.0;
  for (double s : sups) mean += s;
  mean /= m;
  double var = 0.0;
  for (double s : sups) var += (s - mean) * (s - mean);
  var /= (m - 1.0);
  return {mean, std::sqrt(var / m), lower_bound, sups.size()};
}

}  // namespace

std::vector<double> finite_class_sups(const FunctionClassHandle& cls,
                                      std::span<const Vector> points, std::size_t draws, Rng& rng) {
  check_inputs(cls, points, draws);
  if (!cls.is_finite()) throw InvalidInput("finite_class_sups: class is not finite");
  const std::size_t width = cls.output_dim * points.size();
  Matrix table(cls.candidates.size(), width);
  for (std::size_t c = 0; c < cls.candidates.size(); ++c) table.set_row(c, outputs(cls, cls.candidates[c], points));

  std::vector<double> sups(draws);
  Vector scores(cls.candidates.size());
  for (std::size_t k = 0; k < draws; ++k) {
    const Vector gamma = gaussian_vector(rng, width, 1.0);
    kernels::gemv(table, gamma, scores);
    sups[k] = *std::max_element(scores.begin(), scores.end());
  }
  return sups;
}

GaussianAverage gaussian_average_mc(const FunctionClassHandle& cls,
                                    std::span<const Vector> points, std::size_t draws, Rng& rng) {
  check_inputs(cls, points, draws);
  if (cls.is_finite()) return summarize(finite_class_sups(cls, points, draws, rng), false);

  const std::size_t width = cls.output_dim * points.size();
  std::vector<double> sups(draws);
  for (std::size_t k = 0; k < draws; ++k) {
    const Vector gamma = gaussian_vector(rng, width, 1.0);
    const auto score = [&](const Vector& params) { return kernels::dot(gamma, outputs(cls, params, points)); };
    Vector best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < std::max<std::size_t>(1, cls.samples_per_draw); ++c) {
      Vector p = cls.sampler(rng);
      if (cls.project) cls.project(p);
      const double s = score(p);
      if (s > best_score) {
        best_score = s;
        best = std::move(p);
      }
    }
    for (std::size_t step = 0; step < cls.refine_steps; ++step) {
      Vector p = best;
      for (auto& v : p) v += cls.refine_scale * rng.gaussian();
      if (cls.project) cls.project(p);
      const double s = score(p);
      if (s > best_score) {
        best_score = s;
        best = std::move(p);
      }
    }
    sups[k] = best_score;
  }
  return summarize(sups, true);
}

FunctionClassHandle constant_class(std::vector<double> values) {
  FunctionClassHandle cls;
  cls.output_dim = 1;
  cls.evaluate = [](std::span<const double> params, std::span<const double>) {
    return Vector{params[0]};
  };
  for (double v : values) cls.candidates.push_back(Vector{v});
  return cls;
}

namespace {

void project_ball(Vector& p, double radius) {
  const double norm = std::sqrt(kernels::dot(p, p));
  if (norm > radius) {
    for (auto& v : p) v *= radius / norm;
  }
}

Vector sample_ball(Rng& rng, std::size_t dim, double radius) {
  Vector p = gaussian_vector(rng, dim, 1.0);
  const double norm = std::sqrt(kernels::dot(p, p));
  const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
  for (auto& v : p) v *= norm > 0.0 ? r / norm : 0.0;
  return p;
}

}  // namespace

FunctionClassHandle linear_ball_class(std::size_t input_dim, double radius) {
  FunctionClassHandle cls;
  cls.output_dim = 1;
  cls.evaluate = [](std::span<const double> params, std::span<const double> x) {
    return Vector{kernels::dot(params, x)};
  };
  cls.sampler = [input_dim, radius](Rng& rng) { return sample_ball(rng, input_dim, radius); };
  cls.project = [radius](Vector& p) { project_ball(p, radius); };
  cls.samples_per_draw = 64;
  cls.refine_steps = 64;
  cls.refine_scale = 0.25 * radius;
  return cls;
}

FunctionClassHandle relu_repr_class(std::size_t input_dim, std::size_t hidden, double radius) {
  FunctionClassHandle cls;
  cls.output_dim = hidden;
  const std::size_t stride = input_dim + 1;
  cls.evaluate = [hidden, stride](std::span<const double> params, std::span<const double> x) {
    Vector out(hidden);
    for (std::size_t k = 0; k < hidden; ++k) {
      const auto row = params.subspan(k * stride, stride - 1);
      out[k] = std::max(0.0, kernels::dot(row, x) + params[k * stride + stride - 1]);
    }
    return out;
  };
  const std::size_t dim = hidden * stride;
  cls.sampler = [dim, radius](Rng& rng) { return sample_ball(rng, dim, radius); };
  cls.project = [radius](Vector& p) { project_ball(p, radius); };
  cls.samples_per_draw = 64;
  cls.refine_steps = 32;
  cls.refine_scale = 0.1 * radius;
  return cls;
}

}  // namespace mtil::complexity
