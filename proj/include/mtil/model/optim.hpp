#pragma once

#include "mtil/model/model.hpp"
#include "mtil/numkit/numkit.hpp"

namespace mtil::model {

// Adam moments for each parameter block of a model record.

class ReprAdam {
 public:
  ReprAdam(const ReprParams& shape, AdamConfig cfg)
      : weight_(shape.weight.size(), cfg), bias_(shape.bias.size(), cfg) {}
  void descend(ReprParams& p, const ReprParams& grad) {
    weight_.step(p.weight.flat(), grad.weight.flat());
    bias_.step(p.bias, grad.bias);
  }

 private:
  AdamState weight_;
  AdamState bias_;
};

class HeadAdam {
 public:
  HeadAdam(const HeadParams& shape, AdamConfig cfg) : weight_(shape.weight.size(), cfg) {}
  void descend(HeadParams& p, const HeadParams& grad) { weight_.step(p.weight.flat(), grad.weight.flat()); }

 private:
  AdamState weight_;
};

class DiscAdam {
 public:
  DiscAdam(const DiscParams& shape, AdamConfig cfg)
      : hidden_weight_(shape.hidden_weight.size(), cfg),
        hidden_bias_(shape.hidden_bias.size(), cfg),
        weight_(shape.weight.size(), cfg),
        bias_(1, cfg) {}

  // Gradient ascent on the payoff.
  void ascend(DiscParams& p, DiscParams grad) {
    for (auto& g : grad.hidden_weight.flat()) g = -g;
    for (auto& g : grad.hidden_bias) g = -g;
    for (auto& g : grad.weight) g = -g;
    grad.bias = -grad.bias;
    hidden_weight_.step(p.hidden_weight.flat(), grad.hidden_weight.flat());
    hidden_bias_.step(p.hidden_bias, grad.hidden_bias);
    weight_.step(p.weight, grad.weight);
    bias_.step(std::span<double>(&p.bias, 1), std::span<const double>(&grad.bias, 1));
  }

 private:
  AdamState hidden_weight_;
  AdamState hidden_bias_;
  AdamState weight_;
  AdamState bias_;
};

}  // namespace mtil::model
