#pragma once

// A small fully connected network (ReLU hidden layers, linear output) with a
// hand-written backward pass, and the Adam / SGD optimizers that train it.

#include <cstddef>
#include <span>
#include <vector>

#include "fleetsim/random.hpp"

namespace fleetsim {

class Mlp {
 public:
  Mlp() = default;
  // sizes = {inputs, hidden..., outputs}; parameters start at zero.
  explicit Mlp(std::vector<int> sizes);

  const std::vector<int>& sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  std::size_t param_count() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  // He-uniform weights, zero biases.
  void init(Rng& rng);

  // act[0] is the input, act[l] the output of layer l (post-ReLU for hidden
  // layers, linear for the last).
  struct Tape {
    std::vector<std::vector<double>> act;
  };

  void forward(std::span<const double> x, Tape& tape) const;
  std::vector<double> predict(std::span<const double> x) const;

  // Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
  void backward(const Tape& tape, std::span<const double> d_out, std::span<double> grad) const;

 private:
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }

  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;  // start of each layer's W, followed by its bias
  std::vector<double> params_;
};

class Adam {
 public:
  Adam() = default;
  Adam(std::size_t size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double epsilon = 1e-8);

  void step(std::span<double> params, std::span<const double> grad);

 private:
  double lr_ = 1e-3;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

}  // namespace fleetsim
