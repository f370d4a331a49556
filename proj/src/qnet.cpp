#include "fleetsim/qnet.hpp"

#include <cmath>

#include "fleetsim/error.hpp"
#include "fleetsim/kernels.hpp"

namespace fleetsim {

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw Error(ErrorKind::invalid_argument, "network needs at least two layer sizes");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] < 1 || sizes_[l + 1] < 1) throw Error(ErrorKind::invalid_argument, "layer sizes must be >= 1");
    offsets_.push_back(total);
    total += static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1] + sizes_[l + 1];
  }
  params_.assign(total, 0.0);
}

void Mlp::init(Rng& rng) {
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const auto in = static_cast<std::size_t>(sizes_[l]);
    const auto out = static_cast<std::size_t>(sizes_[l + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(in));
    double* w = params_.data() + weight_offset(l);
    for (std::size_t i = 0; i < in * out; ++i) w[i] = (2.0 * uniform01(rng) - 1.0) * limit;
    for (std::size_t j = 0; j < out; ++j) w[in * out + j] = 0.0;
  }
}

void Mlp::forward(std::span<const double> x, Tape& tape) const {
  if (static_cast<int>(x.size()) != input_size()) {
    throw Error(ErrorKind::invalid_argument, "network input has the wrong length");
  }
  const kernels::KernelTable& k = kernels::active();
  const std::size_t layers = sizes_.size() - 1;
  tape.act.resize(sizes_.size());
  tape.act[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const auto in = static_cast<std::size_t>(sizes_[l]);
    const auto out = static_cast<std::size_t>(sizes_[l + 1]);
    const double* w = params_.data() + weight_offset(l);
    const double* b = w + in * out;
    const std::vector<double>& prev = tape.act[l];
    std::vector<double>& next = tape.act[l + 1];
    next.resize(out);
    const bool hidden = l + 1 < layers;
    for (std::size_t j = 0; j < out; ++j) {
      const double z = k.dot(w + j * in, prev.data(), in) + b[j];
      next[j] = hidden && z < 0.0 ? 0.0 : z;
    }
  }
}

std::vector<double> Mlp::predict(std::span<const double> x) const {
  Tape tape;
  forward(x, tape);
  return std::move(tape.act.back());
}

void Mlp::backward(const Tape& tape, std::span<const double> d_out, std::span<double> grad) const {
  const kernels::KernelTable& k = kernels::active();
  std::vector<double> delta(d_out.begin(), d_out.end());
  std::vector<double> prev_delta;
  for (std::size_t l = sizes_.size() - 1; l-- > 0;) {
    const auto in = static_cast<std::size_t>(sizes_[l]);
    const auto out = static_cast<std::size_t>(sizes_[l + 1]);
    const double* w = params_.data() + weight_offset(l);
    double* gw = grad.data() + weight_offset(l);
    double* gb = gw + in * out;
    const std::vector<double>& input = tape.act[l];
    for (std::size_t j = 0; j < out; ++j) {
      if (delta[j] == 0.0) continue;
      k.axpy(delta[j], input.data(), gw + j * in, in);
      gb[j] += delta[j];
    }
    if (l == 0) break;
    prev_delta.assign(in, 0.0);
    for (std::size_t j = 0; j < out; ++j) {
      if (delta[j] != 0.0) k.axpy(delta[j], w + j * in, prev_delta.data(), in);
    }
    // ReLU derivative: the stored activation is zero exactly where the unit was off.
    for (std::size_t i = 0; i < in; ++i) {
      if (input[i] <= 0.0) prev_delta[i] = 0.0;
    }
    delta.swap(prev_delta);
  }
}

Adam::Adam(std::size_t size, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon), m_(size, 0.0), v_(size, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

}  // namespace fleetsim
