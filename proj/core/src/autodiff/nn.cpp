#include "lanca/autodiff/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace lanca::ad {

std::string to_string(Activation act) {
  switch (act) {
    case Activation::kTanh: return "tanh";
    case Activation::kSilu: return "silu";
    case Activation::kGelu: return "gelu";
    case Activation::kRelu: return "relu";
  }
  return "tanh";
}

Activation activation_from_string(std::string_view name) {
  if (name == "tanh" || name == "Tanh") return Activation::kTanh;
  if (name == "silu" || name == "SiLU") return Activation::kSilu;
  if (name == "gelu" || name == "GELU") return Activation::kGelu;
  if (name == "relu" || name == "ReLU") return Activation::kRelu;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

Tensor activate(Activation act, const Tensor& x) {
  switch (act) {
    case Activation::kTanh: return tanh(x);
    case Activation::kSilu: return silu(x);
    case Activation::kGelu: return gelu(x);
    case Activation::kRelu: return relu(x);
  }
  return x;
}

Linear Linear::glorot(std::size_t in, std::size_t out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::vector<double> w(in * out);
  for (double& v : w) v = uniform(rng, -limit, limit);
  return Linear{Tensor::parameter({in, out}, std::move(w)),
                Tensor::parameter({1, out}, std::vector<double>(out, 0.0))};
}

Mlp::Mlp(const std::vector<std::size_t>& widths, Activation act, Rng& rng) : act_(act) {
  if (widths.size() < 2) throw std::invalid_argument("Mlp: need at least input and output width");
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    layers_.push_back(Linear::glorot(widths[k], widths[k + 1], rng));
  }
}

Tensor Mlp::operator()(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    h = layers_[k](h);
    if (k + 1 < layers_.size()) h = activate(act_, h);
  }
  return h;
}

std::vector<Tensor> Mlp::parameters() const {
  std::vector<Tensor> out;
  for (const auto& l : layers_) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  }
  return out;
}

}  // namespace lanca::ad
