#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lanca/autodiff/ops.hpp"
#include "lanca/random.hpp"

namespace lanca::ad {

enum class Activation { kTanh, kSilu, kGelu, kRelu };

std::string to_string(Activation act);
Activation activation_from_string(std::string_view name);
Tensor activate(Activation act, const Tensor& x);

// y = x . W + b with W: [in x out], b: [1 x out].
struct Linear {
  Tensor weight;
  Tensor bias;

  static Linear glorot(std::size_t in, std::size_t out, Rng& rng);
  Tensor operator()(const Tensor& x) const { return matmul(x, weight) + bias; }
  std::size_t in_features() const { return weight.shape()[0]; }
  std::size_t out_features() const { return weight.shape()[1]; }
};

// Fully connected stack; the activation is applied between layers, never
// after the last one.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::vector<std::size_t>& widths, Activation act, Rng& rng);

  Tensor operator()(const Tensor& x) const;

  std::vector<Tensor> parameters() const;
  const std::vector<Linear>& layers() const { return layers_; }
  std::vector<Linear>& layers() { return layers_; }
  Activation activation() const { return act_; }
  std::size_t in_features() const { return layers_.front().in_features(); }
  std::size_t out_features() const { return layers_.back().out_features(); }

 private:
  std::vector<Linear> layers_;
  Activation act_ = Activation::kTanh;
};

}  // namespace lanca::ad
