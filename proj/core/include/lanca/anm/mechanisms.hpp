#pragma once

#include <cstddef>
#include <vector>

#include <nlohmann/json.hpp>

#include "lanca/autodiff/nn.hpp"
#include "lanca/matrix.hpp"
#include "lanca/random.hpp"

namespace lanca::anm {

struct Intervention {
  std::size_t index;
  double value;
};

// One MLP f_i per latent node. f_i reads the full latent vector gated by
// column i of the adjacency, so a root still has a learnable constant output.
class MechanismSet {
 public:
  MechanismSet() = default;
  // hidden_layers = 2 gives n -> hidden -> hidden -> 1; 0 gives a linear map.
  MechanismSet(std::size_t n, std::size_t hidden, ad::Activation act, Rng& rng,
               std::size_t hidden_layers = 2);

  std::size_t n_nodes() const { return mlps_.size(); }
  std::size_t hidden_dim() const { return hidden_; }
  std::size_t hidden_layers() const { return hidden_layers_; }
  ad::Activation activation() const { return act_; }

  // f_i(z o A[:, i]) as [N x 1].
  ad::Tensor predict_node(const ad::Tensor& z, const ad::Tensor& adjacency, std::size_t i) const;
  // All nodes, [N x n].
  ad::Tensor predict(const ad::Tensor& z, const ad::Tensor& adjacency) const;

  // Walks the topological order of the (binary) adjacency values:
  // z_scm_i = f_i(z_scm o A[:, i]) + eps_i, with eps cut from the tape unless
  // detach_residuals is false. Columns not yet visited read from `init`.
  ad::Tensor regenerate(const ad::Tensor& residuals, const ad::Tensor& adjacency,
                        const ad::Tensor& init, bool detach_residuals = true) const;

  // Abduction, action, prediction on plain values. A node whose parents all
  // keep their factual values in a sample keeps its own factual value there.
  Matrix counterfactual(const Matrix& z, const std::vector<Intervention>& interventions,
                        const Matrix& adjacency) const;

  std::vector<ad::Tensor> parameters() const;
  const std::vector<ad::Mlp>& mlps() const { return mlps_; }
  std::vector<ad::Mlp>& mlps() { return mlps_; }

 private:
  void require_dims(const ad::Tensor& z, const ad::Tensor& adjacency) const;

  std::vector<ad::Mlp> mlps_;
  std::size_t hidden_ = 0;
  std::size_t hidden_layers_ = 2;
  ad::Activation act_ = ad::Activation::kTanh;
};

// eps = z - z_hat.
ad::Tensor abduct(const ad::Tensor& z, const ad::Tensor& z_hat);

void to_json(nlohmann::json& j, const MechanismSet& m);
void from_json(const nlohmann::json& j, MechanismSet& m);

}  // namespace lanca::anm
