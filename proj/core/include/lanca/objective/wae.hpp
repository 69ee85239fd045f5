#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lanca/autodiff/nn.hpp"
#include "lanca/random.hpp"

namespace lanca::objective {

enum class KernelKind { kRbf, kImq };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

// RBF: sigma in {0.25, 0.5, 1, 2, 4} * sqrt(n / 2).
// IMQ: C in {0.1, 0.5, 1, 2, 10} * 2n.
std::vector<double> default_bandwidths(KernelKind kind, std::size_t latent_dim);

struct LossWeights {
  double lambda_scm = 1.0;
  double beta = 10.0;
  double gamma1 = 0.05;
  double gamma2 = 1.0;
  double sparsity_prior = 0.01;
  KernelKind kernel = KernelKind::kImq;
  std::vector<double> bandwidths;  // empty: default_bandwidths for the latent dim

  void validate() const;
  std::vector<double> resolved_bandwidths(std::size_t latent_dim) const;
};

void to_json(nlohmann::json& j, const LossWeights& w);
void from_json(const nlohmann::json& j, LossWeights& w);

// Deterministic encoder D -> hidden... -> n and decoder n -> reversed hidden... -> D.
class Autoencoder {
 public:
  Autoencoder() = default;
  Autoencoder(std::size_t input_dim, std::size_t latent_dim, std::vector<std::size_t> hidden,
              ad::Activation act, Rng& rng);

  ad::Tensor encode(const ad::Tensor& x) const;
  ad::Tensor decode(const ad::Tensor& z) const;

  std::size_t input_dim() const { return input_dim_; }
  std::size_t latent_dim() const { return latent_dim_; }
  const std::vector<std::size_t>& hidden() const { return hidden_; }
  ad::Activation activation() const { return act_; }
  std::vector<ad::Tensor> parameters() const;

 private:
  ad::Mlp encoder_, decoder_;
  std::size_t input_dim_ = 0;
  std::size_t latent_dim_ = 0;
  std::vector<std::size_t> hidden_;
  ad::Activation act_ = ad::Activation::kSilu;
};

void to_json(nlohmann::json& j, const Autoencoder& ae);
void from_json(const nlohmann::json& j, Autoencoder& ae);

// mean_b ||x_b - D(z_b)||^2 + lambda_scm * mean_b ||x_b - D(z_scm_b)||^2.
ad::Tensor recon_loss(const ad::Tensor& x, const ad::Tensor& z, const ad::Tensor& z_scm,
                      const Autoencoder& ae, double lambda_scm);

// Sum over bandwidths of the base kernel, [N x M].
ad::Tensor kernel_matrix(const ad::Tensor& a, const ad::Tensor& b, KernelKind kind,
                         std::span<const double> bandwidths);

// Unbiased MMD^2 (diagonals of the within-sample terms excluded).
ad::Tensor mmd_loss(const ad::Tensor& residuals, const ad::Tensor& prior, KernelKind kind,
                    std::span<const double> bandwidths);

struct LossComponents {
  ad::Tensor recon;
  ad::Tensor indep;
  ad::Tensor sparse;
  ad::Tensor ent;
};

// Thrown when a loss component is NaN or infinite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::string component, double value);
  const std::string& component() const { return component_; }

 private:
  std::string component_;
};

// recon + beta * indep + gamma1_effective * sparse + gamma2 * ent.
ad::Tensor total_loss(const LossComponents& parts, const LossWeights& weights,
                      double gamma1_effective);

}  // namespace lanca::objective
