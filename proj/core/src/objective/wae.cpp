#include "lanca/objective/wae.hpp"

#include <cmath>

#include "lanca/autodiff/serialize.hpp"

namespace lanca::objective {

namespace {

void require_finite(const ad::Tensor& t, const char* name) {
  const double v = t.item();
  if (!std::isfinite(v)) throw DivergenceError(name, v);
}

ad::Tensor off_diagonal_mask(std::size_t n) {
  std::vector<double> mask(n * n, 1.0);
  for (std::size_t i = 0; i < n; ++i) mask[i * n + i] = 0.0;
  return ad::Tensor::constant({n, n}, std::move(mask));
}

}  // namespace

std::string to_string(KernelKind kind) { return kind == KernelKind::kRbf ? "rbf" : "imq"; }

KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "rbf" || name == "RBF") return KernelKind::kRbf;
  if (name == "imq" || name == "IMQ") return KernelKind::kImq;
  throw std::invalid_argument("unknown kernel kind '" + name + "'");
}

std::vector<double> default_bandwidths(KernelKind kind, std::size_t latent_dim) {
  const double n = static_cast<double>(latent_dim);
  std::vector<double> out;
  if (kind == KernelKind::kRbf) {
    for (double f : {0.25, 0.5, 1.0, 2.0, 4.0}) out.push_back(f * std::sqrt(n / 2.0));
  } else {
    for (double f : {0.1, 0.5, 1.0, 2.0, 10.0}) out.push_back(f * 2.0 * n);
  }
  return out;
}

void LossWeights::validate() const {
  const std::pair<const char*, double> weights[] = {
      {"lambda_scm", lambda_scm}, {"beta", beta}, {"gamma1", gamma1}, {"gamma2", gamma2}};
  for (const auto& [name, v] : weights) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string("LossWeights: ") + name + " must be >= 0");
    }
  }
  if (!(sparsity_prior > 0.0 && sparsity_prior < 1.0)) {
    throw std::invalid_argument("LossWeights: sparsity_prior must lie in (0, 1)");
  }
  for (double b : bandwidths) {
    if (!(b > 0.0)) throw std::invalid_argument("LossWeights: bandwidths must be > 0");
  }
}

std::vector<double> LossWeights::resolved_bandwidths(std::size_t latent_dim) const {
  return bandwidths.empty() ? default_bandwidths(kernel, latent_dim) : bandwidths;
}

void to_json(nlohmann::json& j, const LossWeights& w) {
  j = nlohmann::json{{"lambda_scm", w.lambda_scm},        {"beta", w.beta},
                     {"gamma1", w.gamma1},                {"gamma2", w.gamma2},
                     {"sparsity_prior", w.sparsity_prior}, {"kernel", to_string(w.kernel)},
                     {"bandwidths", w.bandwidths}};
}

void from_json(const nlohmann::json& j, LossWeights& w) {
  const LossWeights d;
  w.lambda_scm = j.value("lambda_scm", d.lambda_scm);
  w.beta = j.value("beta", d.beta);
  w.gamma1 = j.value("gamma1", d.gamma1);
  w.gamma2 = j.value("gamma2", d.gamma2);
  w.sparsity_prior = j.value("sparsity_prior", d.sparsity_prior);
  w.kernel = kernel_kind_from_string(j.value("kernel", to_string(d.kernel)));
  w.bandwidths = j.value("bandwidths", d.bandwidths);
}

Autoencoder::Autoencoder(std::size_t input_dim, std::size_t latent_dim,
                         std::vector<std::size_t> hidden, ad::Activation act, Rng& rng)
    : input_dim_(input_dim), latent_dim_(latent_dim), hidden_(std::move(hidden)), act_(act) {
  if (input_dim == 0 || latent_dim == 0) {
    throw std::invalid_argument("Autoencoder: dimensions must be >= 1");
  }
  std::vector<std::size_t> enc{input_dim};
  enc.insert(enc.end(), hidden_.begin(), hidden_.end());
  enc.push_back(latent_dim);
  std::vector<std::size_t> dec(enc.rbegin(), enc.rend());
  encoder_ = ad::Mlp(enc, act, rng);
  decoder_ = ad::Mlp(dec, act, rng);
}

ad::Tensor Autoencoder::encode(const ad::Tensor& x) const {
  if (x.dim() != 2 || x.cols() != input_dim_) {
    throw std::invalid_argument("encode: expected [N x " + std::to_string(input_dim_) + "], got " +
                                ad::shape_to_string(x.shape()));
  }
  return encoder_(x);
}

ad::Tensor Autoencoder::decode(const ad::Tensor& z) const {
  if (z.dim() != 2 || z.cols() != latent_dim_) {
    throw std::invalid_argument("decode: expected [N x " + std::to_string(latent_dim_) +
                                "], got " + ad::shape_to_string(z.shape()));
  }
  return decoder_(z);
}

std::vector<ad::Tensor> Autoencoder::parameters() const {
  auto out = encoder_.parameters();
  auto dec = decoder_.parameters();
  out.insert(out.end(), dec.begin(), dec.end());
  return out;
}

void to_json(nlohmann::json& j, const Autoencoder& ae) {
  const auto params = ae.parameters();
  j = nlohmann::json{{"input_dim", ae.input_dim()},
                     {"latent_dim", ae.latent_dim()},
                     {"hidden", ae.hidden()},
                     {"activation", ad::to_string(ae.activation())},
                     {"parameters", ad::tensors_to_json(params)}};
}

void from_json(const nlohmann::json& j, Autoencoder& ae) {
  Rng rng(0);
  ae = Autoencoder(j.at("input_dim").get<std::size_t>(), j.at("latent_dim").get<std::size_t>(),
                   j.at("hidden").get<std::vector<std::size_t>>(),
                   ad::activation_from_string(j.at("activation").get<std::string>()), rng);
  auto params = ae.parameters();
  ad::load_tensors(j.at("parameters"), params);
}

ad::Tensor recon_loss(const ad::Tensor& x, const ad::Tensor& z, const ad::Tensor& z_scm,
                      const Autoencoder& ae, double lambda_scm) {
  if (z.shape() != z_scm.shape()) {
    throw std::invalid_argument("recon_loss: z " + ad::shape_to_string(z.shape()) + " vs z_scm " +
                                ad::shape_to_string(z_scm.shape()));
  }
  const double inv_batch = 1.0 / static_cast<double>(x.rows());
  const ad::Tensor direct = ad::sum(ad::square(x - ae.decode(z))) * inv_batch;
  if (lambda_scm == 0.0) return direct;
  const ad::Tensor via_scm = ad::sum(ad::square(x - ae.decode(z_scm))) * inv_batch;
  return direct + via_scm * lambda_scm;
}

ad::Tensor kernel_matrix(const ad::Tensor& a, const ad::Tensor& b, KernelKind kind,
                         std::span<const double> bandwidths) {
  if (bandwidths.empty()) throw std::invalid_argument("kernel_matrix: no bandwidths");
  const ad::Tensor d = ad::pairwise_sq_dist(a, b);
  ad::Tensor k;
  for (double h : bandwidths) {
    if (!(h > 0.0)) throw std::invalid_argument("kernel_matrix: bandwidths must be > 0");
    const ad::Tensor term = kind == KernelKind::kRbf
                                ? ad::exp(d * (-1.0 / (2.0 * h * h)))
                                : ad::div(ad::Tensor::scalar(h), d + h);
    k = k.defined() ? k + term : term;
  }
  return k;
}

ad::Tensor mmd_loss(const ad::Tensor& residuals, const ad::Tensor& prior, KernelKind kind,
                    std::span<const double> bandwidths) {
  const std::size_t n = residuals.rows(), m = prior.rows();
  if (n < 2 || m < 2) {
    throw std::invalid_argument("mmd_loss: need at least 2 samples per side, got " +
                                std::to_string(n) + " and " + std::to_string(m));
  }
  if (residuals.cols() != prior.cols()) {
    throw std::invalid_argument("mmd_loss: dimension mismatch " +
                                ad::shape_to_string(residuals.shape()) + " vs " +
                                ad::shape_to_string(prior.shape()));
  }
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  const ad::Tensor kxx = ad::sum(kernel_matrix(residuals, residuals, kind, bandwidths) *
                                 off_diagonal_mask(n)) * (1.0 / (nn * (nn - 1.0)));
  const ad::Tensor kyy = ad::sum(kernel_matrix(prior, prior, kind, bandwidths) *
                                 off_diagonal_mask(m)) * (1.0 / (mm * (mm - 1.0)));
  // Both orientations of the cross term so that mmd(X, Y) == mmd(Y, X) bit for bit.
  const ad::Tensor kxy = (ad::sum(kernel_matrix(residuals, prior, kind, bandwidths)) +
                          ad::sum(kernel_matrix(prior, residuals, kind, bandwidths))) *
                         (1.0 / (nn * mm));
  return kxx + kyy - kxy;
}

DivergenceError::DivergenceError(std::string component, double value)
    : std::runtime_error("training diverged: " + component + " = " + std::to_string(value)),
      component_(std::move(component)) {}

ad::Tensor total_loss(const LossComponents& parts, const LossWeights& weights,
                      double gamma1_effective) {
  require_finite(parts.recon, "L_recon");
  require_finite(parts.indep, "L_indep");
  require_finite(parts.sparse, "L_sparse");
  require_finite(parts.ent, "L_ent");
  ad::Tensor total = parts.recon + parts.indep * weights.beta;
  if (gamma1_effective != 0.0) total = total + parts.sparse * gamma1_effective;
  if (weights.gamma2 != 0.0) total = total + parts.ent * weights.gamma2;
  return total;
}

}  // namespace lanca::objective
