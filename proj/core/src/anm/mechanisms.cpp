#include "lanca/anm/mechanisms.hpp"

#include <stdexcept>
#include <string>

#include "lanca/autodiff/serialize.hpp"
#include "lanca/dag/structure.hpp"

namespace lanca::anm {

namespace {

std::vector<std::size_t> order_or_throw(const Matrix& adjacency, const char* what) {
  auto order = dag::topological_order(adjacency);
  if (!order) throw std::invalid_argument(std::string(what) + ": adjacency has a cycle");
  return *order;
}

}  // namespace

MechanismSet::MechanismSet(std::size_t n, std::size_t hidden, ad::Activation act, Rng& rng,
                           std::size_t hidden_layers)
    : hidden_(hidden), hidden_layers_(hidden_layers), act_(act) {
  if (n == 0) throw std::invalid_argument("MechanismSet: need at least one node");
  if (hidden_layers > 0 && hidden == 0) {
    throw std::invalid_argument("MechanismSet: hidden width must be >= 1");
  }
  std::vector<std::size_t> widths{n};
  for (std::size_t k = 0; k < hidden_layers; ++k) widths.push_back(hidden);
  widths.push_back(1);
  for (std::size_t i = 0; i < n; ++i) mlps_.emplace_back(widths, act, rng);
}

void MechanismSet::require_dims(const ad::Tensor& z, const ad::Tensor& adjacency) const {
  const std::size_t n = n_nodes();
  if (z.dim() != 2 || z.cols() != n) {
    throw std::invalid_argument("MechanismSet: latent batch " + ad::shape_to_string(z.shape()) +
                                " does not have " + std::to_string(n) + " columns");
  }
  if (adjacency.dim() != 2 || adjacency.shape()[0] != n || adjacency.shape()[1] != n) {
    throw std::invalid_argument("MechanismSet: adjacency " +
                                ad::shape_to_string(adjacency.shape()) + " is not " +
                                std::to_string(n) + "x" + std::to_string(n));
  }
}

ad::Tensor MechanismSet::predict_node(const ad::Tensor& z, const ad::Tensor& adjacency,
                                      std::size_t i) const {
  const std::size_t n = n_nodes();
  const ad::Tensor mask = ad::reshape(ad::column(adjacency, i), {1, n});
  return mlps_[i](z * mask);
}

ad::Tensor MechanismSet::predict(const ad::Tensor& z, const ad::Tensor& adjacency) const {
  require_dims(z, adjacency);
  std::vector<ad::Tensor> cols;
  cols.reserve(n_nodes());
  for (std::size_t i = 0; i < n_nodes(); ++i) cols.push_back(predict_node(z, adjacency, i));
  return ad::concat_cols(cols);
}

ad::Tensor MechanismSet::regenerate(const ad::Tensor& residuals, const ad::Tensor& adjacency,
                                    const ad::Tensor& init, bool detach_residuals) const {
  require_dims(residuals, adjacency);
  require_dims(init, adjacency);
  if (residuals.shape() != init.shape()) {
    throw std::invalid_argument("regenerate: residuals " + ad::shape_to_string(residuals.shape()) +
                                " vs init " + ad::shape_to_string(init.shape()));
  }
  const auto order = order_or_throw(adjacency.to_matrix(), "regenerate");
  const ad::Tensor eps = detach_residuals ? ad::detach(residuals) : residuals;
  std::vector<ad::Tensor> cols;
  for (std::size_t i = 0; i < n_nodes(); ++i) cols.push_back(ad::column(init, i));
  for (std::size_t i : order) {
    const ad::Tensor current = ad::concat_cols(cols);
    cols[i] = predict_node(current, adjacency, i) + ad::column(eps, i);
  }
  return ad::concat_cols(cols);
}

Matrix MechanismSet::counterfactual(const Matrix& z, const std::vector<Intervention>& interventions,
                                    const Matrix& adjacency) const {
  const std::size_t n = n_nodes();
  if (z.cols() != n || adjacency.rows() != n || adjacency.cols() != n) {
    throw std::invalid_argument("counterfactual: expected " + std::to_string(n) + " latent columns");
  }
  std::vector<int> intervened(n, 0);
  std::vector<double> value(n, 0.0);
  for (const auto& iv : interventions) {
    if (iv.index >= n) {
      throw std::out_of_range("counterfactual: intervention index " + std::to_string(iv.index) +
                              " out of range for " + std::to_string(n) + " nodes");
    }
    if (intervened[iv.index]) {
      throw std::invalid_argument("counterfactual: duplicate intervention on node " +
                                  std::to_string(iv.index));
    }
    intervened[iv.index] = 1;
    value[iv.index] = iv.value;
  }
  const auto order = order_or_throw(adjacency, "counterfactual");
  const ad::Tensor a = ad::Tensor::constant(adjacency);
  const ad::Tensor z_t = ad::Tensor::constant(z);
  const Matrix eps = abduct(z_t, predict(z_t, a)).to_matrix();

  Matrix cf = z;
  for (std::size_t i : order) {
    if (intervened[i]) {
      for (std::size_t r = 0; r < cf.rows(); ++r) cf(r, i) = value[i];
      continue;
    }
    const Matrix pred = predict_node(ad::Tensor::constant(cf), a, i).to_matrix();
    for (std::size_t r = 0; r < cf.rows(); ++r) {
      bool unchanged = true;
      for (std::size_t p = 0; p < n && unchanged; ++p)
        if (adjacency(p, i) != 0.0 && cf(r, p) != z(r, p)) unchanged = false;
      cf(r, i) = unchanged ? z(r, i) : pred(r, 0) + eps(r, i);
    }
  }
  return cf;
}

std::vector<ad::Tensor> MechanismSet::parameters() const {
  std::vector<ad::Tensor> out;
  for (const auto& m : mlps_) {
    auto p = m.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

ad::Tensor abduct(const ad::Tensor& z, const ad::Tensor& z_hat) {
  if (z.shape() != z_hat.shape()) {
    throw std::invalid_argument("abduct: z " + ad::shape_to_string(z.shape()) + " vs z_hat " +
                                ad::shape_to_string(z_hat.shape()));
  }
  return z - z_hat;
}

void to_json(nlohmann::json& j, const MechanismSet& m) {
  const auto params = m.parameters();
  j = nlohmann::json{{"n", m.n_nodes()},
                     {"hidden", m.hidden_dim()},
                     {"hidden_layers", m.hidden_layers()},
                     {"activation", ad::to_string(m.activation())},
                     {"parameters", ad::tensors_to_json(params)}};
}

void from_json(const nlohmann::json& j, MechanismSet& m) {
  Rng rng(0);
  m = MechanismSet(j.at("n").get<std::size_t>(), j.at("hidden").get<std::size_t>(),
                   ad::activation_from_string(j.at("activation").get<std::string>()), rng,
                   j.at("hidden_layers").get<std::size_t>());
  auto params = m.parameters();
  ad::load_tensors(j.at("parameters"), params);
}

}  // namespace lanca::anm
