#include "lanca/metrics/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lanca/autodiff/nn.hpp"
#include "lanca/scm/synthetic.hpp"
#include "lanca/train/trainer.hpp"

namespace lanca::metrics {

namespace {

struct Standardized {
  std::vector<double> values;
  double mean = 0.0;
  double scale = 1.0;
};

Standardized standardize(std::span<const double> v) {
  Standardized out;
  const double n = static_cast<double>(v.size());
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double var = 0.0;
  for (double x : v) var += (x - out.mean) * (x - out.mean);
  out.scale = std::sqrt(var / n);
  if (!(out.scale > 0.0)) out.scale = 1.0;
  out.values.reserve(v.size());
  for (double x : v) out.values.push_back((x - out.mean) / out.scale);
  return out;
}

Matrix as_column(std::span<const double> v) {
  return Matrix(v.size(), 1, std::vector<double>(v.begin(), v.end()));
}

}  // namespace

std::vector<double> fit_residuals(std::span<const double> parent, std::span<const double> child,
                                  std::uint64_t seed, std::size_t hidden, std::size_t steps) {
  if (parent.size() != child.size() || parent.size() < 2) {
    throw std::invalid_argument("fit_residuals: need matching samples (>= 2)");
  }
  const Standardized p = standardize(parent);
  const Standardized c = standardize(child);
  const std::size_t n = parent.size();
  Rng rng = derive_rng(seed, 31);
  const ad::Mlp f({1, hidden, hidden, 1}, ad::Activation::kTanh, rng);
  train::Adam adam;
  adam.add_group("regressor", f.parameters(), 1e-2);

  const std::size_t batch = std::min<std::size_t>(n, 512);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::size_t cursor = n;
  std::vector<double> xb(batch), yb(batch);
  for (std::size_t step = 0; step < steps; ++step) {
    if (cursor + batch > n) {
      std::shuffle(idx.begin(), idx.end(), rng);
      cursor = 0;
    }
    for (std::size_t k = 0; k < batch; ++k) {
      xb[k] = p.values[idx[cursor + k]];
      yb[k] = c.values[idx[cursor + k]];
    }
    cursor += batch;
    // Linear decay to a tenth of the initial rate sharpens the final fit.
    adam.groups()[0].lr = 1e-2 * (1.0 - 0.9 * static_cast<double>(step) / static_cast<double>(steps));
    const ad::Tensor pred = f(ad::Tensor::constant({batch, 1}, xb));
    const ad::Tensor loss = ad::mean(ad::square(pred - ad::Tensor::constant({batch, 1}, yb)));
    adam.zero_grad();
    ad::backward(loss);
    adam.step();
  }
  const Matrix pred = f(ad::Tensor::constant({n, 1}, p.values)).to_matrix();
  std::vector<double> out(n);
  for (std::size_t r = 0; r < n; ++r) out[r] = (c.values[r] - pred(r, 0)) * c.scale;
  return out;
}

Theorem1Report verify_theorem1(const Theorem1Config& config) {
  if (config.distorted_factor > 1) {
    throw std::invalid_argument("verify_theorem1: distorted_factor must be 0 or 1");
  }
  const scm::Generated g = scm::gen_chain(config.n_samples, config.seed);
  std::vector<std::array<double, 3>> coeffs(2, {1.0, 0.0, 0.0});
  coeffs[config.distorted_factor] = config.psi;
  const Matrix z = scm::apply_componentwise_distortion(g.batch.s, coeffs);

  const std::vector<double> parent = z.column(0);
  const std::vector<double> residual =
      fit_residuals(parent, z.column(1), config.seed, 16, config.fit_steps);
  Theorem1Report r;
  r.psi = config.psi;
  r.distorted_factor = config.distorted_factor;
  r.residual_vs_parent = independence_test(as_column(residual), as_column(parent), config.test);
  const Standardized st = standardize(residual);
  r.residual_std = st.scale;
  return r;
}

Prop1Report verify_prop1(const Prop1Config& config) {
  const scm::Generated g = scm::gen_chain(config.n_samples, config.seed);
  const Matrix& s = g.batch.s;
  const Matrix z = scm::gen_spurious_encoding(g.batch, g.scm);
  const std::vector<double> s1 = s.column(0);

  Prop1Report r;
  r.spurious = independence_test(as_column(z.column(0)), as_column(z.column(1)), config.test);
  r.raw = independence_test(as_column(s1), as_column(s.column(1)), config.test);
  // The true graph abducts the same residual the spurious encoding exposes.
  std::vector<double> noise(s.rows());
  for (std::size_t k = 0; k < s.rows(); ++k) {
    noise[k] = s(k, 1) - g.scm.mechanisms[1].evaluate(std::vector<double>{s(k, 0), s(k, 1)});
  }
  r.true_graph = independence_test(as_column(s1), as_column(noise), config.test);
  for (std::size_t k = 0; k < s.rows(); ++k) {
    const double s2 = z(k, 1) + g.scm.mechanisms[1].evaluate(std::vector<double>{z(k, 0), 0.0});
    r.inversion_error = std::max({r.inversion_error, std::abs(z(k, 0) - s(k, 0)), std::abs(s2 - s(k, 1))});
  }
  return r;
}

void to_json(nlohmann::json& j, const IndependenceResult& r) {
  j = nlohmann::json{{"statistic", r.statistic}, {"p_value", r.p_value}, {"independent", r.independent}};
}

void to_json(nlohmann::json& j, const Theorem1Report& r) {
  j = nlohmann::json{{"psi", r.psi},
                     {"distorted_factor", r.distorted_factor},
                     {"residual_vs_parent", r.residual_vs_parent},
                     {"residual_std", r.residual_std}};
}

void to_json(nlohmann::json& j, const Prop1Report& r) {
  j = nlohmann::json{{"spurious", r.spurious},
                     {"raw", r.raw},
                     {"true_graph", r.true_graph},
                     {"inversion_error", r.inversion_error},
                     {"expected_pattern", r.expected_pattern()}};
}

}  // namespace lanca::metrics
