#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include <nlohmann/json.hpp>

#include "lanca/metrics/independence.hpp"

namespace lanca::metrics {

// Least-squares fit of a 1 -> hidden -> hidden -> 1 tanh MLP; returns
// child - f(parent).
std::vector<double> fit_residuals(std::span<const double> parent, std::span<const double> child,
                                  std::uint64_t seed, std::size_t hidden = 16,
                                  std::size_t steps = 1500);

struct Theorem1Config {
  std::size_t n_samples = 5000;
  std::uint64_t seed = 0;
  // psi(t) = a t + b + c t^2 applied to one factor of the two-node chain.
  std::array<double, 3> psi = {1.0, 0.0, 0.3};
  std::size_t distorted_factor = 1;  // 1 = effect (endogenous), 0 = cause
  std::size_t fit_steps = 1500;
  IndependenceConfig test;
};

struct Theorem1Report {
  std::array<double, 3> psi{};
  std::size_t distorted_factor = 1;
  IndependenceResult residual_vs_parent;
  double residual_std = 0.0;
};

// Distorts the chain, refits the mechanism and tests residual independence
// from the parent. Throws if psi is not strictly monotone on the data.
Theorem1Report verify_theorem1(const Theorem1Config& config);

struct Prop1Config {
  std::size_t n_samples = 5000;
  std::uint64_t seed = 0;
  IndependenceConfig test;
};

struct Prop1Report {
  IndependenceResult spurious;    // z1 vs z2 of the edge-free encoding
  IndependenceResult raw;         // s1 vs s2
  IndependenceResult true_graph;  // s1 vs s2 - h2(s1)
  double inversion_error = 0.0;   // max |s - s recovered from z|
  // Spurious and true-graph residuals independent, raw chain dependent.
  bool expected_pattern() const {
    return spurious.independent && true_graph.independent && !raw.independent;
  }
};

Prop1Report verify_prop1(const Prop1Config& config);

void to_json(nlohmann::json& j, const IndependenceResult& r);
void to_json(nlohmann::json& j, const Theorem1Report& r);
void to_json(nlohmann::json& j, const Prop1Report& r);

}  // namespace lanca::metrics
