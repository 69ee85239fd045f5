#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lanca/matrix.hpp"

namespace lanca::scm {

// Structural function h_i of one ground-truth node, evaluated on raw
// (unstandardized) factor values.
struct Mechanism {
  enum class Kind {
    kRoot,
    kPendulumShadowLength,
    kPendulumShadowPosition,
    kFlowHeight,
    kFlowRate,
    kChainTanh,   // amplitude * tanh(slope * parent)
    kRandomMlp,   // sum_k w2_k tanh(w1_k . parents + b1_k) + b2
  };
  Kind kind = Kind::kRoot;
  std::vector<std::size_t> parents;
  std::vector<double> params;

  double evaluate(std::span<const double> raw_row) const;
};

std::string to_string(Mechanism::Kind kind);

struct GroundTruthSCM {
  std::string generator;
  std::vector<std::string> factor_names;
  Matrix adjacency;  // adjacency(i, j) = 1 means i -> j
  std::vector<Mechanism> mechanisms;
  std::vector<double> noise_std;  // raw std of the injected noise (0 for roots)
  double noise_scale_eta = 0.0;
  // s_standardized = (s_raw - mean) / scale
  std::vector<double> mean;
  std::vector<double> scale;

  std::size_t n_factors() const { return factor_names.size(); }
  std::vector<std::size_t> topological_order() const;

  // Residual of every node under the true mechanisms, in standardized units.
  // Root columns come back unchanged.
  Matrix abduct(const Matrix& s_standardized) const;
};

struct SampleBatch {
  Matrix s;      // N x n standardized factors
  Matrix x;      // N x D observations
  Matrix noise;  // N x n raw exogenous draws (roots: their own raw value)
  std::string generator;
  std::uint64_t seed = 0;
  double eta = 0.0;
};

enum class MixerKind { kIdentity, kAffine, kRandomSmoothMlp, kComponentwiseDistortion };

std::string to_string(MixerKind kind);
MixerKind mixer_kind_from_string(const std::string& name);

struct MixerSpec {
  MixerKind kind = MixerKind::kRandomSmoothMlp;
  std::size_t input_dim = 0;
  std::size_t output_dim = 10;
  std::uint64_t seed = 0;
  // Affine: x = W1 s + b1. Smooth MLP: x = W2 tanh(W1 s + b1) + b2.
  Matrix w1, w2;
  std::vector<double> b1, b2;
  // Componentwise distortion psi_i(t) = a_i t + b_i + c_i t^2, stored as (a, b, c).
  std::vector<std::array<double, 3>> distortion;

  static MixerSpec identity(std::size_t dim);
  static MixerSpec affine(std::size_t input_dim, std::size_t output_dim, std::uint64_t seed);
  // Hidden width equals output_dim; W1 has orthonormal columns and W2 is
  // orthogonal, so the map is injective.
  static MixerSpec random_smooth_mlp(std::size_t input_dim, std::size_t output_dim,
                                     std::uint64_t seed);
  static MixerSpec componentwise(std::vector<std::array<double, 3>> coefficients);
  static MixerSpec make(MixerKind kind, std::size_t input_dim, std::size_t output_dim,
                        std::uint64_t seed);
};

struct Generated {
  SampleBatch batch;
  GroundTruthSCM scm;
  MixerSpec mixer;
};

// Pendulum: angle, light -> shadow_len, shadow_pos (4 edges).
Generated gen_pendulum(std::size_t n_samples, double eta, std::uint64_t seed,
                       std::optional<MixerSpec> mixer = std::nullopt);
// Flow: size -> height, {size, hole, height} -> flow.
Generated gen_flow(std::size_t n_samples, double eta, std::uint64_t seed,
                   std::optional<MixerSpec> mixer = std::nullopt);
// Random ANM over n in [2, 16] nodes with tanh-MLP mechanisms.
Generated gen_random_anm(std::size_t n, double edge_prob, std::size_t n_samples, double eta,
                         std::uint64_t seed, std::optional<MixerSpec> mixer = std::nullopt);

// Two-node chain used by the identifiability checks, left in raw units:
// s1 ~ U[-1, 1], s2 = amplitude * tanh(slope * s1) + n2, n2 ~ U[-noise_half_width, +].
struct ChainSpec {
  double amplitude = 0.6;
  double slope = 2.0;
  double noise_half_width = 0.4;
};
Generated gen_chain(std::size_t n_samples, std::uint64_t seed, ChainSpec spec = {});

// Random DAG: random topological order, Bernoulli(edge_prob) forward edges.
Matrix random_dag(std::size_t n, double edge_prob, std::uint64_t seed);

Matrix apply_mixer(const Matrix& s, const MixerSpec& spec);

// z1 = s1, z2 = s2 - h2(s1) in standardized units. Requires a 2-node chain.
Matrix gen_spurious_encoding(const SampleBatch& batch, const GroundTruthSCM& scm);

// Applies psi_i(t) = a t + b + c t^2 to column i; throws if some psi_i is not
// strictly monotone over the observed range of its column.
Matrix apply_componentwise_distortion(const Matrix& s,
                                      const std::vector<std::array<double, 3>>& coefficients);

bool is_acyclic(const Matrix& adjacency);

void to_json(nlohmann::json& j, const Mechanism& m);
void from_json(const nlohmann::json& j, Mechanism& m);
void to_json(nlohmann::json& j, const GroundTruthSCM& scm);
void from_json(const nlohmann::json& j, GroundTruthSCM& scm);
void to_json(nlohmann::json& j, const MixerSpec& spec);
void from_json(const nlohmann::json& j, MixerSpec& spec);

}  // namespace lanca::scm
