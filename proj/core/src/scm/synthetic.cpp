#include "lanca/scm/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "lanca/matrix_json.hpp"
#include "lanca/random.hpp"

namespace lanca::scm {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Pendulum geometry: arm length and pivot height.
constexpr double kPendulumArm = 1.0;
constexpr double kPendulumPivot = 2.0;

// Flow constants: height = base + k1 * size^3, rate = k2 * sqrt(max(height - hole, 0)).
constexpr double kFlowBase = 1.0;
constexpr double kFlowDisplacement = 0.5;
constexpr double kFlowTorricelli = 1.0;

struct Shadow {
  double pivot_x;
  double tip_x;
};

Shadow project_shadow(double angle_deg, double light_deg) {
  const double theta = angle_deg * kDegToRad;
  const double phi = light_deg * kDegToRad;
  const double cot = std::cos(phi) / std::sin(phi);
  const double tip_x = kPendulumArm * std::sin(theta);
  const double tip_y = kPendulumPivot - kPendulumArm * std::cos(theta);
  return {-kPendulumPivot * cot, tip_x - tip_y * cot};
}

double population_std(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

Matrix gram_schmidt_columns(Matrix m) {
  for (std::size_t c = 0; c < m.cols(); ++c) {
    for (std::size_t prev = 0; prev < c; ++prev) {
      double dot = 0.0;
      for (std::size_t r = 0; r < m.rows(); ++r) dot += m(r, c) * m(r, prev);
      for (std::size_t r = 0; r < m.rows(); ++r) m(r, c) -= dot * m(r, prev);
    }
    double norm = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) norm += m(r, c) * m(r, c);
    norm = std::sqrt(norm);
    if (norm < 1e-12) throw std::runtime_error("gram_schmidt_columns: rank-deficient draw");
    for (std::size_t r = 0; r < m.rows(); ++r) m(r, c) /= norm;
  }
  return m;
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  return Matrix(rows, cols, normal_vector(rng, rows * cols));
}

// Fills endogenous columns of `raw` in topological order, injecting
// N(0, (sigma_v * eta)^2) noise where sigma_v is the noise-free signal's std.
void simulate_endogenous(GroundTruthSCM& scm, Matrix& raw, Matrix& noise, double eta, Rng& rng) {
  const std::size_t n_samples = raw.rows();
  scm.noise_std.assign(scm.n_factors(), 0.0);
  for (std::size_t node : scm.topological_order()) {
    const Mechanism& mech = scm.mechanisms[node];
    if (mech.kind == Mechanism::Kind::kRoot) continue;
    std::vector<double> signal(n_samples);
    for (std::size_t r = 0; r < n_samples; ++r) signal[r] = mech.evaluate(raw.row(r));
    const double sd = population_std(signal) * eta;
    scm.noise_std[node] = sd;
    std::normal_distribution<double> dist(0.0, 1.0);
    for (std::size_t r = 0; r < n_samples; ++r) {
      const double e = sd * dist(rng);
      noise(r, node) = e;
      raw(r, node) = signal[r] + e;
    }
  }
}

Matrix standardize(GroundTruthSCM& scm, const Matrix& raw) {
  const std::size_t n = raw.cols();
  scm.mean.assign(n, 0.0);
  scm.scale.assign(n, 1.0);
  Matrix out = raw;
  for (std::size_t c = 0; c < n; ++c) {
    const auto col = raw.column(c);
    const double m = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(col.size());
    double sd = population_std(col);
    if (sd <= 0.0) sd = 1.0;
    scm.mean[c] = m;
    scm.scale[c] = sd;
    for (std::size_t r = 0; r < raw.rows(); ++r) out(r, c) = (raw(r, c) - m) / sd;
  }
  return out;
}

void require_generation_args(std::size_t n_samples, double eta) {
  if (n_samples == 0) throw std::invalid_argument("generator: sample count must be >= 1");
  if (!(eta >= 0.0)) throw std::invalid_argument("generator: eta must be >= 0");
}

Generated finish(GroundTruthSCM scm, Matrix raw, Matrix noise, double eta, std::uint64_t seed,
                 std::optional<MixerSpec> mixer) {
  Generated out;
  out.batch.s = standardize(scm, raw);
  out.batch.noise = std::move(noise);
  out.batch.generator = scm.generator;
  out.batch.seed = seed;
  out.batch.eta = eta;
  scm.noise_scale_eta = eta;
  out.mixer = mixer ? *mixer
                    : MixerSpec::random_smooth_mlp(scm.n_factors(), 10, seed ^ 0x9E3779B97F4A7C15ULL);
  out.batch.x = apply_mixer(out.batch.s, out.mixer);
  out.scm = std::move(scm);
  return out;
}

}  // namespace

double Mechanism::evaluate(std::span<const double> raw) const {
  switch (kind) {
    case Kind::kRoot:
      return 0.0;
    case Kind::kPendulumShadowLength: {
      const Shadow s = project_shadow(raw[parents[0]], raw[parents[1]]);
      return std::abs(s.tip_x - s.pivot_x);
    }
    case Kind::kPendulumShadowPosition: {
      const Shadow s = project_shadow(raw[parents[0]], raw[parents[1]]);
      return 0.5 * (s.tip_x + s.pivot_x);
    }
    case Kind::kFlowHeight: {
      const double size = raw[parents[0]];
      return kFlowBase + kFlowDisplacement * size * size * size;
    }
    case Kind::kFlowRate: {
      // parents: size, hole, height; the rate depends on size only through height
      const double head = raw[parents[2]] - raw[parents[1]];
      return kFlowTorricelli * std::sqrt(std::max(head, 0.0));
    }
    case Kind::kChainTanh:
      return params[0] * std::tanh(params[1] * raw[parents[0]]);
    case Kind::kRandomMlp: {
      const std::size_t k = parents.size();
      const std::size_t hidden = static_cast<std::size_t>(params[0]);
      const double* w1 = params.data() + 1;
      const double* b1 = w1 + hidden * k;
      const double* w2 = b1 + hidden;
      const double b2 = w2[hidden];
      double out = b2;
      for (std::size_t h = 0; h < hidden; ++h) {
        double pre = b1[h];
        for (std::size_t p = 0; p < k; ++p) pre += w1[h * k + p] * raw[parents[p]];
        out += w2[h] * std::tanh(pre);
      }
      return out;
    }
  }
  return 0.0;
}

std::string to_string(Mechanism::Kind kind) {
  switch (kind) {
    case Mechanism::Kind::kRoot: return "root";
    case Mechanism::Kind::kPendulumShadowLength: return "pendulum_shadow_length";
    case Mechanism::Kind::kPendulumShadowPosition: return "pendulum_shadow_position";
    case Mechanism::Kind::kFlowHeight: return "flow_height";
    case Mechanism::Kind::kFlowRate: return "flow_rate";
    case Mechanism::Kind::kChainTanh: return "chain_tanh";
    case Mechanism::Kind::kRandomMlp: return "random_mlp";
  }
  return "root";
}

std::vector<std::size_t> GroundTruthSCM::topological_order() const {
  const std::size_t n = adjacency.rows();
  std::vector<std::size_t> indegree(n, 0), order;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (adjacency(i, j) != 0.0) ++indegree[j];
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (indegree[i] == 0) ready.push_back(i);
  while (!ready.empty()) {
    std::sort(ready.begin(), ready.end(), std::greater<>());
    const std::size_t v = ready.back();
    ready.pop_back();
    order.push_back(v);
    for (std::size_t j = 0; j < n; ++j)
      if (adjacency(v, j) != 0.0 && --indegree[j] == 0) ready.push_back(j);
  }
  if (order.size() != n) throw std::logic_error("GroundTruthSCM: adjacency is cyclic");
  return order;
}

Matrix GroundTruthSCM::abduct(const Matrix& s_standardized) const {
  Matrix out = s_standardized;
  std::vector<double> raw(n_factors());
  for (std::size_t r = 0; r < s_standardized.rows(); ++r) {
    for (std::size_t c = 0; c < n_factors(); ++c) raw[c] = s_standardized(r, c) * scale[c] + mean[c];
    for (std::size_t c = 0; c < n_factors(); ++c) {
      if (mechanisms[c].kind == Mechanism::Kind::kRoot) continue;
      const double predicted = (mechanisms[c].evaluate(raw) - mean[c]) / scale[c];
      out(r, c) = s_standardized(r, c) - predicted;
    }
  }
  return out;
}

std::string to_string(MixerKind kind) {
  switch (kind) {
    case MixerKind::kIdentity: return "identity";
    case MixerKind::kAffine: return "affine";
    case MixerKind::kRandomSmoothMlp: return "random_smooth_mlp";
    case MixerKind::kComponentwiseDistortion: return "componentwise_distortion";
  }
  return "identity";
}

MixerKind mixer_kind_from_string(const std::string& name) {
  if (name == "identity") return MixerKind::kIdentity;
  if (name == "affine") return MixerKind::kAffine;
  if (name == "random_smooth_mlp") return MixerKind::kRandomSmoothMlp;
  if (name == "componentwise_distortion") return MixerKind::kComponentwiseDistortion;
  throw std::invalid_argument("unknown mixer kind '" + name + "'");
}

MixerSpec MixerSpec::identity(std::size_t dim) {
  MixerSpec spec;
  spec.kind = MixerKind::kIdentity;
  spec.input_dim = dim;
  spec.output_dim = dim;
  return spec;
}

MixerSpec MixerSpec::affine(std::size_t input_dim, std::size_t output_dim, std::uint64_t seed) {
  if (output_dim < input_dim) throw std::invalid_argument("affine mixer: output_dim < input_dim");
  Rng rng(seed);
  MixerSpec spec;
  spec.kind = MixerKind::kAffine;
  spec.input_dim = input_dim;
  spec.output_dim = output_dim;
  spec.seed = seed;
  spec.w1 = gram_schmidt_columns(gaussian_matrix(output_dim, input_dim, rng));
  spec.b1 = normal_vector(rng, output_dim, 0.1);
  return spec;
}

MixerSpec MixerSpec::random_smooth_mlp(std::size_t input_dim, std::size_t output_dim,
                                       std::uint64_t seed) {
  if (output_dim < input_dim) {
    throw std::invalid_argument("random_smooth_mlp mixer: output_dim < input_dim");
  }
  Rng rng(seed);
  MixerSpec spec;
  spec.kind = MixerKind::kRandomSmoothMlp;
  spec.input_dim = input_dim;
  spec.output_dim = output_dim;
  spec.seed = seed;
  spec.w1 = gram_schmidt_columns(gaussian_matrix(output_dim, input_dim, rng));
  spec.b1 = normal_vector(rng, output_dim, 0.1);
  spec.w2 = gram_schmidt_columns(gaussian_matrix(output_dim, output_dim, rng));
  spec.b2 = std::vector<double>(output_dim, 0.0);
  return spec;
}

MixerSpec MixerSpec::componentwise(std::vector<std::array<double, 3>> coefficients) {
  MixerSpec spec;
  spec.kind = MixerKind::kComponentwiseDistortion;
  spec.input_dim = coefficients.size();
  spec.output_dim = coefficients.size();
  spec.distortion = std::move(coefficients);
  return spec;
}

MixerSpec MixerSpec::make(MixerKind kind, std::size_t input_dim, std::size_t output_dim,
                          std::uint64_t seed) {
  switch (kind) {
    case MixerKind::kIdentity: return identity(input_dim);
    case MixerKind::kAffine: return affine(input_dim, output_dim, seed);
    case MixerKind::kRandomSmoothMlp: return random_smooth_mlp(input_dim, output_dim, seed);
    case MixerKind::kComponentwiseDistortion:
      return componentwise(std::vector<std::array<double, 3>>(input_dim, {1.0, 0.0, 0.0}));
  }
  return identity(input_dim);
}

Matrix apply_mixer(const Matrix& s, const MixerSpec& spec) {
  if (s.cols() != spec.input_dim) {
    throw std::invalid_argument("apply_mixer: input has " + std::to_string(s.cols()) +
                                " columns, mixer expects " + std::to_string(spec.input_dim));
  }
  switch (spec.kind) {
    case MixerKind::kIdentity:
      return s;
    case MixerKind::kComponentwiseDistortion:
      return apply_componentwise_distortion(s, spec.distortion);
    case MixerKind::kAffine:
    case MixerKind::kRandomSmoothMlp: {
      Matrix out(s.rows(), spec.output_dim);
      std::vector<double> hidden(spec.output_dim);
      for (std::size_t r = 0; r < s.rows(); ++r) {
        for (std::size_t h = 0; h < spec.output_dim; ++h) {
          double acc = spec.b1[h];
          for (std::size_t c = 0; c < spec.input_dim; ++c) acc += spec.w1(h, c) * s(r, c);
          hidden[h] = acc;
        }
        if (spec.kind == MixerKind::kAffine) {
          std::copy(hidden.begin(), hidden.end(), out.row(r).begin());
          continue;
        }
        for (double& v : hidden) v = std::tanh(v);
        for (std::size_t d = 0; d < spec.output_dim; ++d) {
          double acc = spec.b2[d];
          for (std::size_t h = 0; h < spec.output_dim; ++h) acc += spec.w2(d, h) * hidden[h];
          out(r, d) = acc;
        }
      }
      return out;
    }
  }
  return s;
}

Generated gen_pendulum(std::size_t n_samples, double eta, std::uint64_t seed,
                       std::optional<MixerSpec> mixer) {
  require_generation_args(n_samples, eta);
  Rng rng = derive_rng(seed, 1);
  GroundTruthSCM scm;
  scm.generator = "pendulum";
  scm.factor_names = {"pendulum_angle", "light_position", "shadow_length", "shadow_position"};
  scm.adjacency = Matrix(4, 4);
  for (std::size_t cause : {0, 1})
    for (std::size_t effect : {2, 3}) scm.adjacency(cause, effect) = 1.0;
  scm.mechanisms = {Mechanism{},
                    Mechanism{},
                    {Mechanism::Kind::kPendulumShadowLength, {0, 1}, {}},
                    {Mechanism::Kind::kPendulumShadowPosition, {0, 1}, {}}};

  Matrix raw(n_samples, 4), noise(n_samples, 4);
  for (std::size_t r = 0; r < n_samples; ++r) {
    raw(r, 0) = noise(r, 0) = uniform(rng, -40.0, 40.0);
    raw(r, 1) = noise(r, 1) = uniform(rng, 60.0, 120.0);
  }
  simulate_endogenous(scm, raw, noise, eta, rng);
  return finish(std::move(scm), std::move(raw), std::move(noise), eta, seed, std::move(mixer));
}

Generated gen_flow(std::size_t n_samples, double eta, std::uint64_t seed,
                   std::optional<MixerSpec> mixer) {
  require_generation_args(n_samples, eta);
  Rng rng = derive_rng(seed, 2);
  GroundTruthSCM scm;
  scm.generator = "flow";
  scm.factor_names = {"ball_size", "hole_position", "water_height", "water_flow"};
  scm.adjacency = Matrix(4, 4);
  scm.adjacency(0, 2) = 1.0;
  scm.adjacency(0, 3) = 1.0;
  scm.adjacency(1, 3) = 1.0;
  scm.adjacency(2, 3) = 1.0;
  scm.mechanisms = {Mechanism{},
                    Mechanism{},
                    {Mechanism::Kind::kFlowHeight, {0}, {}},
                    {Mechanism::Kind::kFlowRate, {0, 1, 2}, {}}};

  Matrix raw(n_samples, 4), noise(n_samples, 4);
  for (std::size_t r = 0; r < n_samples; ++r) {
    raw(r, 0) = noise(r, 0) = uniform(rng, 0.5, 1.5);
    raw(r, 1) = noise(r, 1) = uniform(rng, 0.0, 1.0);
  }
  simulate_endogenous(scm, raw, noise, eta, rng);
  return finish(std::move(scm), std::move(raw), std::move(noise), eta, seed, std::move(mixer));
}

Matrix random_dag(std::size_t n, double edge_prob, std::uint64_t seed) {
  if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) {
    throw std::invalid_argument("random_dag: edge_prob must lie in [0, 1]");
  }
  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::bernoulli_distribution coin(edge_prob);
  Matrix adj(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (coin(rng)) adj(order[a], order[b]) = 1.0;
  return adj;
}

Generated gen_random_anm(std::size_t n, double edge_prob, std::size_t n_samples, double eta,
                         std::uint64_t seed, std::optional<MixerSpec> mixer) {
  if (n < 2 || n > 16) throw std::invalid_argument("gen_random_anm: n must lie in [2, 16]");
  if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) {
    throw std::invalid_argument("gen_random_anm: edge_prob must lie in [0, 1]");
  }
  require_generation_args(n_samples, eta);
  Rng rng = derive_rng(seed, 3);
  GroundTruthSCM scm;
  scm.generator = "random_anm";
  for (std::size_t i = 0; i < n; ++i) scm.factor_names.push_back("s_" + std::to_string(i));
  scm.adjacency = random_dag(n, edge_prob, seed ^ 0xD1B54A32D192ED03ULL);
  scm.mechanisms.resize(n);
  constexpr std::size_t kHidden = 8;
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<std::size_t> parents;
    for (std::size_t i = 0; i < n; ++i)
      if (scm.adjacency(i, j) != 0.0) parents.push_back(i);
    if (parents.empty()) continue;
    Mechanism m{Mechanism::Kind::kRandomMlp, parents, {static_cast<double>(kHidden)}};
    const auto w1 = normal_vector(rng, kHidden * parents.size(), 1.0);
    const auto b1 = normal_vector(rng, kHidden, 0.5);
    const auto w2 = normal_vector(rng, kHidden, 1.0 / std::sqrt(static_cast<double>(kHidden)));
    m.params.insert(m.params.end(), w1.begin(), w1.end());
    m.params.insert(m.params.end(), b1.begin(), b1.end());
    m.params.insert(m.params.end(), w2.begin(), w2.end());
    m.params.push_back(0.0);
    scm.mechanisms[j] = std::move(m);
  }
  Matrix raw(n_samples, n), noise(n_samples, n);
  for (std::size_t j = 0; j < n; ++j) {
    if (scm.mechanisms[j].kind != Mechanism::Kind::kRoot) continue;
    for (std::size_t r = 0; r < n_samples; ++r) raw(r, j) = noise(r, j) = standard_normal(rng);
  }
  simulate_endogenous(scm, raw, noise, eta, rng);
  return finish(std::move(scm), std::move(raw), std::move(noise), eta, seed, std::move(mixer));
}

Generated gen_chain(std::size_t n_samples, std::uint64_t seed, ChainSpec spec) {
  require_generation_args(n_samples, 0.0);
  Rng rng = derive_rng(seed, 4);
  GroundTruthSCM scm;
  scm.generator = "chain";
  scm.factor_names = {"cause", "effect"};
  scm.adjacency = Matrix(2, 2);
  scm.adjacency(0, 1) = 1.0;
  scm.mechanisms = {Mechanism{}, {Mechanism::Kind::kChainTanh, {0}, {spec.amplitude, spec.slope}}};
  scm.noise_std = {0.0, spec.noise_half_width / std::sqrt(3.0)};
  scm.mean = {0.0, 0.0};
  scm.scale = {1.0, 1.0};

  Generated out;
  out.batch.s = Matrix(n_samples, 2);
  out.batch.noise = Matrix(n_samples, 2);
  for (std::size_t r = 0; r < n_samples; ++r) {
    const double cause = uniform(rng, -1.0, 1.0);
    const double e = uniform(rng, -spec.noise_half_width, spec.noise_half_width);
    out.batch.s(r, 0) = out.batch.noise(r, 0) = cause;
    out.batch.noise(r, 1) = e;
    out.batch.s(r, 1) = scm.mechanisms[1].evaluate(out.batch.s.row(r)) + e;
  }
  out.batch.x = out.batch.s;
  out.batch.generator = scm.generator;
  out.batch.seed = seed;
  out.mixer = MixerSpec::identity(2);
  out.scm = std::move(scm);
  return out;
}

Matrix gen_spurious_encoding(const SampleBatch& batch, const GroundTruthSCM& scm) {
  if (scm.n_factors() != 2 || batch.s.cols() != 2) {
    throw std::invalid_argument("gen_spurious_encoding: expected 2 factors, got " +
                                std::to_string(batch.s.cols()));
  }
  if (scm.adjacency(0, 1) == 0.0 || scm.adjacency(1, 0) != 0.0) {
    throw std::invalid_argument("gen_spurious_encoding: SCM is not the chain s1 -> s2");
  }
  Matrix z(batch.s.rows(), 2);
  std::vector<double> raw(2);
  for (std::size_t r = 0; r < batch.s.rows(); ++r) {
    raw[0] = batch.s(r, 0) * scm.scale[0] + scm.mean[0];
    raw[1] = batch.s(r, 1) * scm.scale[1] + scm.mean[1];
    z(r, 0) = batch.s(r, 0);
    z(r, 1) = batch.s(r, 1) - (scm.mechanisms[1].evaluate(raw) - scm.mean[1]) / scm.scale[1];
  }
  return z;
}

Matrix apply_componentwise_distortion(const Matrix& s,
                                      const std::vector<std::array<double, 3>>& coefficients) {
  if (coefficients.size() != s.cols()) {
    throw std::invalid_argument("apply_componentwise_distortion: " +
                                std::to_string(coefficients.size()) + " coefficient sets for " +
                                std::to_string(s.cols()) + " columns");
  }
  Matrix out(s.rows(), s.cols());
  for (std::size_t c = 0; c < s.cols(); ++c) {
    const auto [a, b, quad] = coefficients[c];
    if (s.rows() > 0) {
      double lo = s(0, c), hi = s(0, c);
      for (std::size_t r = 1; r < s.rows(); ++r) {
        lo = std::min(lo, s(r, c));
        hi = std::max(hi, s(r, c));
      }
      // psi' = a + 2 c t is affine in t, so its sign on [lo, hi] is set by the endpoints.
      const double d_lo = a + 2.0 * quad * lo;
      const double d_hi = a + 2.0 * quad * hi;
      if (!((d_lo > 0.0 && d_hi > 0.0) || (d_lo < 0.0 && d_hi < 0.0))) {
        throw std::invalid_argument("apply_componentwise_distortion: psi_" + std::to_string(c) +
                                    " is not strictly monotone on [" + std::to_string(lo) + ", " +
                                    std::to_string(hi) + "]");
      }
    }
    for (std::size_t r = 0; r < s.rows(); ++r) {
      const double t = s(r, c);
      out(r, c) = a * t + b + quad * t * t;
    }
  }
  return out;
}

bool is_acyclic(const Matrix& adjacency) {
  const std::size_t n = adjacency.rows();
  std::vector<int> state(n, 0);  // 0 unvisited, 1 on stack, 2 done
  std::vector<std::pair<std::size_t, std::size_t>> stack;
  for (std::size_t start = 0; start < n; ++start) {
    if (state[start]) continue;
    stack.emplace_back(start, 0);
    state[start] = 1;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      if (next < n) {
        const std::size_t w = next++;
        if (adjacency(v, w) == 0.0) continue;
        if (state[w] == 1) return false;
        if (state[w] == 0) {
          state[w] = 1;
          stack.emplace_back(w, 0);
        }
        continue;
      }
      state[v] = 2;
      stack.pop_back();
    }
  }
  return true;
}

void to_json(nlohmann::json& j, const Mechanism& m) {
  j = nlohmann::json{{"kind", to_string(m.kind)}, {"parents", m.parents}, {"params", m.params}};
}

void from_json(const nlohmann::json& j, Mechanism& m) {
  static const std::vector<Mechanism::Kind> kinds = {
      Mechanism::Kind::kRoot,       Mechanism::Kind::kPendulumShadowLength,
      Mechanism::Kind::kPendulumShadowPosition, Mechanism::Kind::kFlowHeight,
      Mechanism::Kind::kFlowRate,   Mechanism::Kind::kChainTanh,
      Mechanism::Kind::kRandomMlp};
  const auto name = j.at("kind").get<std::string>();
  auto it = std::find_if(kinds.begin(), kinds.end(), [&](auto k) { return to_string(k) == name; });
  if (it == kinds.end()) throw std::invalid_argument("unknown mechanism kind '" + name + "'");
  m.kind = *it;
  m.parents = j.at("parents").get<std::vector<std::size_t>>();
  m.params = j.at("params").get<std::vector<double>>();
}

void to_json(nlohmann::json& j, const GroundTruthSCM& scm) {
  j = nlohmann::json{{"generator", scm.generator},
                     {"factor_names", scm.factor_names},
                     {"adjacency", scm.adjacency},
                     {"mechanisms", scm.mechanisms},
                     {"noise_std", scm.noise_std},
                     {"eta", scm.noise_scale_eta},
                     {"mean", scm.mean},
                     {"scale", scm.scale}};
}

void from_json(const nlohmann::json& j, GroundTruthSCM& scm) {
  scm.generator = j.at("generator").get<std::string>();
  scm.factor_names = j.at("factor_names").get<std::vector<std::string>>();
  scm.adjacency = j.at("adjacency").get<Matrix>();
  scm.mechanisms = j.at("mechanisms").get<std::vector<Mechanism>>();
  scm.noise_std = j.at("noise_std").get<std::vector<double>>();
  scm.noise_scale_eta = j.at("eta").get<double>();
  scm.mean = j.at("mean").get<std::vector<double>>();
  scm.scale = j.at("scale").get<std::vector<double>>();
}

void to_json(nlohmann::json& j, const MixerSpec& spec) {
  j = nlohmann::json{{"kind", to_string(spec.kind)},
                     {"input_dim", spec.input_dim},
                     {"output_dim", spec.output_dim},
                     {"seed", spec.seed},
                     {"w1", spec.w1},
                     {"w2", spec.w2},
                     {"b1", spec.b1},
                     {"b2", spec.b2},
                     {"distortion", spec.distortion}};
}

void from_json(const nlohmann::json& j, MixerSpec& spec) {
  spec.kind = mixer_kind_from_string(j.at("kind").get<std::string>());
  spec.input_dim = j.at("input_dim").get<std::size_t>();
  spec.output_dim = j.at("output_dim").get<std::size_t>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.w1 = j.at("w1").get<Matrix>();
  spec.w2 = j.at("w2").get<Matrix>();
  spec.b1 = j.at("b1").get<std::vector<double>>();
  spec.b2 = j.at("b2").get<std::vector<double>>();
  spec.distortion = j.at("distortion").get<std::vector<std::array<double, 3>>>();
}

}  // namespace lanca::scm
