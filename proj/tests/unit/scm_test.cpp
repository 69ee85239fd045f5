#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "lanca/matrix_json.hpp"
#include "lanca/scm/synthetic.hpp"

namespace lanca::scm {
namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean_of(a), mb = mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Szekely distance correlation, computed in two O(N^2) passes without storing
// the N x N distance matrices.
double distance_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  std::vector<double> ra(n, 0.0), rb(n, 0.0);
  double ga = 0.0, gb = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      ra[i] += std::abs(a[i] - a[j]);
      rb[i] += std::abs(b[i] - b[j]);
    }
  for (std::size_t i = 0; i < n; ++i) {
    ga += ra[i];
    gb += rb[i];
    ra[i] /= static_cast<double>(n);
    rb[i] /= static_cast<double>(n);
  }
  ga /= static_cast<double>(n * n);
  gb /= static_cast<double>(n * n);
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double A = std::abs(a[i] - a[j]) - ra[i] - ra[j] + ga;
      const double B = std::abs(b[i] - b[j]) - rb[i] - rb[j] + gb;
      ab += A * B;
      aa += A * A;
      bb += B * B;
    }
  return std::sqrt(ab / std::sqrt(aa * bb));
}

// Independent re-derivation of the shadow geometry: light rays through the
// pivot (0, 2) and the bob tip hit the ground at x = p_x - p_y * cot(light).
std::pair<double, double> shadow_oracle(double angle_deg, double light_deg) {
  const double th = angle_deg * std::numbers::pi / 180.0;
  const double ph = light_deg * std::numbers::pi / 180.0;
  const double pivot_shadow = 0.0 - 2.0 / std::tan(ph);
  const double tip_shadow = std::sin(th) - (2.0 - std::cos(th)) / std::tan(ph);
  return {std::abs(tip_shadow - pivot_shadow), 0.5 * (tip_shadow + pivot_shadow)};
}

Matrix raw_factors(const Generated& g) {
  Matrix raw = g.batch.s;
  for (std::size_t r = 0; r < raw.rows(); ++r)
    for (std::size_t c = 0; c < raw.cols(); ++c)
      raw(r, c) = g.batch.s(r, c) * g.scm.scale[c] + g.scm.mean[c];
  return raw;
}

TEST(Pendulum, ShapesGraphAndStandardization) {
  const auto g = gen_pendulum(2000, 0.1, 7);
  EXPECT_EQ(g.batch.s.rows(), 2000u);
  EXPECT_EQ(g.batch.s.cols(), 4u);
  EXPECT_EQ(g.batch.x.rows(), 2000u);
  EXPECT_EQ(g.batch.x.cols(), 10u);
  double edges = 0.0;
  for (double v : g.scm.adjacency.data()) edges += v;
  EXPECT_EQ(edges, 4.0);
  for (std::size_t cause : {0u, 1u})
    for (std::size_t effect : {2u, 3u}) EXPECT_EQ(g.scm.adjacency(cause, effect), 1.0);
  EXPECT_TRUE(is_acyclic(g.scm.adjacency));
  for (std::size_t c = 0; c < 4; ++c) {
    const auto col = g.batch.s.column(c);
    EXPECT_NEAR(mean_of(col), 0.0, 1e-12);
    EXPECT_NEAR(std_of(col), 1.0, 1e-12);
  }
}

TEST(Pendulum, ExogenousRanges) {
  const auto g = gen_pendulum(5000, 0.0, 3);
  const Matrix raw = raw_factors(g);
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    EXPECT_GE(raw(r, 0), -40.0 - 1e-9);
    EXPECT_LE(raw(r, 0), 40.0 + 1e-9);
    EXPECT_GE(raw(r, 1), 60.0 - 1e-9);
    EXPECT_LE(raw(r, 1), 120.0 + 1e-9);
  }
}

TEST(Pendulum, ZeroNoiseShadowsAreExactFunctionsOfParents) {
  const auto g = gen_pendulum(3000, 0.0, 11);
  const Matrix raw = raw_factors(g);
  std::vector<double> res_len, res_pos;
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    const auto [len, pos] = shadow_oracle(raw(r, 0), raw(r, 1));
    res_len.push_back(raw(r, 2) - len);
    res_pos.push_back(raw(r, 3) - pos);
  }
  const double var_len = std::pow(std_of(res_len), 2);
  const double var_pos = std::pow(std_of(res_pos), 2);
  EXPECT_LT(var_len, 1e-20);
  EXPECT_LT(var_pos, 1e-20);
}

TEST(Pendulum, NoiseScaleMatchesEtaTimesSignalStd) {
  const auto g = gen_pendulum(10000, 0.1, 5);
  const Matrix raw = raw_factors(g);
  std::vector<double> len, pos, res_len, res_pos;
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    const auto [l, p] = shadow_oracle(raw(r, 0), raw(r, 1));
    len.push_back(l);
    pos.push_back(p);
    res_len.push_back(raw(r, 2) - l);
    res_pos.push_back(raw(r, 3) - p);
  }
  EXPECT_NEAR(std_of(res_len) / (0.1 * std_of(len)), 1.0, 0.05);
  EXPECT_NEAR(std_of(res_pos) / (0.1 * std_of(pos)), 1.0, 0.05);
  EXPECT_NEAR(g.scm.noise_std[2], 0.1 * std_of(len), 1e-9);
  EXPECT_EQ(g.scm.noise_std[0], 0.0);
}

TEST(Pendulum, RejectsNegativeEtaAndEmptyBatch) {
  EXPECT_THROW(gen_pendulum(10, -0.1, 1), std::invalid_argument);
  EXPECT_THROW(gen_pendulum(0, 0.1, 1), std::invalid_argument);
  EXPECT_THROW(gen_flow(10, -1.0, 1), std::invalid_argument);
}

TEST(Pendulum, SeedDeterminism) {
  const auto a = gen_pendulum(500, 0.1, 42);
  const auto b = gen_pendulum(500, 0.1, 42);
  const auto c = gen_pendulum(500, 0.1, 43);
  EXPECT_TRUE(a.batch.s == b.batch.s);
  EXPECT_TRUE(a.batch.x == b.batch.x);
  EXPECT_FALSE(a.batch.s == c.batch.s);
}

TEST(Flow, GraphAndZeroNoiseExactness) {
  const auto g = gen_flow(2000, 0.0, 9);
  EXPECT_EQ(g.scm.adjacency(0, 2), 1.0);
  EXPECT_EQ(g.scm.adjacency(0, 3), 1.0);
  EXPECT_EQ(g.scm.adjacency(1, 3), 1.0);
  EXPECT_EQ(g.scm.adjacency(2, 3), 1.0);
  EXPECT_TRUE(is_acyclic(g.scm.adjacency));
  const Matrix raw = raw_factors(g);
  double worst = 0.0;
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    const double height = 1.0 + 0.5 * std::pow(raw(r, 0), 3);
    const double flow = std::sqrt(std::max(raw(r, 2) - raw(r, 1), 0.0));
    worst = std::max({worst, std::abs(raw(r, 2) - height), std::abs(raw(r, 3) - flow)});
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Flow, RateIncreasesWithHeightOnGrid) {
  const auto g = gen_flow(10, 0.0, 1);
  const Mechanism& rate = g.scm.mechanisms[3];
  for (double size : {0.5, 1.0, 1.5})
    for (double hole : {0.0, 0.4, 0.9}) {
      double prev = -1.0;
      for (int k = 0; k <= 50; ++k) {
        const double height = 1.0 + 0.02 * k;
        const std::vector<double> row = {size, hole, height, 0.0};
        const double v = rate.evaluate(row);
        EXPECT_GT(v, prev);
        prev = v;
      }
    }
}

TEST(RandomAnm, AcyclicOverManyDraws) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const Matrix adj = random_dag(2 + seed % 15, 0.5, seed);
    ASSERT_TRUE(is_acyclic(adj)) << "seed " << seed;
    for (std::size_t i = 0; i < adj.rows(); ++i) ASSERT_EQ(adj(i, i), 0.0);
  }
}

TEST(RandomAnm, EmptyGraphColumnsUncorrelated) {
  const auto g = gen_random_anm(4, 0.0, 5000, 0.1, 2);
  for (double v : g.scm.adjacency.data()) EXPECT_EQ(v, 0.0);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j)
      EXPECT_LT(std::abs(correlation(g.batch.s.column(i), g.batch.s.column(j))), 0.05);
}

TEST(RandomAnm, FullChainAbductionDecorrelates) {
  const auto g = gen_random_anm(2, 1.0, 10000, 0.5, 4);
  const Matrix residual = g.scm.abduct(g.batch.s);
  EXPECT_LT(std::abs(correlation(residual.column(0), residual.column(1))), 0.03);
}

TEST(RandomAnm, RejectsBadArguments) {
  EXPECT_THROW(gen_random_anm(2, 1.5, 10, 0.1, 1), std::invalid_argument);
  EXPECT_THROW(gen_random_anm(2, -0.1, 10, 0.1, 1), std::invalid_argument);
  EXPECT_THROW(gen_random_anm(1, 0.5, 10, 0.1, 1), std::invalid_argument);
  EXPECT_THROW(gen_random_anm(17, 0.5, 10, 0.1, 1), std::invalid_argument);
}

TEST(Abduction, ResidualsHaveLowDistanceCorrelation) {
  const auto g = gen_pendulum(5000, 0.1, 21);
  const Matrix residual = g.scm.abduct(g.batch.s);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j)
      EXPECT_LT(distance_correlation(residual.column(i), residual.column(j)), 0.05)
          << i << "," << j;
}

TEST(Mixer, IdentityIsExact) {
  const auto g = gen_pendulum(300, 0.1, 1, MixerSpec::identity(4));
  EXPECT_TRUE(g.batch.x == g.batch.s);
}

TEST(Mixer, AffineComponentwiseIsInvertible) {
  const auto g = gen_pendulum(300, 0.1, 1);
  const auto spec = MixerSpec::componentwise(std::vector<std::array<double, 3>>(4, {2.0, 1.0, 0.0}));
  const Matrix x = apply_mixer(g.batch.s, spec);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR((x(r, c) - 1.0) / 2.0, g.batch.s(r, c), 1e-14);
}

TEST(Mixer, SmoothMlpIsInjectiveOnSamples) {
  const auto g = gen_pendulum(10000, 0.1, 8);
  const Matrix& x = g.batch.x;
  const Matrix& s = g.batch.s;
  double min_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = i + 1; j < x.rows(); ++j) {
      double ds = 0.0;
      for (std::size_t c = 0; c < s.cols(); ++c) ds += std::abs(s(i, c) - s(j, c));
      if (ds == 0.0) continue;
      double d = 0.0;
      for (std::size_t c = 0; c < x.cols(); ++c) d += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
      min_dist = std::min(min_dist, d);
    }
  EXPECT_GT(min_dist, 0.0);
}

TEST(Mixer, WeightsAreOrthonormal) {
  const auto spec = MixerSpec::random_smooth_mlp(4, 10, 5);
  const Matrix g1 = matmul(spec.w1.transposed(), spec.w1);
  const Matrix g2 = matmul(spec.w2.transposed(), spec.w2);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(g1(i, j), i == j ? 1.0 : 0.0, 1e-12);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 10; ++j) EXPECT_NEAR(g2(i, j), i == j ? 1.0 : 0.0, 1e-12);
}

TEST(Mixer, DimensionMismatchThrows) {
  const Matrix s(5, 3);
  EXPECT_THROW(apply_mixer(s, MixerSpec::random_smooth_mlp(4, 10, 1)), std::invalid_argument);
  EXPECT_THROW(MixerSpec::random_smooth_mlp(4, 3, 1), std::invalid_argument);
}

TEST(Spurious, SecondCoordinateIsTheTrueNoise) {
  const auto g = gen_chain(10000, 3);
  const Matrix z = gen_spurious_encoding(g.batch, g.scm);
  double worst = 0.0;
  for (std::size_t r = 0; r < z.rows(); ++r) {
    worst = std::max(worst, std::abs(z(r, 0) - g.batch.s(r, 0)));
    worst = std::max(worst, std::abs(z(r, 1) - g.batch.noise(r, 1)));
  }
  EXPECT_LT(worst, 1e-12);
  EXPECT_LT(std::abs(correlation(z.column(0), z.column(1))), 0.03);
}

TEST(Spurious, WorksOnStandardizedChains) {
  const auto g = gen_random_anm(2, 1.0, 2000, 0.3, 6);
  const Matrix z = gen_spurious_encoding(g.batch, g.scm);
  const Matrix residual = g.scm.abduct(g.batch.s);
  for (std::size_t r = 0; r < z.rows(); ++r) EXPECT_NEAR(z(r, 1), residual(r, 1), 1e-12);
}

TEST(Spurious, WrongFactorCountThrows) {
  const auto g = gen_pendulum(50, 0.1, 1);
  EXPECT_THROW(gen_spurious_encoding(g.batch, g.scm), std::invalid_argument);
}

TEST(Distortion, ZeroQuadraticIsIdentity) {
  const auto g = gen_chain(500, 1);
  const Matrix out = apply_componentwise_distortion(g.batch.s, {{1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}});
  EXPECT_TRUE(out == g.batch.s);
}

TEST(Distortion, AffinePreservesRankOrder) {
  const auto g = gen_chain(500, 2);
  const Matrix out = apply_componentwise_distortion(g.batch.s, {{3.0, -2.0, 0.0}, {3.0, -2.0, 0.0}});
  for (std::size_t c = 0; c < 2; ++c) {
    std::vector<std::size_t> a(500), b(500);
    std::iota(a.begin(), a.end(), 0);
    std::iota(b.begin(), b.end(), 0);
    std::sort(a.begin(), a.end(), [&](auto i, auto j) { return g.batch.s(i, c) < g.batch.s(j, c); });
    std::sort(b.begin(), b.end(), [&](auto i, auto j) { return out(i, c) < out(j, c); });
    EXPECT_EQ(a, b);
  }
}

TEST(Distortion, QuadraticOnUnitRangeIsIncreasing) {
  Matrix s(201, 1);
  for (std::size_t r = 0; r < 201; ++r) s(r, 0) = -1.0 + 0.01 * static_cast<double>(r);
  const Matrix out = apply_componentwise_distortion(s, {{1.0, 0.0, 0.3}});
  for (std::size_t r = 1; r < 201; ++r) EXPECT_GT(out(r, 0), out(r - 1, 0));
}

TEST(Distortion, NonMonotoneThrows) {
  Matrix s(3, 1);
  s(0, 0) = -2.0;
  s(1, 0) = 0.0;
  s(2, 0) = 2.0;
  EXPECT_THROW(apply_componentwise_distortion(s, {{1.0, 0.0, 0.3}}), std::invalid_argument);
  EXPECT_THROW(apply_componentwise_distortion(s, {{1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}}),
               std::invalid_argument);
}

TEST(Json, ScmAndMixerRoundTrip) {
  const auto g = gen_random_anm(5, 0.5, 100, 0.1, 12);
  const nlohmann::json j_scm = g.scm;
  const nlohmann::json j_mix = g.mixer;
  const auto scm = j_scm.get<GroundTruthSCM>();
  const auto mixer = j_mix.get<MixerSpec>();
  EXPECT_TRUE(scm.adjacency == g.scm.adjacency);
  EXPECT_EQ(scm.mechanisms.size(), g.scm.mechanisms.size());
  EXPECT_TRUE(apply_mixer(g.batch.s, mixer) == g.batch.x);
  const Matrix r1 = g.scm.abduct(g.batch.s);
  const Matrix r2 = scm.abduct(g.batch.s);
  EXPECT_TRUE(r1 == r2);
}

}  // namespace
}  // namespace lanca::scm
