#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lanca/dag/structure.hpp"
#include "support/gradcheck.hpp"

namespace lanca::dag {
namespace {

using ad::Tensor;

Tensor scores_of(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor::parameter({1, n}, std::move(v));
}

bool is_permutation_matrix(const Matrix& p) {
  const std::size_t n = p.rows();
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0, col = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (p(i, j) != 0.0 && p(i, j) != 1.0) return false;
      row += p(i, j);
      col += p(j, i);
    }
    if (row != 1.0 || col != 1.0) return false;
  }
  return true;
}

// Exhaustive maximum-weight assignment; the reference for small matrices.
Matrix brute_force_assignment(const Matrix& w) {
  const std::size_t n = w.rows();
  std::vector<std::size_t> perm(n), best;
  std::iota(perm.begin(), perm.end(), 0);
  double best_score = -1e300;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += w(i, perm[i]);
    if (s > best_score) {
      best_score = s;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, best[i]) = 1.0;
  return out;
}

Matrix random_row_stochastic_near_permutation(std::size_t n, double noise, Rng& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      m(i, j) = (perm[i] == j ? 1.0 : 0.0) + noise * uniform(rng, 0.0, 1.0);
      total += m(i, j);
    }
    for (std::size_t j = 0; j < n; ++j) m(i, j) /= total;
  }
  return m;
}

TEST(SoftPermutation, SortedScoresGiveIdentityAtLowTemperature) {
  const Matrix p = soft_permutation(scores_of({3.0, 2.0, 1.0, 0.0}), 0.01).to_matrix();
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(p(i, j), i == j ? 1.0 : 0.0, 1e-12);
}

TEST(SoftPermutation, TwoNodeSwapMatchesHandSoftmax) {
  const Matrix p = soft_permutation(scores_of({0.0, 1.0}), 0.1).to_matrix();
  // row logits (-10, 0) and (0, -10)
  const double small = std::exp(-10.0) / (1.0 + std::exp(-10.0));
  EXPECT_NEAR(p(0, 0), small, 1e-15);
  EXPECT_NEAR(p(0, 1), 1.0 - small, 1e-15);
  EXPECT_NEAR(p(1, 0), 1.0 - small, 1e-15);
  EXPECT_NEAR(p(1, 1), small, 1e-15);
}

TEST(SoftPermutation, EqualScoresGiveUniformRows) {
  const Matrix p = soft_permutation(scores_of({0.7, 0.7, 0.7, 0.7, 0.7}), 0.3).to_matrix();
  for (double v : p.data()) EXPECT_NEAR(v, 0.2, 1e-15);
}

TEST(SoftPermutation, RowsSumToOne) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 9;
    const Matrix p =
        soft_permutation(scores_of(normal_vector(rng, n, 2.0)), uniform(rng, 0.01, 3.0)).to_matrix();
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = p.row(i);
      EXPECT_NEAR(std::accumulate(r.begin(), r.end(), 0.0), 1.0, 1e-12);
    }
  }
}

TEST(SoftPermutation, NonPositiveTemperatureThrows) {
  EXPECT_THROW(soft_permutation(scores_of({0.0, 1.0}), 0.0), std::invalid_argument);
  EXPECT_THROW(soft_permutation(scores_of({0.0, 1.0}), -1.0), std::invalid_argument);
}

TEST(SoftPermutation, GradientMatchesFiniteDifferences) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor s = scores_of(normal_vector(rng, 4, 1.0));
    const Tensor w = Tensor::constant({4, 4}, normal_vector(rng, 16, 1.0));
    const auto r = testing::grad_check({s}, [&] { return ad::sum(soft_permutation(s, 0.7) * w); });
    EXPECT_LT(r.max_relative_error, 1e-6);
  }
}

TEST(HardenPermutation, NearIdentityGivesIdentity) {
  Matrix soft(3, 3, 0.05);
  for (std::size_t i = 0; i < 3; ++i) soft(i, i) = 0.9;
  EXPECT_TRUE(greedy_permutation(soft) == Matrix::identity(3));
}

TEST(HardenPermutation, ConflictGoesToLargerRowMax) {
  Matrix soft(2, 2);
  soft(0, 0) = 0.6;
  soft(0, 1) = 0.4;
  soft(1, 0) = 0.9;
  soft(1, 1) = 0.1;
  const Matrix hard = greedy_permutation(soft);
  EXPECT_EQ(hard(1, 0), 1.0);
  EXPECT_EQ(hard(0, 1), 1.0);
}

TEST(HardenPermutation, TiesStillGivePermutations) {
  EXPECT_TRUE(is_permutation_matrix(greedy_permutation(Matrix(5, 5, 0.2))));
  const Matrix p = soft_permutation(scores_of({1.0, 1.0, 0.0, 0.0}), 0.5).to_matrix();
  const Matrix hard = greedy_permutation(p);
  EXPECT_TRUE(is_permutation_matrix(hard));
  EXPECT_TRUE(matmul(hard, hard.transposed()) == Matrix::identity(4));
}

TEST(HardenPermutation, AgreesWithExhaustiveAssignmentOnNonDegenerateInputs) {
  Rng rng(12);
  int checked = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + trial % 5;
    const Matrix soft = random_row_stochastic_near_permutation(n, 0.3, rng);
    EXPECT_TRUE(greedy_permutation(soft) == brute_force_assignment(soft)) << "trial " << trial;
    ++checked;
  }
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + trial % 5;
    const Matrix soft =
        soft_permutation(scores_of(normal_vector(rng, n, 2.0)), uniform(rng, 0.05, 0.5)).to_matrix();
    EXPECT_TRUE(greedy_permutation(soft) == brute_force_assignment(soft)) << "softsort " << trial;
    ++checked;
  }
  EXPECT_EQ(checked, 800);
}

TEST(HardenPermutation, ForwardIsHardBackwardIsSoft) {
  Tensor s = scores_of({0.3, -0.2, 1.1});
  const Tensor w = Tensor::constant({3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const Tensor hard = harden_permutation(soft_permutation(s, 0.5));
  EXPECT_TRUE(is_permutation_matrix(hard.to_matrix()));
  s.zero_grad();
  ad::backward(ad::sum(hard * w));
  const std::vector<double> ste(s.grad().begin(), s.grad().end());
  const auto soft_check =
      testing::grad_check({s}, [&] { return ad::sum(soft_permutation(s, 0.5) * w); });
  EXPECT_LT(testing::relative_error(ste, soft_check.numeric[0]), 1e-6);
}

TEST(EdgeMatrix, SigmoidValuesAndMask) {
  Tensor logits = Tensor::parameter({3, 3}, {9, 0, 4, 9, 9, -3, 9, 9, 9});
  const Matrix u = edge_matrix(logits, 2.0, false).to_matrix();
  EXPECT_EQ(u(0, 1), 0.5);
  EXPECT_NEAR(u(0, 2), 0.8807970779778823, 1e-15);
  EXPECT_NEAR(u(1, 2), 1.0 / (1.0 + std::exp(1.5)), 1e-15);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j <= i; ++j) EXPECT_EQ(u(i, j), 0.0);
  const Matrix hard = edge_matrix(logits, 2.0, true).to_matrix();
  EXPECT_EQ(hard(0, 1), 0.0);
  EXPECT_EQ(hard(0, 2), 1.0);
  EXPECT_EQ(hard(1, 2), 0.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j <= i; ++j) EXPECT_EQ(hard(i, j), 0.0);
}

TEST(EdgeMatrix, NonPositiveTemperatureThrows) {
  EXPECT_THROW(edge_matrix(Tensor::zeros({2, 2}), 0.0, false), std::invalid_argument);
}

TEST(Adjacency, IdentityPermutationReturnsEdges) {
  const Tensor u = Tensor::constant({3, 3}, {0, 1, 0, 0, 0, 1, 0, 0, 0});
  const Tensor id = Tensor::constant(Matrix::identity(3));
  EXPECT_TRUE(assemble_adjacency(id, u).to_matrix() == u.to_matrix());
}

TEST(Adjacency, SwapRelabelsEdge) {
  const Tensor u = Tensor::constant({2, 2}, {0, 1, 0, 0});
  const Tensor swap = Tensor::constant({2, 2}, {0, 1, 1, 0});
  const Matrix a = assemble_adjacency(swap, u).to_matrix();
  EXPECT_EQ(a(1, 0), 1.0);
  EXPECT_EQ(a(0, 1), 0.0);
  EXPECT_EQ(a(0, 0), 0.0);
  EXPECT_EQ(a(1, 1), 0.0);
}

TEST(Adjacency, ShapeMismatchThrows) {
  EXPECT_THROW(assemble_adjacency(Tensor::zeros({2, 2}), Tensor::zeros({3, 3})),
               std::invalid_argument);
}

TEST(Adjacency, HardAdjacencyAlwaysAcyclic) {
  Rng rng(99);
  for (int draw = 0; draw < 1000; ++draw) {
    const std::size_t n = 2 + draw % 9;
    DagParams p = DagParams::init(n, rng, uniform(rng, 0.05, 2.0), uniform(rng, 0.1, 5.0), 2.0,
                                  0.0, 3.0);
    const Matrix a = forward(p, true).adjacency.to_matrix();
    for (double v : a.data()) ASSERT_TRUE(v == 0.0 || v == 1.0);
    ASSERT_TRUE(topological_order(a).has_value()) << "draw " << draw;
  }
}

TEST(Adjacency, StraightThroughGradientReachesEdgeLogits) {
  Rng rng(5);
  DagParams p = DagParams::init(4, rng, 0.3, 1.0);
  p.edge_logits.zero_grad();
  ad::backward(ad::sum(forward(p, true).adjacency));
  double norm = 0.0;
  for (double g : p.edge_logits.grad()) norm += g * g;
  EXPECT_GT(norm, 0.0);

  // The live path equals the derivative of the soft surrogate with the hard
  // permutation held fixed.
  const Tensor perm_hard =
      Tensor::constant(greedy_permutation(soft_permutation(p.perm_scores, p.tau_perm).to_matrix()));
  const std::vector<double> ste(p.edge_logits.grad().begin(), p.edge_logits.grad().end());
  Tensor logits = p.edge_logits;
  const auto check = testing::grad_check({logits}, [&] {
    return ad::sum(assemble_adjacency(perm_hard, edge_matrix(logits, p.tau_edges, false)));
  });
  EXPECT_LT(testing::relative_error(ste, check.numeric[0]), 1e-6);
}

TEST(Sparsity, PriorIsTheMinimumAndEqualsBinaryEntropy) {
  const double p0 = 0.01;
  const double h = -(p0 * std::log(p0) + (1 - p0) * std::log(1 - p0));
  Tensor u = Tensor::full({3, 3}, p0);
  EXPECT_NEAR(sparsity_loss(u, p0).item(), h, 1e-14);
  Tensor u2 = Tensor::full({3, 3}, 0.02);
  EXPECT_GT(sparsity_loss(u2, p0).item(), h);
}

TEST(Sparsity, HalfGivesLogTwo) {
  EXPECT_NEAR(sparsity_loss(Tensor::full({4, 4}, 0.5)).item(), std::log(2.0), 1e-14);
}

TEST(Sparsity, InvalidPriorThrows) {
  EXPECT_THROW(sparsity_loss(Tensor::full({2, 2}, 0.5), 0.0), std::invalid_argument);
  EXPECT_THROW(sparsity_loss(Tensor::full({2, 2}, 0.5), 1.0), std::invalid_argument);
}

TEST(Sparsity, GradientMatchesFiniteDifferences) {
  Rng rng(8);
  Tensor logits = Tensor::parameter({4, 4}, normal_vector(rng, 16, 1.0));
  const auto r = testing::grad_check(
      {logits}, [&] { return sparsity_loss(edge_matrix(logits, 1.5, false), 0.05); });
  EXPECT_LT(r.max_relative_error, 1e-6);
}

TEST(Entropy, HardPermutationIsZeroAndUniformIsLogN) {
  EXPECT_EQ(permutation_entropy(Tensor::constant(Matrix::identity(4))).item(), 0.0);
  EXPECT_NEAR(permutation_entropy(Tensor::full({4, 4}, 0.25)).item(), std::log(4.0), 1e-14);
}

TEST(Entropy, DecreasesWithTemperature) {
  const Tensor s = scores_of({0.4, -1.2, 0.9, 0.1, -0.3});
  double prev = std::numeric_limits<double>::infinity();
  for (double tau = 3.0; tau > 0.02; tau *= 0.8) {
    const double h = permutation_entropy(soft_permutation(s, tau)).item();
    EXPECT_LT(h, prev) << "tau " << tau;
    prev = h;
  }
}

TEST(Entropy, GradientMatchesFiniteDifferences) {
  Tensor s = scores_of({0.4, -1.2, 0.9, 0.1});
  const auto r =
      testing::grad_check({s}, [&] { return permutation_entropy(soft_permutation(s, 0.6)); });
  EXPECT_LT(r.max_relative_error, 1e-6);
}

TEST(Export, OrderMatchesAdjacencyAndRoundTrips) {
  Rng rng(3);
  DagParams p = DagParams::init(5, rng, 0.2, 1.0, 1.0, 0.5, 2.0);
  const LearnedGraph g = export_graph(p);
  std::vector<std::size_t> pos(5);
  for (std::size_t k = 0; k < 5; ++k) pos[g.order[k]] = k;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      if (g.adjacency(i, j) == 1.0) {
        EXPECT_LT(pos[i], pos[j]);
        EXPECT_GT(g.edge_probs(i, j), 0.5);
      }
  const nlohmann::json j = p;
  const auto restored = j.get<DagParams>();
  EXPECT_TRUE(export_graph(restored).adjacency == g.adjacency);
  const nlohmann::json jg = g;
  EXPECT_EQ(jg.at("order").size(), 5u);
}

}  // namespace
}  // namespace lanca::dag
