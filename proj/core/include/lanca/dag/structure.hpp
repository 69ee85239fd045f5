#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "lanca/autodiff/ops.hpp"
#include "lanca/matrix.hpp"
#include "lanca/random.hpp"

namespace lanca::dag {

// Learnable graph parameters. Only the strict upper triangle of edge_logits
// is ever read.
struct DagParams {
  ad::Tensor perm_scores;  // [1 x n]
  ad::Tensor edge_logits;  // [n x n]
  double tau_perm = 0.1;
  double tau_edges = 1.0;

  // perm_scores ~ N(0, score_std^2); edge logits ~ N(logit_mean, logit_std^2).
  static DagParams init(std::size_t n, Rng& rng, double tau_perm, double tau_edges,
                        double score_std = 0.1, double logit_mean = 0.0, double logit_std = 0.1);

  std::size_t n_nodes() const { return perm_scores.size(); }
  std::vector<ad::Tensor> perm_parameters() const { return {perm_scores}; }
  std::vector<ad::Tensor> edge_parameters() const { return {edge_logits}; }
};

// Pi_soft[i][j] = softmax_j(-|sorted_desc(scores)[i] - scores[j]| / tau). Row i
// is topological position i, column j is node j.
ad::Tensor soft_permutation(const ad::Tensor& perm_scores, double tau_perm);

// Greedy hardening: rows claim columns in order of descending row maximum
// (ties to the lower row), each taking its best unclaimed column (ties to the
// lower column).
Matrix greedy_permutation(const Matrix& soft);
// Hard permutation in the forward pass, soft gradient in the backward pass.
ad::Tensor harden_permutation(const ad::Tensor& perm_soft);

// Strictly upper-triangular sigmoid(logit / tau); with `hard`, thresholded at
// 0.5 (strictly greater is an edge) behind a straight-through estimator.
ad::Tensor edge_matrix(const ad::Tensor& edge_logits, double tau_edges, bool hard);

// A = Pi^T U Pi.
ad::Tensor assemble_adjacency(const ad::Tensor& perm, const ad::Tensor& edges);

// Mean over strict-upper entries of BCE(u, p0).
ad::Tensor sparsity_loss(const ad::Tensor& edges_soft, double p0 = 0.01);

// Mean over rows of the Shannon entropy of Pi_soft.
ad::Tensor permutation_entropy(const ad::Tensor& perm_soft);

struct DagState {
  ad::Tensor perm_soft;
  ad::Tensor perm;  // hardened (STE) or soft
  ad::Tensor edges_soft;
  ad::Tensor edges;  // hardened (STE) or soft
  ad::Tensor adjacency;
};

DagState forward(const DagParams& params, bool hard = true);

// Kahn order with ties to the lowest index; nullopt if the graph has a cycle.
std::optional<std::vector<std::size_t>> topological_order(const Matrix& adjacency);

struct LearnedGraph {
  std::vector<std::size_t> order;  // node at each topological position
  Matrix adjacency;                // binary, adjacency(i, j) = 1 means i -> j
  Matrix edge_probs;               // soft edge weights relabeled to node indices
};

LearnedGraph export_graph(const DagParams& params);

void to_json(nlohmann::json& j, const LearnedGraph& g);
void to_json(nlohmann::json& j, const DagParams& p);
// Restores values into freshly created parameters.
void from_json(const nlohmann::json& j, DagParams& p);

}  // namespace lanca::dag
