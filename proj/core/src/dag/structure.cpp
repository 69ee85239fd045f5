#include "lanca/dag/structure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "lanca/matrix_json.hpp"

namespace lanca::dag {

namespace {

ad::Tensor strict_upper_mask(std::size_t n) {
  std::vector<double> mask(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) mask[i * n + j] = 1.0;
  return ad::Tensor::constant({n, n}, std::move(mask));
}

void require_square(const ad::Tensor& t, const char* what) {
  if (t.dim() != 2 || t.shape()[0] != t.shape()[1]) {
    throw std::invalid_argument(std::string(what) + ": expected a square matrix, got " +
                                ad::shape_to_string(t.shape()));
  }
}

}  // namespace

DagParams DagParams::init(std::size_t n, Rng& rng, double tau_perm, double tau_edges,
                          double score_std, double logit_mean, double logit_std) {
  if (n == 0) throw std::invalid_argument("DagParams::init: need at least one node");
  if (!(tau_perm > 0.0) || !(tau_edges > 0.0)) {
    throw std::invalid_argument("DagParams::init: temperatures must be > 0");
  }
  DagParams p;
  p.perm_scores = ad::Tensor::parameter({1, n}, normal_vector(rng, n, score_std));
  auto logits = normal_vector(rng, n * n, logit_std);
  for (double& v : logits) v += logit_mean;
  p.edge_logits = ad::Tensor::parameter({n, n}, std::move(logits));
  p.tau_perm = tau_perm;
  p.tau_edges = tau_edges;
  return p;
}

ad::Tensor soft_permutation(const ad::Tensor& perm_scores, double tau_perm) {
  if (!(tau_perm > 0.0)) {
    throw std::invalid_argument("soft_permutation: tau_perm must be > 0, got " +
                                std::to_string(tau_perm));
  }
  const std::size_t n = perm_scores.size();
  const ad::Tensor sorted = ad::reshape(ad::sort_desc(perm_scores), {n, 1});
  const ad::Tensor scores = ad::reshape(perm_scores, {1, n});
  return ad::softmax_temp(-ad::abs(sorted - scores), 1, tau_perm);
}

Matrix greedy_permutation(const Matrix& soft) {
  const std::size_t n = soft.rows();
  if (soft.cols() != n) throw std::invalid_argument("greedy_permutation: matrix is not square");
  std::vector<double> row_max(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = soft.row(i);
    row_max[i] = *std::max_element(r.begin(), r.end());
  }
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  std::stable_sort(rows.begin(), rows.end(),
                   [&](std::size_t a, std::size_t b) { return row_max[a] > row_max[b]; });
  std::vector<bool> taken(n, false);
  Matrix hard(n, n);
  for (std::size_t i : rows) {
    std::size_t best = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (taken[j]) continue;
      if (best == n || soft(i, j) > soft(i, best)) best = j;
    }
    taken[best] = true;
    hard(i, best) = 1.0;
  }
  return hard;
}

ad::Tensor harden_permutation(const ad::Tensor& perm_soft) {
  require_square(perm_soft, "harden_permutation");
  return ad::straight_through(ad::Tensor::constant(greedy_permutation(perm_soft.to_matrix())),
                              perm_soft);
}

ad::Tensor edge_matrix(const ad::Tensor& edge_logits, double tau_edges, bool hard) {
  require_square(edge_logits, "edge_matrix");
  if (!(tau_edges > 0.0)) {
    throw std::invalid_argument("edge_matrix: tau_edges must be > 0, got " +
                                std::to_string(tau_edges));
  }
  const std::size_t n = edge_logits.shape()[0];
  const ad::Tensor soft = ad::sigmoid(edge_logits * (1.0 / tau_edges)) * strict_upper_mask(n);
  if (!hard) return soft;
  std::vector<double> gate(n * n);
  const auto values = soft.values();
  for (std::size_t k = 0; k < gate.size(); ++k) gate[k] = values[k] > 0.5 ? 1.0 : 0.0;
  return ad::straight_through(ad::Tensor::constant({n, n}, std::move(gate)), soft);
}

ad::Tensor assemble_adjacency(const ad::Tensor& perm, const ad::Tensor& edges) {
  require_square(perm, "assemble_adjacency");
  require_square(edges, "assemble_adjacency");
  if (perm.shape() != edges.shape()) {
    throw std::invalid_argument("assemble_adjacency: permutation " +
                                ad::shape_to_string(perm.shape()) + " vs edges " +
                                ad::shape_to_string(edges.shape()));
  }
  return ad::matmul(ad::transpose(perm), ad::matmul(edges, perm));
}

ad::Tensor sparsity_loss(const ad::Tensor& edges_soft, double p0) {
  require_square(edges_soft, "sparsity_loss");
  if (!(p0 > 0.0 && p0 < 1.0)) {
    throw std::invalid_argument("sparsity_loss: p0 must lie in (0, 1), got " + std::to_string(p0));
  }
  const std::size_t n = edges_soft.shape()[0];
  if (n < 2) return ad::Tensor::scalar(0.0);
  constexpr double kEps = 1e-12;
  const ad::Tensor u = ad::clamp(edges_soft, kEps, 1.0 - kEps);
  const ad::Tensor bce = -(ad::log(u) * p0 + ad::log(-u + 1.0) * (1.0 - p0));
  const double pairs = static_cast<double>(n * (n - 1) / 2);
  return ad::sum(bce * strict_upper_mask(n)) * (1.0 / pairs);
}

ad::Tensor permutation_entropy(const ad::Tensor& perm_soft) {
  require_square(perm_soft, "permutation_entropy");
  return ad::sum(ad::xlogx(perm_soft)) * (-1.0 / static_cast<double>(perm_soft.shape()[0]));
}

DagState forward(const DagParams& params, bool hard) {
  DagState s;
  s.perm_soft = soft_permutation(params.perm_scores, params.tau_perm);
  s.perm = hard ? harden_permutation(s.perm_soft) : s.perm_soft;
  s.edges_soft = edge_matrix(params.edge_logits, params.tau_edges, false);
  s.edges = hard ? edge_matrix(params.edge_logits, params.tau_edges, true) : s.edges_soft;
  s.adjacency = assemble_adjacency(s.perm, s.edges);
  return s;
}

std::optional<std::vector<std::size_t>> topological_order(const Matrix& adjacency) {
  const std::size_t n = adjacency.rows();
  std::vector<std::size_t> indegree(n, 0), order;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (adjacency(i, j) != 0.0) ++indegree[j];
  std::vector<bool> done(n, false);
  while (order.size() < n) {
    std::size_t next = n;
    for (std::size_t v = 0; v < n; ++v)
      if (!done[v] && indegree[v] == 0) {
        next = v;
        break;
      }
    if (next == n) return std::nullopt;
    done[next] = true;
    order.push_back(next);
    for (std::size_t j = 0; j < n; ++j)
      if (adjacency(next, j) != 0.0) --indegree[j];
  }
  return order;
}

LearnedGraph export_graph(const DagParams& params) {
  const DagState s = forward(params, true);
  const Matrix perm = s.perm.to_matrix();
  const std::size_t n = perm.rows();
  LearnedGraph g;
  g.order.resize(n);
  for (std::size_t pos = 0; pos < n; ++pos)
    for (std::size_t node = 0; node < n; ++node)
      if (perm(pos, node) == 1.0) g.order[pos] = node;
  g.adjacency = s.adjacency.to_matrix();
  g.edge_probs = matmul(perm.transposed(), matmul(s.edges_soft.to_matrix(), perm));
  return g;
}

void to_json(nlohmann::json& j, const LearnedGraph& g) {
  j = nlohmann::json{{"order", g.order}, {"adjacency", g.adjacency}, {"edge_probs", g.edge_probs}};
}

void to_json(nlohmann::json& j, const DagParams& p) {
  j = nlohmann::json{{"n", p.n_nodes()},
                     {"perm_scores", std::vector<double>(p.perm_scores.values().begin(),
                                                         p.perm_scores.values().end())},
                     {"edge_logits", std::vector<double>(p.edge_logits.values().begin(),
                                                         p.edge_logits.values().end())},
                     {"tau_perm", p.tau_perm},
                     {"tau_edges", p.tau_edges}};
}

void from_json(const nlohmann::json& j, DagParams& p) {
  const auto n = j.at("n").get<std::size_t>();
  auto scores = j.at("perm_scores").get<std::vector<double>>();
  auto logits = j.at("edge_logits").get<std::vector<double>>();
  if (scores.size() != n || logits.size() != n * n) {
    throw std::invalid_argument("DagParams: stored arrays do not match n = " + std::to_string(n));
  }
  p.perm_scores = ad::Tensor::parameter({1, n}, std::move(scores));
  p.edge_logits = ad::Tensor::parameter({n, n}, std::move(logits));
  p.tau_perm = j.at("tau_perm").get<double>();
  p.tau_edges = j.at("tau_edges").get<double>();
}

}  // namespace lanca::dag
