#include "lanca/metrics/graph.hpp"

#include <stdexcept>
#include <string>

#include "lanca/dag/structure.hpp"
#include "lanca/scm/synthetic.hpp"

namespace lanca::metrics {

namespace {

void require_square_pair(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
    throw std::invalid_argument(std::string(what) + ": adjacency sizes differ (" +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
  }
}

bool edge(const Matrix& a, std::size_t i, std::size_t j) { return a(i, j) != 0.0; }

// reach[i][j]: a directed path of length >= 0 leads from i to j.
std::vector<std::vector<char>> reachability(const Matrix& a) {
  const std::size_t n = a.rows();
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    reach[i][i] = 1;
    std::vector<std::size_t> stack{i};
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < n; ++v)
        if (edge(a, u, v) && !reach[i][v]) {
          reach[i][v] = 1;
          stack.push_back(v);
        }
    }
  }
  return reach;
}

}  // namespace

std::size_t shd(const Matrix& a_true, const Matrix& a_est) {
  require_square_pair(a_true, a_est, "shd");
  const std::size_t n = a_true.rows();
  std::size_t d = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (edge(a_true, i, j) != edge(a_est, i, j) || edge(a_true, j, i) != edge(a_est, j, i)) ++d;
    }
  return d;
}

bool d_separated(const Matrix& a, std::size_t x, std::size_t y, const std::set<std::size_t>& z) {
  const std::size_t n = a.rows();
  // Moralized ancestral graph of {x, y} + z with z removed.
  std::vector<char> keep(n, 0);
  std::vector<std::size_t> stack{x, y};
  stack.insert(stack.end(), z.begin(), z.end());
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    if (keep[u]) continue;
    keep[u] = 1;
    for (std::size_t p = 0; p < n; ++p)
      if (edge(a, p, u)) stack.push_back(p);
  }
  std::vector<std::vector<char>> und(n, std::vector<char>(n, 0));
  for (std::size_t c = 0; c < n; ++c) {
    if (!keep[c]) continue;
    std::vector<std::size_t> parents;
    for (std::size_t p = 0; p < n; ++p)
      if (edge(a, p, c)) parents.push_back(p);
    for (std::size_t p : parents) und[p][c] = und[c][p] = 1;
    for (std::size_t k = 0; k < parents.size(); ++k)
      for (std::size_t l = k + 1; l < parents.size(); ++l)
        und[parents[k]][parents[l]] = und[parents[l]][parents[k]] = 1;
  }
  std::vector<char> seen(n, 0);
  stack = {x};
  seen[x] = 1;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    if (u == y) return false;
    for (std::size_t v = 0; v < n; ++v)
      if (und[u][v] && keep[v] && !seen[v] && !z.count(v)) {
        seen[v] = 1;
        stack.push_back(v);
      }
  }
  return true;
}

std::size_t sid(const Matrix& a_true, const Matrix& a_est) {
  require_square_pair(a_true, a_est, "sid");
  if (!dag::topological_order(a_true)) throw std::invalid_argument("sid: true graph has a cycle");
  if (!dag::topological_order(a_est)) throw std::invalid_argument("sid: estimated graph has a cycle");
  const std::size_t n = a_true.rows();
  const auto reach = reachability(a_true);
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::set<std::size_t> z;
    for (std::size_t p = 0; p < n; ++p)
      if (edge(a_est, p, i)) z.insert(p);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (z.count(j)) {
        // The estimate claims no effect of i on j.
        if (reach[i][j]) ++count;
        continue;
      }
      // No member of z may descend from a node w != i on a directed i -> j path.
      bool bad = false;
      for (std::size_t w = 0; w < n && !bad; ++w) {
        if (w == i || !reach[i][w] || !reach[w][j]) continue;
        for (std::size_t k : z)
          if (reach[w][k]) bad = true;
      }
      if (!bad) {
        // z must block every non-causal path: cut the first edges of the
        // directed i -> j paths and test d-separation.
        Matrix cut = a_true;
        for (std::size_t c = 0; c < n; ++c)
          if (edge(a_true, i, c) && reach[c][j]) cut(i, c) = 0.0;
        bad = !d_separated(cut, i, j, z);
      }
      if (bad) ++count;
    }
  }
  return count;
}

Matrix relabel(const Matrix& a, const std::vector<std::size_t>& latent_of_factor) {
  const std::size_t m = latent_of_factor.size();
  Matrix out(m, m);
  for (std::size_t f = 0; f < m; ++f)
    for (std::size_t g = 0; g < m; ++g) {
      const std::size_t lf = latent_of_factor[f], lg = latent_of_factor[g];
      if (lf >= a.rows() || lg >= a.rows()) throw std::out_of_range("relabel: latent index out of range");
      out(f, g) = a(lf, lg);
    }
  return out;
}

double random_dag_shd(const Matrix& a_true, std::size_t draws, std::uint64_t seed) {
  if (draws == 0) throw std::invalid_argument("random_dag_shd: need at least one draw");
  double total = 0.0;
  for (std::size_t k = 0; k < draws; ++k) {
    total += static_cast<double>(shd(a_true, scm::random_dag(a_true.rows(), 0.5, seed + k)));
  }
  return total / static_cast<double>(draws);
}

}  // namespace lanca::metrics
