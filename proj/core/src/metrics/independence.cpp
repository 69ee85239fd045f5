#include "lanca/metrics/independence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "lanca/random.hpp"

namespace lanca::metrics {

namespace {

double sq_dist(const Matrix& x, std::size_t a, std::size_t b) {
  double d = 0.0;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const double t = x(a, c) - x(b, c);
    d += t * t;
  }
  return d;
}

void center_columns(Matrix& g) {
  for (std::size_t c = 0; c < g.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < g.rows(); ++r) mean += g(r, c);
    mean /= static_cast<double>(g.rows());
    for (std::size_t r = 0; r < g.rows(); ++r) g(r, c) -= mean;
  }
}

// || gx^T P gy ||_F^2 for the row permutation `perm` applied to gy.
double cross_norm(const Matrix& gx, const Matrix& gy, std::span<const std::size_t> perm) {
  const std::size_t rx = gx.cols(), ry = gy.cols();
  std::vector<double> cross(rx * ry, 0.0);
  for (std::size_t r = 0; r < gx.rows(); ++r) {
    const auto xr = gx.row(r);
    const auto yr = gy.row(perm[r]);
    for (std::size_t a = 0; a < rx; ++a) {
      const double xa = xr[a];
      double* out = cross.data() + a * ry;
      for (std::size_t b = 0; b < ry; ++b) out[b] += xa * yr[b];
    }
  }
  double total = 0.0;
  for (double v : cross) total += v * v;
  return total;
}

}  // namespace

double median_heuristic(const Matrix& x, std::size_t max_points) {
  const std::size_t n = x.rows();
  const std::size_t m = std::min(n, max_points);
  if (m < 2) return 1.0;
  std::vector<std::size_t> idx(m);
  for (std::size_t k = 0; k < m; ++k) idx[k] = k * n / m;
  std::vector<double> d;
  d.reserve(m * (m - 1) / 2);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b) d.push_back(sq_dist(x, idx[a], idx[b]));
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  const double med = std::sqrt(*mid);
  return med > 0.0 ? med : 1.0;
}

Matrix rbf_incomplete_cholesky(const Matrix& x, double sigma, double tol, std::size_t max_rank) {
  const std::size_t n = x.rows();
  const double inv = -1.0 / (2.0 * sigma * sigma);
  std::vector<double> diag(n, 1.0);
  std::vector<std::vector<double>> cols;
  while (cols.size() < std::min(max_rank, n)) {
    const double residual = std::accumulate(diag.begin(), diag.end(), 0.0);
    if (residual <= tol * static_cast<double>(n)) break;
    const std::size_t p =
        static_cast<std::size_t>(std::max_element(diag.begin(), diag.end()) - diag.begin());
    if (diag[p] <= 1e-12) break;
    const double root = std::sqrt(diag[p]);
    std::vector<double> col(n);
    for (std::size_t r = 0; r < n; ++r) {
      double v = std::exp(sq_dist(x, r, p) * inv);
      for (const auto& prev : cols) v -= prev[r] * prev[p];
      col[r] = v / root;
    }
    for (std::size_t r = 0; r < n; ++r) diag[r] = std::max(0.0, diag[r] - col[r] * col[r]);
    diag[p] = 0.0;
    cols.push_back(std::move(col));
  }
  Matrix g(n, cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) g.set_column(c, cols[c]);
  return g;
}

IndependenceResult independence_test(const Matrix& x, const Matrix& y,
                                     const IndependenceConfig& config) {
  if (x.rows() != y.rows()) {
    throw std::invalid_argument("independence_test: sample counts differ (" +
                                std::to_string(x.rows()) + " vs " + std::to_string(y.rows()) + ")");
  }
  if (x.rows() < 4) throw std::invalid_argument("independence_test: need at least 4 samples");
  if (config.shuffles == 0) throw std::invalid_argument("independence_test: need shuffles >= 1");
  const std::size_t n = x.rows();
  Matrix gx = rbf_incomplete_cholesky(x, median_heuristic(x), config.cholesky_tol, config.max_rank);
  Matrix gy = rbf_incomplete_cholesky(y, median_heuristic(y), config.cholesky_tol, config.max_rank);
  center_columns(gx);
  center_columns(gy);

  const double norm = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  IndependenceResult out;
  out.statistic = cross_norm(gx, gy, perm) * norm;
  Rng rng = derive_rng(config.seed, 21);
  std::size_t exceed = 0;
  for (std::size_t s = 0; s < config.shuffles; ++s) {
    std::shuffle(perm.begin(), perm.end(), rng);
    if (cross_norm(gx, gy, perm) * norm >= out.statistic) ++exceed;
  }
  out.p_value = static_cast<double>(1 + exceed) / static_cast<double>(1 + config.shuffles);
  out.independent = out.p_value > config.alpha;
  return out;
}

}  // namespace lanca::metrics
