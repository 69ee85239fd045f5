#include "lanca/metrics/information.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "lanca/matrix_json.hpp"

namespace lanca::metrics {

namespace {

// Sums -p log p over the counts in ascending order so the result does not
// depend on how the cells were enumerated.
double entropy_of_counts(std::vector<std::size_t> counts, std::size_t total) {
  std::sort(counts.begin(), counts.end());
  const double n = static_cast<double>(total);
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

void require_bins(std::size_t bins) {
  if (bins < 2) throw std::invalid_argument("mutual_info: need at least 2 bins");
}

}  // namespace

std::vector<std::size_t> equal_frequency_bins(std::span<const double> a, std::size_t bins) {
  require_bins(bins);
  const std::size_t n = a.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x] < a[y]; });
  std::vector<std::size_t> out(n);
  std::size_t run_bin = 0;
  for (std::size_t p = 0; p < n; ++p) {
    if (p == 0 || a[order[p]] != a[order[p - 1]]) run_bin = p * bins / n;
    out[order[p]] = run_bin;
  }
  return out;
}

double binned_entropy(std::span<const double> a, std::size_t bins) {
  if (a.empty()) return 0.0;
  std::vector<std::size_t> counts(bins, 0);
  for (std::size_t b : equal_frequency_bins(a, bins)) ++counts[b];
  return entropy_of_counts(std::move(counts), a.size());
}

MiEstimate mutual_info(std::span<const double> a, std::span<const double> b, std::size_t bins) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("mutual_info: sample counts differ (" + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw std::invalid_argument("mutual_info: no samples");
  const auto ba = equal_frequency_bins(a, bins);
  const auto bb = equal_frequency_bins(b, bins);
  std::vector<std::size_t> ca(bins, 0), cb(bins, 0), joint(bins * bins, 0);
  for (std::size_t k = 0; k < a.size(); ++k) {
    ++ca[ba[k]];
    ++cb[bb[k]];
    ++joint[ba[k] * bins + bb[k]];
  }
  const double ha = entropy_of_counts(std::move(ca), a.size());
  const double hb = entropy_of_counts(std::move(cb), a.size());
  MiEstimate out;
  out.degenerate = ha == 0.0 || hb == 0.0;
  if (out.degenerate) return out;
  out.value = std::max(0.0, (ha + hb) - entropy_of_counts(std::move(joint), a.size()));
  return out;
}

Matrix mi_matrix(const Matrix& z, const Matrix& s, std::size_t bins) {
  if (z.rows() != s.rows()) throw std::invalid_argument("mi_matrix: row counts differ");
  Matrix out(z.cols(), s.cols());
  std::vector<std::vector<double>> zc(z.cols()), sc(s.cols());
  for (std::size_t l = 0; l < z.cols(); ++l) zc[l] = z.column(l);
  for (std::size_t f = 0; f < s.cols(); ++f) sc[f] = s.column(f);
  for (std::size_t l = 0; l < z.cols(); ++l)
    for (std::size_t f = 0; f < s.cols(); ++f) out(l, f) = mutual_info(zc[l], sc[f], bins).value;
  return out;
}

std::vector<std::size_t> hungarian_max(const Matrix& score) {
  const std::size_t n_rows = score.rows(), m = score.cols();
  if (n_rows < m) {
    throw std::invalid_argument("hungarian_max: " + std::to_string(n_rows) + " rows for " +
                                std::to_string(m) + " columns");
  }
  if (m == 0) return {};
  // Shortest augmenting path with potentials; columns of `score` play the
  // role of the smaller side. Index 0 is a sentinel.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(m + 1, 0.0), v(n_rows + 1, 0.0);
  std::vector<std::size_t> match(n_rows + 1, 0), way(n_rows + 1, 0);
  auto cost = [&](std::size_t col, std::size_t row) { return -score(row - 1, col - 1); };
  for (std::size_t c = 1; c <= m; ++c) {
    match[0] = c;
    std::size_t r0 = 0;
    std::vector<double> minv(n_rows + 1, inf);
    std::vector<char> used(n_rows + 1, 0);
    do {
      used[r0] = 1;
      const std::size_t c0 = match[r0];
      double delta = inf;
      std::size_t r1 = 0;
      for (std::size_t r = 1; r <= n_rows; ++r) {
        if (used[r]) continue;
        const double cur = cost(c0, r) - u[c0] - v[r];
        if (cur < minv[r]) {
          minv[r] = cur;
          way[r] = r0;
        }
        if (minv[r] < delta) {
          delta = minv[r];
          r1 = r;
        }
      }
      for (std::size_t r = 0; r <= n_rows; ++r) {
        if (used[r]) {
          u[match[r]] += delta;
          v[r] -= delta;
        } else {
          minv[r] -= delta;
        }
      }
      r0 = r1;
    } while (match[r0] != 0);
    do {
      const std::size_t r1 = way[r0];
      match[r0] = match[r1];
      r0 = r1;
    } while (r0 != 0);
  }
  std::vector<std::size_t> row_of_col(m);
  for (std::size_t r = 1; r <= n_rows; ++r)
    if (match[r] != 0) row_of_col[match[r] - 1] = r - 1;
  return row_of_col;
}

AlignmentResult align(const Matrix& z, const Matrix& s, std::size_t bins) {
  if (z.cols() < s.cols()) {
    throw std::invalid_argument("align: " + std::to_string(z.cols()) + " latents for " +
                                std::to_string(s.cols()) + " factors");
  }
  AlignmentResult r;
  r.mi = mi_matrix(z, s, bins);
  r.latent_of_factor = hungarian_max(r.mi);
  r.factor_of_latent.assign(z.cols(), -1);
  double total = 0.0;
  for (std::size_t f = 0; f < s.cols(); ++f) {
    r.factor_of_latent[r.latent_of_factor[f]] = static_cast<long>(f);
    total += r.mi(r.latent_of_factor[f], f);
  }
  r.mmi = s.cols() > 0 ? total / static_cast<double>(s.cols()) : 0.0;
  return r;
}

MigResult mig(const Matrix& z, const Matrix& s, std::size_t bins) {
  if (z.cols() < s.cols()) throw std::invalid_argument("mig: fewer latents than factors");
  const Matrix mi = mi_matrix(z, s, bins);
  MigResult out;
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t f = 0; f < s.cols(); ++f) {
    const double h = binned_entropy(s.column(f), bins);
    if (h <= 0.0) {
      out.excluded_factors.push_back(f);
      continue;
    }
    double top = 0.0, second = 0.0;
    for (std::size_t l = 0; l < z.cols(); ++l) {
      const double v = mi(l, f);
      if (v > top) {
        second = top;
        top = v;
      } else if (v > second) {
        second = v;
      }
    }
    total += (top - second) / h;
    ++used;
  }
  out.value = used > 0 ? total / static_cast<double>(used) : 0.0;
  return out;
}

void to_json(nlohmann::json& j, const AlignmentResult& r) {
  j = nlohmann::json{{"mi_matrix", r.mi},
                     {"latent_of_factor", r.latent_of_factor},
                     {"factor_of_latent", r.factor_of_latent},
                     {"mmi", r.mmi}};
}

}  // namespace lanca::metrics
