#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "lanca/matrix.hpp"

namespace lanca::metrics {

inline constexpr std::size_t kDefaultBins = 20;

// Equal-frequency bin index per sample; tied values share a bin.
std::vector<std::size_t> equal_frequency_bins(std::span<const double> a, std::size_t bins);

// Shannon entropy (nats) of the equal-frequency binning of a.
double binned_entropy(std::span<const double> a, std::size_t bins = kDefaultBins);

struct MiEstimate {
  double value = 0.0;       // nats, clamped at 0
  bool degenerate = false;  // one side was constant
};

MiEstimate mutual_info(std::span<const double> a, std::span<const double> b,
                       std::size_t bins = kDefaultBins);

// mi(l, f) = MI(z[:, l], s[:, f]).
Matrix mi_matrix(const Matrix& z, const Matrix& s, std::size_t bins = kDefaultBins);

// Maximum-weight assignment of every column to a distinct row (rows >= cols).
// Returns the row chosen for each column.
std::vector<std::size_t> hungarian_max(const Matrix& score);

struct AlignmentResult {
  Matrix mi;                                // latents x factors
  std::vector<std::size_t> latent_of_factor;
  std::vector<long> factor_of_latent;       // -1 for unmatched latents
  double mmi = 0.0;
};

// Throws if z has fewer columns than s.
AlignmentResult align(const Matrix& z, const Matrix& s, std::size_t bins = kDefaultBins);

struct MigResult {
  double value = 0.0;
  std::vector<std::size_t> excluded_factors;  // zero entropy after binning
};

MigResult mig(const Matrix& z, const Matrix& s, std::size_t bins = kDefaultBins);

void to_json(nlohmann::json& j, const AlignmentResult& r);

}  // namespace lanca::metrics
