#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <vector>

#include "lanca/matrix.hpp"

namespace lanca::metrics {

// Insertions + deletions + reversals; a reversed edge counts once.
std::size_t shd(const Matrix& a_true, const Matrix& a_est);

// Structural intervention distance: ordered pairs (i, j) for which adjusting
// by the parents of i in a_est does not identify p(x_j | do(x_i)) in a_true.
// Throws on size mismatch or a cyclic input.
std::size_t sid(const Matrix& a_true, const Matrix& a_est);

// d-separation of x and y given z in the DAG.
bool d_separated(const Matrix& adjacency, std::size_t x, std::size_t y,
                 const std::set<std::size_t>& z);

// out(f, g) = a(latent_of_factor[f], latent_of_factor[g]); unmatched latents drop out.
Matrix relabel(const Matrix& a, const std::vector<std::size_t>& latent_of_factor);

// Mean SHD against a_true of `draws` random DAGs (shuffled order, each
// forward pair an edge with probability 1/2).
double random_dag_shd(const Matrix& a_true, std::size_t draws, std::uint64_t seed);

}  // namespace lanca::metrics
