#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lanca/autodiff/tensor.hpp"

namespace lanca::ad {

enum class UnaryKind { kNeg, kExp, kLog, kAbs, kSquare, kSqrt, kSigmoid, kRelu, kTanh, kSilu, kGelu };
enum class BinaryKind { kAdd, kSub, kMul, kDiv };

// Elementwise primitives. Binary forms broadcast over trailing dimensions
// (numpy rules); a shape mismatch throws naming both shapes.
Tensor elementwise(UnaryKind kind, const Tensor& a);
Tensor elementwise(BinaryKind kind, const Tensor& a, const Tensor& b);

Shape broadcast_shape(const Shape& a, const Shape& b);

inline Tensor neg(const Tensor& a) { return elementwise(UnaryKind::kNeg, a); }
inline Tensor exp(const Tensor& a) { return elementwise(UnaryKind::kExp, a); }
inline Tensor log(const Tensor& a) { return elementwise(UnaryKind::kLog, a); }
inline Tensor abs(const Tensor& a) { return elementwise(UnaryKind::kAbs, a); }
inline Tensor square(const Tensor& a) { return elementwise(UnaryKind::kSquare, a); }
inline Tensor sqrt(const Tensor& a) { return elementwise(UnaryKind::kSqrt, a); }
inline Tensor sigmoid(const Tensor& a) { return elementwise(UnaryKind::kSigmoid, a); }
inline Tensor relu(const Tensor& a) { return elementwise(UnaryKind::kRelu, a); }
inline Tensor tanh(const Tensor& a) { return elementwise(UnaryKind::kTanh, a); }
inline Tensor silu(const Tensor& a) { return elementwise(UnaryKind::kSilu, a); }
// Exact form x * Phi(x).
inline Tensor gelu(const Tensor& a) { return elementwise(UnaryKind::kGelu, a); }

inline Tensor add(const Tensor& a, const Tensor& b) { return elementwise(BinaryKind::kAdd, a, b); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(BinaryKind::kSub, a, b); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(BinaryKind::kMul, a, b); }
inline Tensor div(const Tensor& a, const Tensor& b) { return elementwise(BinaryKind::kDiv, a, b); }

// a * c and a + c for a plain scalar c.
Tensor scale(const Tensor& a, double c);
Tensor shift(const Tensor& a, double c);
// Gradient is zero where the input was clamped.
Tensor clamp(const Tensor& a, double lo, double hi);
// x * ln(x), with 0 * ln(0) = 0. The derivative ln(x) + 1 is floored at
// ln(1e-300) + 1 so zero entries do not produce infinities.
Tensor xlogx(const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }
inline Tensor operator*(const Tensor& a, double c) { return scale(a, c); }
inline Tensor operator*(double c, const Tensor& a) { return scale(a, c); }
inline Tensor operator+(const Tensor& a, double c) { return shift(a, c); }
inline Tensor operator-(const Tensor& a, double c) { return shift(a, -c); }

// [m x k] . [k x n]
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// Reduction along `axis`, keeping the reduced dimension with size 1.
Tensor sum(const Tensor& a, std::size_t axis);
Tensor mean(const Tensor& a, std::size_t axis);

// softmax(logits / tau) along `axis`, max-subtracted. Throws if tau <= 0.
Tensor softmax_temp(const Tensor& logits, std::size_t axis, double tau);

// Forward value is `hard` (bit-identical); the backward pass routes the
// incoming gradient to `soft` unchanged and gives `hard` nothing.
Tensor straight_through(const Tensor& hard, const Tensor& soft);
// Same values, cut from the tape.
Tensor detach(const Tensor& a);

// All entries sorted in descending order (stable); gradient is routed back to
// the source position of each entry.
Tensor sort_desc(const Tensor& a);

// Column j of a 2-D tensor as [rows x 1].
Tensor column(const Tensor& a, std::size_t j);
// Horizontal concatenation of 2-D tensors with equal row counts.
Tensor concat_cols(std::span<const Tensor> parts);

// out[i][j] = ||a_i - b_j||^2 for a: [n x d], b: [m x d].
Tensor pairwise_sq_dist(const Tensor& a, const Tensor& b);

}  // namespace lanca::ad
