#include "lanca/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace lanca::ad {

namespace {

void accumulate_grad(const NodePtr& parent) {
  if (parent->requires_grad) parent->ensure_grad();
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double unary_value(UnaryKind kind, double x) {
  switch (kind) {
    case UnaryKind::kNeg: return -x;
    case UnaryKind::kExp: return std::exp(x);
    case UnaryKind::kLog: return std::log(x);
    case UnaryKind::kAbs: return std::abs(x);
    case UnaryKind::kSquare: return x * x;
    case UnaryKind::kSqrt: return std::sqrt(x);
    case UnaryKind::kSigmoid: return stable_sigmoid(x);
    case UnaryKind::kRelu: return x > 0.0 ? x : 0.0;
    case UnaryKind::kTanh: return std::tanh(x);
    case UnaryKind::kSilu: return x * stable_sigmoid(x);
    case UnaryKind::kGelu: return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  }
  return 0.0;
}

// dy/dx given input x and output y.
double unary_derivative(UnaryKind kind, double x, double y) {
  switch (kind) {
    case UnaryKind::kNeg: return -1.0;
    case UnaryKind::kExp: return y;
    case UnaryKind::kLog: return 1.0 / x;
    case UnaryKind::kAbs: return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    case UnaryKind::kSquare: return 2.0 * x;
    case UnaryKind::kSqrt: return 0.5 / y;
    case UnaryKind::kSigmoid: return y * (1.0 - y);
    case UnaryKind::kRelu: return x > 0.0 ? 1.0 : 0.0;
    case UnaryKind::kTanh: return 1.0 - y * y;
    case UnaryKind::kSilu: {
      const double s = stable_sigmoid(x);
      return s + x * s * (1.0 - s);
    }
    case UnaryKind::kGelu: {
      const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
      const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
      return cdf + x * pdf;
    }
  }
  return 0.0;
}

const char* unary_name(UnaryKind kind) {
  switch (kind) {
    case UnaryKind::kNeg: return "neg";
    case UnaryKind::kExp: return "exp";
    case UnaryKind::kLog: return "log";
    case UnaryKind::kAbs: return "abs";
    case UnaryKind::kSquare: return "square";
    case UnaryKind::kSqrt: return "sqrt";
    case UnaryKind::kSigmoid: return "sigmoid";
    case UnaryKind::kRelu: return "relu";
    case UnaryKind::kTanh: return "tanh";
    case UnaryKind::kSilu: return "silu";
    case UnaryKind::kGelu: return "gelu";
  }
  return "unary";
}

// Offsets into each operand for every output element under broadcasting.
struct BroadcastPlan {
  Shape out;
  std::vector<std::size_t> a_off;
  std::vector<std::size_t> b_off;
};

std::vector<std::size_t> broadcast_strides(const Shape& in, const Shape& out) {
  const std::size_t rank = out.size();
  std::vector<std::size_t> strides(rank, 0);
  std::size_t stride = 1;
  for (std::size_t k = 0; k < in.size(); ++k) {
    const std::size_t axis_in = in.size() - 1 - k;
    const std::size_t axis_out = rank - 1 - k;
    strides[axis_out] = in[axis_in] == 1 ? 0 : stride;
    stride *= in[axis_in];
  }
  return strides;
}

BroadcastPlan plan_broadcast(const Shape& a, const Shape& b) {
  BroadcastPlan plan;
  plan.out = broadcast_shape(a, b);
  const std::size_t total = shape_size(plan.out);
  const auto sa = broadcast_strides(a, plan.out);
  const auto sb = broadcast_strides(b, plan.out);
  plan.a_off.resize(total);
  plan.b_off.resize(total);
  std::vector<std::size_t> idx(plan.out.size(), 0);
  std::size_t oa = 0, ob = 0;
  for (std::size_t k = 0; k < total; ++k) {
    plan.a_off[k] = oa;
    plan.b_off[k] = ob;
    for (std::size_t axis = plan.out.size(); axis-- > 0;) {
      if (++idx[axis] < plan.out[axis]) {
        oa += sa[axis];
        ob += sb[axis];
        break;
      }
      oa -= sa[axis] * (plan.out[axis] - 1);
      ob -= sb[axis] * (plan.out[axis] - 1);
      idx[axis] = 0;
    }
  }
  return plan;
}

double binary_value(BinaryKind kind, double a, double b) {
  switch (kind) {
    case BinaryKind::kAdd: return a + b;
    case BinaryKind::kSub: return a - b;
    case BinaryKind::kMul: return a * b;
    case BinaryKind::kDiv: return a / b;
  }
  return 0.0;
}

const char* binary_name(BinaryKind kind) {
  switch (kind) {
    case BinaryKind::kAdd: return "add";
    case BinaryKind::kSub: return "sub";
    case BinaryKind::kMul: return "mul";
    case BinaryKind::kDiv: return "div";
  }
  return "binary";
}

// Decomposes a shape around `axis` into (outer, length, inner) extents.
struct AxisSplit {
  std::size_t outer = 1, length = 1, inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis, const char* who) {
  if (axis >= shape.size()) {
    throw std::invalid_argument(std::string(who) + ": axis " + std::to_string(axis) +
                                " out of range for shape " + shape_to_string(shape));
  }
  AxisSplit s;
  for (std::size_t k = 0; k < axis; ++k) s.outer *= shape[k];
  s.length = shape[axis];
  for (std::size_t k = axis + 1; k < shape.size(); ++k) s.inner *= shape[k];
  return s;
}

void require_2d(const Tensor& t, const char* who) {
  if (t.dim() != 2) {
    throw std::invalid_argument(std::string(who) + ": expected a 2-D tensor, got shape " +
                                shape_to_string(t.shape()));
  }
}

}  // namespace

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank, 1);
  for (std::size_t k = 0; k < rank; ++k) {
    const std::size_t da = k < a.size() ? a[a.size() - 1 - k] : 1;
    const std::size_t db = k < b.size() ? b[b.size() - 1 - k] : 1;
    if (da != db && da != 1 && db != 1) {
      throw std::invalid_argument("shape mismatch: cannot broadcast " + shape_to_string(a) +
                                  " with " + shape_to_string(b));
    }
    out[rank - 1 - k] = std::max(da, db);
  }
  return out;
}

Tensor elementwise(UnaryKind kind, const Tensor& a) {
  const auto& in = a.node()->value;
  std::vector<double> out(in.size());
  for (std::size_t k = 0; k < in.size(); ++k) out[k] = unary_value(kind, in[k]);
  auto node = make_result(a.shape(), std::move(out), {a.node()}, unary_name(kind));
  if (node->requires_grad) {
    node->backward = [kind](Node& self) {
      const NodePtr& p = self.parents[0];
      accumulate_grad(p);
      for (std::size_t k = 0; k < self.value.size(); ++k) {
        p->grad[k] += self.grad[k] * unary_derivative(kind, p->value[k], self.value[k]);
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor elementwise(BinaryKind kind, const Tensor& a, const Tensor& b) {
  const auto& va = a.node()->value;
  const auto& vb = b.node()->value;
  if (a.shape() == b.shape()) {
    std::vector<double> out(va.size());
    for (std::size_t k = 0; k < va.size(); ++k) out[k] = binary_value(kind, va[k], vb[k]);
    auto node = make_result(a.shape(), std::move(out), {a.node(), b.node()}, binary_name(kind));
    if (node->requires_grad) {
      node->backward = [kind](Node& self) {
        const NodePtr& pa = self.parents[0];
        const NodePtr& pb = self.parents[1];
        const std::size_t n = self.value.size();
        if (pa->requires_grad) {
          pa->ensure_grad();
          for (std::size_t k = 0; k < n; ++k) {
            const double g = self.grad[k];
            switch (kind) {
              case BinaryKind::kAdd:
              case BinaryKind::kSub: pa->grad[k] += g; break;
              case BinaryKind::kMul: pa->grad[k] += g * pb->value[k]; break;
              case BinaryKind::kDiv: pa->grad[k] += g / pb->value[k]; break;
            }
          }
        }
        if (pb->requires_grad) {
          pb->ensure_grad();
          for (std::size_t k = 0; k < n; ++k) {
            const double g = self.grad[k];
            switch (kind) {
              case BinaryKind::kAdd: pb->grad[k] += g; break;
              case BinaryKind::kSub: pb->grad[k] -= g; break;
              case BinaryKind::kMul: pb->grad[k] += g * pa->value[k]; break;
              case BinaryKind::kDiv:
                pb->grad[k] -= g * pa->value[k] / (pb->value[k] * pb->value[k]);
                break;
            }
          }
        }
      };
    }
    return Tensor(std::move(node));
  }

  auto plan = std::make_shared<BroadcastPlan>(plan_broadcast(a.shape(), b.shape()));
  std::vector<double> out(plan->a_off.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = binary_value(kind, va[plan->a_off[k]], vb[plan->b_off[k]]);
  }
  auto node = make_result(plan->out, std::move(out), {a.node(), b.node()}, binary_name(kind));
  if (node->requires_grad) {
    node->backward = [kind, plan](Node& self) {
      const NodePtr& pa = self.parents[0];
      const NodePtr& pb = self.parents[1];
      accumulate_grad(pa);
      accumulate_grad(pb);
      for (std::size_t k = 0; k < self.value.size(); ++k) {
        const double g = self.grad[k];
        const double x = pa->value[plan->a_off[k]];
        const double y = pb->value[plan->b_off[k]];
        double da = 0.0, db = 0.0;
        switch (kind) {
          case BinaryKind::kAdd: da = g; db = g; break;
          case BinaryKind::kSub: da = g; db = -g; break;
          case BinaryKind::kMul: da = g * y; db = g * x; break;
          case BinaryKind::kDiv: da = g / y; db = -g * x / (y * y); break;
        }
        if (pa->requires_grad) pa->grad[plan->a_off[k]] += da;
        if (pb->requires_grad) pb->grad[plan->b_off[k]] += db;
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor scale(const Tensor& a, double c) {
  const auto& in = a.node()->value;
  std::vector<double> out(in.size());
  for (std::size_t k = 0; k < in.size(); ++k) out[k] = in[k] * c;
  auto node = make_result(a.shape(), std::move(out), {a.node()}, "scale");
  if (node->requires_grad) {
    node->backward = [c](Node& self) {
      const NodePtr& p = self.parents[0];
      p->ensure_grad();
      for (std::size_t k = 0; k < self.value.size(); ++k) p->grad[k] += self.grad[k] * c;
    };
  }
  return Tensor(std::move(node));
}

Tensor shift(const Tensor& a, double c) {
  const auto& in = a.node()->value;
  std::vector<double> out(in.size());
  for (std::size_t k = 0; k < in.size(); ++k) out[k] = in[k] + c;
  auto node = make_result(a.shape(), std::move(out), {a.node()}, "shift");
  if (node->requires_grad) {
    node->backward = [](Node& self) {
      const NodePtr& p = self.parents[0];
      p->ensure_grad();
      for (std::size_t k = 0; k < self.value.size(); ++k) p->grad[k] += self.grad[k];
    };
  }
  return Tensor(std::move(node));
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("clamp: lo > hi");
  const auto& in = a.node()->value;
  std::vector<double> out(in.size());
  for (std::size_t k = 0; k < in.size(); ++k) out[k] = std::clamp(in[k], lo, hi);
  auto node = make_result(a.shape(), std::move(out), {a.node()}, "clamp");
  if (node->requires_grad) {
    node->backward = [lo, hi](Node& self) {
      const NodePtr& p = self.parents[0];
      p->ensure_grad();
      for (std::size_t k = 0; k < self.value.size(); ++k) {
        const double x = p->value[k];
        if (x >= lo && x <= hi) p->grad[k] += self.grad[k];
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor xlogx(const Tensor& a) {
  const auto& in = a.node()->value;
  std::vector<double> out(in.size());
  for (std::size_t k = 0; k < in.size(); ++k) out[k] = in[k] > 0.0 ? in[k] * std::log(in[k]) : 0.0;
  auto node = make_result(a.shape(), std::move(out), {a.node()}, "xlogx");
  if (node->requires_grad) {
    node->backward = [](Node& self) {
      const NodePtr& p = self.parents[0];
      p->ensure_grad();
      for (std::size_t k = 0; k < self.value.size(); ++k) {
        p->grad[k] += self.grad[k] * (std::log(std::max(p->value[k], 1e-300)) + 1.0);
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw std::invalid_argument("matmul: inner dimensions disagree for " +
                                shape_to_string(a.shape()) + " . " + shape_to_string(b.shape()));
  }
  const double* A = a.node()->value.data();
  const double* B = b.node()->value.data();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      const double* brow = B + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += aip * brow[j];
    }
  }
  auto node = make_result({m, n}, std::move(out), {a.node(), b.node()}, "matmul");
  if (node->requires_grad) {
    node->backward = [m, k, n](Node& self) {
      const NodePtr& pa = self.parents[0];
      const NodePtr& pb = self.parents[1];
      const double* G = self.grad.data();
      if (pa->requires_grad) {
        // dA = G . B^T
        pa->ensure_grad();
        const double* B = pb->value.data();
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += G[i * n + j] * B[p * n + j];
            pa->grad[i * k + p] += acc;
          }
        }
      }
      if (pb->requires_grad) {
        // dB = A^T . G
        pb->ensure_grad();
        const double* A = pa->value.data();
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            const double aip = A[i * k + p];
            double* grow = pb->grad.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) grow[j] += aip * G[i * n + j];
          }
        }
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor transpose(const Tensor& a) {
  require_2d(a, "transpose");
  const std::size_t r = a.shape()[0], c = a.shape()[1];
  const auto& in = a.node()->value;
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = in[i * c + j];
  auto node = make_result({c, r}, std::move(out), {a.node()}, "transpose");
  if (node->requires_grad) {
    node->backward = [r, c](Node& self) {
      const NodePtr& p = self.parents[0];
      p->ensure_grad();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) p->grad[i * c + j] += self.grad[j * r + i];
    };
  }
  return Tensor(std::move(node));
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_size(shape) != a.size()) {
    throw std::invalid_argument("reshape: cannot view " + shape_to_string(a.shape()) + " as " +
                                shape_to_string(shape));
  }
  auto node = make_result(std::move(shape), a.node()->value, {a.node()}, "reshape");
  if (node->requires_grad) {
    node->backward = [](Node& self) {
      const NodePtr& p = self.parents[0];
      p->ensure_grad();
      for (std::size_t k = 0; k < self.value.size(); ++k) p->grad[k] += self.grad[k];
    };
  }
  return Tensor(std::move(node));
}

Tensor sum(const Tensor& a) {
  const auto& in = a.node()->value;
  const double total = std::accumulate(in.begin(), in.end(), 0.0);
  auto node = make_result({1}, {total}, {a.node()}, "sum");
  if (node->requires_grad) {
    node->backward = [](Node& self) {
      const NodePtr& p = self.parents[0];
      p->ensure_grad();
      const double g = self.grad[0];
      for (double& x : p->grad) x += g;
    };
  }
  return Tensor(std::move(node));
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw std::invalid_argument("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor sum(const Tensor& a, std::size_t axis) {
  const AxisSplit s = split_axis(a.shape(), axis, "sum");
  Shape out_shape = a.shape();
  out_shape[axis] = 1;
  const auto& in = a.node()->value;
  std::vector<double> out(s.outer * s.inner, 0.0);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t l = 0; l < s.length; ++l)
      for (std::size_t i = 0; i < s.inner; ++i)
        out[o * s.inner + i] += in[(o * s.length + l) * s.inner + i];
  auto node = make_result(std::move(out_shape), std::move(out), {a.node()}, "sum_axis");
  if (node->requires_grad) {
    node->backward = [s](Node& self) {
      const NodePtr& p = self.parents[0];
      p->ensure_grad();
      for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t l = 0; l < s.length; ++l)
          for (std::size_t i = 0; i < s.inner; ++i)
            p->grad[(o * s.length + l) * s.inner + i] += self.grad[o * s.inner + i];
    };
  }
  return Tensor(std::move(node));
}

Tensor mean(const Tensor& a, std::size_t axis) {
  const AxisSplit s = split_axis(a.shape(), axis, "mean");
  return scale(sum(a, axis), 1.0 / static_cast<double>(s.length));
}

Tensor softmax_temp(const Tensor& logits, std::size_t axis, double tau) {
  if (!(tau > 0.0)) {
    throw std::invalid_argument("softmax_temp: temperature must be positive, got " +
                                std::to_string(tau));
  }
  const AxisSplit s = split_axis(logits.shape(), axis, "softmax_temp");
  const auto& in = logits.node()->value;
  std::vector<double> out(in.size());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      auto at = [&](std::size_t l) { return (o * s.length + l) * s.inner + i; };
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t l = 0; l < s.length; ++l) mx = std::max(mx, in[at(l)] / tau);
      double z = 0.0;
      for (std::size_t l = 0; l < s.length; ++l) {
        out[at(l)] = std::exp(in[at(l)] / tau - mx);
        z += out[at(l)];
      }
      for (std::size_t l = 0; l < s.length; ++l) out[at(l)] /= z;
    }
  }
  auto node = make_result(logits.shape(), std::move(out), {logits.node()}, "softmax");
  if (node->requires_grad) {
    node->backward = [s, tau](Node& self) {
      const NodePtr& p = self.parents[0];
      p->ensure_grad();
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t i = 0; i < s.inner; ++i) {
          auto at = [&](std::size_t l) { return (o * s.length + l) * s.inner + i; };
          double dot = 0.0;
          for (std::size_t l = 0; l < s.length; ++l) dot += self.grad[at(l)] * self.value[at(l)];
          for (std::size_t l = 0; l < s.length; ++l) {
            p->grad[at(l)] += self.value[at(l)] * (self.grad[at(l)] - dot) / tau;
          }
        }
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor straight_through(const Tensor& hard, const Tensor& soft) {
  if (hard.shape() != soft.shape()) {
    throw std::invalid_argument("straight_through: shape mismatch " +
                                shape_to_string(hard.shape()) + " vs " +
                                shape_to_string(soft.shape()));
  }
  // Only the soft branch is a parent: the hard branch receives no gradient.
  auto node = make_result(hard.shape(), hard.node()->value, {soft.node()}, "straight_through");
  if (node->requires_grad) {
    node->backward = [](Node& self) {
      const NodePtr& p = self.parents[0];
      p->ensure_grad();
      for (std::size_t k = 0; k < self.value.size(); ++k) p->grad[k] += self.grad[k];
    };
  }
  return Tensor(std::move(node));
}

Tensor detach(const Tensor& a) { return Tensor::constant(a.shape(), a.node()->value); }

Tensor sort_desc(const Tensor& a) {
  const auto& in = a.node()->value;
  std::vector<std::size_t> order(in.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return in[x] > in[y]; });
  std::vector<double> out(in.size());
  for (std::size_t k = 0; k < in.size(); ++k) out[k] = in[order[k]];
  auto node = make_result(a.shape(), std::move(out), {a.node()}, "sort_desc");
  if (node->requires_grad) {
    node->backward = [order = std::move(order)](Node& self) {
      const NodePtr& p = self.parents[0];
      p->ensure_grad();
      for (std::size_t k = 0; k < order.size(); ++k) p->grad[order[k]] += self.grad[k];
    };
  }
  return Tensor(std::move(node));
}

Tensor column(const Tensor& a, std::size_t j) {
  require_2d(a, "column");
  const std::size_t r = a.shape()[0], c = a.shape()[1];
  if (j >= c) {
    throw std::invalid_argument("column: index " + std::to_string(j) + " out of range for " +
                                shape_to_string(a.shape()));
  }
  const auto& in = a.node()->value;
  std::vector<double> out(r);
  for (std::size_t i = 0; i < r; ++i) out[i] = in[i * c + j];
  auto node = make_result({r, 1}, std::move(out), {a.node()}, "column");
  if (node->requires_grad) {
    node->backward = [c, j](Node& self) {
      const NodePtr& p = self.parents[0];
      p->ensure_grad();
      for (std::size_t i = 0; i < self.value.size(); ++i) p->grad[i * c + j] += self.grad[i];
    };
  }
  return Tensor(std::move(node));
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const std::size_t r = parts[0].rows();
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  std::vector<NodePtr> parents;
  for (const auto& t : parts) {
    require_2d(t, "concat_cols");
    if (t.rows() != r) {
      throw std::invalid_argument("concat_cols: row mismatch " + shape_to_string(parts[0].shape()) +
                                  " vs " + shape_to_string(t.shape()));
    }
    offsets.push_back(total);
    total += t.cols();
    parents.push_back(t.node());
  }
  std::vector<double> out(r * total);
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto& v = parts[p].node()->value;
    const std::size_t c = parts[p].cols();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) out[i * total + offsets[p] + j] = v[i * c + j];
  }
  auto node = make_result({r, total}, std::move(out), std::move(parents), "concat_cols");
  if (node->requires_grad) {
    node->backward = [offsets, r, total](Node& self) {
      for (std::size_t p = 0; p < self.parents.size(); ++p) {
        const NodePtr& parent = self.parents[p];
        if (!parent->requires_grad) continue;
        parent->ensure_grad();
        const std::size_t c = parent->shape[1];
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j)
            parent->grad[i * c + j] += self.grad[i * total + offsets[p] + j];
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor pairwise_sq_dist(const Tensor& a, const Tensor& b) {
  require_2d(a, "pairwise_sq_dist");
  require_2d(b, "pairwise_sq_dist");
  const std::size_t n = a.shape()[0], m = b.shape()[0], d = a.shape()[1];
  if (b.shape()[1] != d) {
    throw std::invalid_argument("pairwise_sq_dist: feature dimension mismatch " +
                                shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
  }
  const double* A = a.node()->value.data();
  const double* B = b.node()->value.data();
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t f = 0; f < d; ++f) {
        const double diff = A[i * d + f] - B[j * d + f];
        acc += diff * diff;
      }
      out[i * m + j] = acc;
    }
  auto node = make_result({n, m}, std::move(out), {a.node(), b.node()}, "pairwise_sq_dist");
  if (node->requires_grad) {
    node->backward = [n, m, d](Node& self) {
      const NodePtr& pa = self.parents[0];
      const NodePtr& pb = self.parents[1];
      accumulate_grad(pa);
      accumulate_grad(pb);
      const double* A = pa->value.data();
      const double* B = pb->value.data();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
          const double g = 2.0 * self.grad[i * m + j];
          if (g == 0.0) continue;
          for (std::size_t f = 0; f < d; ++f) {
            const double diff = g * (A[i * d + f] - B[j * d + f]);
            if (pa->requires_grad) pa->grad[i * d + f] += diff;
            if (pb->requires_grad) pb->grad[j * d + f] -= diff;
          }
        }
    };
  }
  return Tensor(std::move(node));
}

}  // namespace lanca::ad
