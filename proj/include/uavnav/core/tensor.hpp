#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "uavnav/core/error.hpp"

namespace uavnav::ad {

using Shape = std::vector<int>;

inline std::int64_t numel(const Shape& s) {
    std::int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << ']';
    return os.str();
}

inline void check_same_shape(const char* op, const Shape& a, const Shape& b) {
    if (a != b)
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                             shape_str(b));
}

// Thread-local switch: when disabled, ops compute values only and record no
// graph (rollouts, evaluation).
class GradMode {
  public:
    static bool enabled() { return flag(); }
    static void set(bool v) { flag() = v; }

  private:
    static bool& flag() {
        thread_local bool f = true;
        return f;
    }
};

struct NoGradGuard {
    NoGradGuard() : prev_(GradMode::enabled()) { GradMode::set(false); }
    ~NoGradGuard() { GradMode::set(prev_); }
    bool prev_;
};

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // allocated iff requires_grad, lazily for interior nodes
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void()> backprop;  // pushes this->grad into parents' grads

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

// Value-semantics handle onto a graph node. Copies share the node.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

    static Tensor from(Shape shape, std::vector<double> data) {
        if (numel(shape) != static_cast<std::int64_t>(data.size()))
            throw DimensionError("tensor: shape " + shape_str(shape) + " does not hold " +
                                 std::to_string(data.size()) + " values");
        auto n = std::make_shared<Node>();
        n->shape = std::move(shape);
        n->value = std::move(data);
        return Tensor(std::move(n));
    }

    static Tensor zeros(Shape shape) {
        auto count = static_cast<std::size_t>(numel(shape));
        return from(std::move(shape), std::vector<double>(count, 0.0));
    }

    static Tensor full(Shape shape, double v) {
        auto count = static_cast<std::size_t>(numel(shape));
        return from(std::move(shape), std::vector<double>(count, v));
    }

    static Tensor scalar(double v) { return from({1}, {v}); }

    // Trainable leaf.
    static Tensor param(Shape shape, std::vector<double> data) {
        Tensor t = from(std::move(shape), std::move(data));
        t.node_->requires_grad = true;
        t.node_->ensure_grad();
        return t;
    }

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::int64_t size() const { return static_cast<std::int64_t>(node_->value.size()); }
    std::vector<double>& values() { return node_->value; }
    const std::vector<double>& values() const { return node_->value; }
    bool requires_grad() const { return node_->requires_grad; }

    std::vector<double>& grad() {
        if (!node_->requires_grad) throw ContractError("grad: tensor does not require grad");
        node_->ensure_grad();
        return node_->grad;
    }
    const std::vector<double>& grad() const {
        if (!node_->requires_grad) throw ContractError("grad: tensor does not require grad");
        node_->ensure_grad();
        return node_->grad;
    }

    void zero_grad() {
        if (node_->requires_grad) {
            node_->ensure_grad();
            std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
        }
    }

    double item() const {
        if (size() != 1) throw ContractError("item: tensor has " + std::to_string(size()) + " values");
        return node_->value[0];
    }

    // Same values, cut from the graph.
    Tensor detach() const { return from(node_->shape, node_->value); }

    // Reverse-mode sweep from a scalar. Grads accumulate; call zero_grad on
    // parameters between steps.
    void backward() const {
        if (size() != 1) throw ContractError("backward: loss must be scalar, got " + shape_str(shape()));
        if (!node_->requires_grad) return;

        // Iterative post-order topological sort over grad-requiring nodes.
        std::vector<Node*> order;
        std::unordered_set<Node*> visited;
        std::vector<std::pair<Node*, std::size_t>> stack;
        stack.emplace_back(node_.get(), 0);
        visited.insert(node_.get());
        while (!stack.empty()) {
            auto& [nd, idx] = stack.back();
            if (idx < nd->parents.size()) {
                Node* p = nd->parents[idx++].get();
                if (p->requires_grad && !visited.count(p)) {
                    visited.insert(p);
                    stack.emplace_back(p, 0);
                }
            } else {
                order.push_back(nd);
                stack.pop_back();
            }
        }
        // Interior buffers are scratch for this sweep; leaves keep
        // accumulating so that repeated calls add dLoss/dTensor each time.
        for (Node* nd : order)
            if (nd->backprop) {
                nd->ensure_grad();
                std::fill(nd->grad.begin(), nd->grad.end(), 0.0);
            }
        node_->ensure_grad();
        node_->grad[0] += 1.0;
        for (auto it = order.rbegin(); it != order.rend(); ++it)
            if ((*it)->backprop) (*it)->backprop();
    }

    std::shared_ptr<Node> node() const { return node_; }
    Node* raw() const { return node_.get(); }

  private:
    std::shared_ptr<Node> node_;
};

namespace detail {

inline std::shared_ptr<Node> alloc(Shape shape) {
    auto n = std::make_shared<Node>();
    n->value.resize(static_cast<std::size_t>(numel(shape)));
    n->shape = std::move(shape);
    return n;
}

inline bool track(const std::initializer_list<Tensor>& ins) {
    if (!GradMode::enabled()) return false;
    for (const auto& t : ins)
        if (t.requires_grad()) return true;
    return false;
}

// Wires parents + backprop closure when gradients are being recorded.
inline Tensor finish(std::shared_ptr<Node> out, std::initializer_list<Tensor> ins,
                     std::function<void()> backprop) {
    if (track(ins)) {
        out->requires_grad = true;
        for (const auto& t : ins) out->parents.push_back(t.node());
        out->backprop = std::move(backprop);
    }
    return Tensor(std::move(out));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise arithmetic
// ---------------------------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b) {
    // Exact shapes, or b broadcast: [1] onto anything, [n] row-wise onto [m,n].
    const bool scalar_b = b.size() == 1 && a.size() != 1;
    const bool row_b = !scalar_b && a.shape().size() == 2 && b.shape().size() == 1 &&
                       b.shape()[0] == a.shape()[1];
    if (!scalar_b && !row_b) check_same_shape("add", a.shape(), b.shape());

    auto out = detail::alloc(a.shape());
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& ov = out->value;
    if (scalar_b) {
        for (std::size_t i = 0; i < av.size(); ++i) ov[i] = av[i] + bv[0];
    } else if (row_b) {
        const std::size_t n = bv.size();
        for (std::size_t i = 0; i < av.size(); ++i) ov[i] = av[i] + bv[i % n];
    } else {
        for (std::size_t i = 0; i < av.size(); ++i) ov[i] = av[i] + bv[i];
    }
    Node* o = out.get();
    Node* pa = a.raw();
    Node* pb = b.raw();
    return detail::finish(std::move(out), {a, b}, [o, pa, pb, scalar_b, row_b]() {
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (std::size_t i = 0; i < o->grad.size(); ++i) pa->grad[i] += o->grad[i];
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            if (scalar_b) {
                for (double g : o->grad) pb->grad[0] += g;
            } else if (row_b) {
                const std::size_t n = pb->grad.size();
                for (std::size_t i = 0; i < o->grad.size(); ++i) pb->grad[i % n] += o->grad[i];
            } else {
                for (std::size_t i = 0; i < o->grad.size(); ++i) pb->grad[i] += o->grad[i];
            }
        }
    });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    const bool scalar_b = b.size() == 1 && a.size() != 1;
    if (!scalar_b) check_same_shape("sub", a.shape(), b.shape());
    auto out = detail::alloc(a.shape());
    const auto& av = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i) out->value[i] = av[i] - (scalar_b ? bv[0] : bv[i]);
    Node* o = out.get();
    Node* pa = a.raw();
    Node* pb = b.raw();
    return detail::finish(std::move(out), {a, b}, [o, pa, pb, scalar_b]() {
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (std::size_t i = 0; i < o->grad.size(); ++i) pa->grad[i] += o->grad[i];
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            if (scalar_b)
                for (double g : o->grad) pb->grad[0] -= g;
            else
                for (std::size_t i = 0; i < o->grad.size(); ++i) pb->grad[i] -= o->grad[i];
        }
    });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    const bool scalar_b = b.size() == 1 && a.size() != 1;
    const bool scalar_a = a.size() == 1 && b.size() != 1;
    if (!scalar_a && !scalar_b) check_same_shape("mul", a.shape(), b.shape());
    auto out = detail::alloc(scalar_a ? b.shape() : a.shape());
    const auto& av = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < out->value.size(); ++i)
        out->value[i] = (scalar_a ? av[0] : av[i]) * (scalar_b ? bv[0] : bv[i]);
    Node* o = out.get();
    Node* pa = a.raw();
    Node* pb = b.raw();
    return detail::finish(std::move(out), {a, b}, [o, pa, pb, scalar_a, scalar_b]() {
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (std::size_t i = 0; i < o->grad.size(); ++i) {
                double g = o->grad[i] * (scalar_b ? pb->value[0] : pb->value[i]);
                pa->grad[scalar_a ? 0 : i] += g;
            }
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            for (std::size_t i = 0; i < o->grad.size(); ++i) {
                double g = o->grad[i] * (scalar_a ? pa->value[0] : pa->value[i]);
                pb->grad[scalar_b ? 0 : i] += g;
            }
        }
    });
}

inline Tensor scale(const Tensor& a, double c) {
    auto out = detail::alloc(a.shape());
    const auto& av = a.values();
    for (std::size_t i = 0; i < av.size(); ++i) out->value[i] = av[i] * c;
    Node* o = out.get();
    Node* pa = a.raw();
    return detail::finish(std::move(out), {a}, [o, pa, c]() {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (std::size_t i = 0; i < o->grad.size(); ++i) pa->grad[i] += c * o->grad[i];
    });
}

inline Tensor add_scalar(const Tensor& a, double c) {
    auto out = detail::alloc(a.shape());
    const auto& av = a.values();
    for (std::size_t i = 0; i < av.size(); ++i) out->value[i] = av[i] + c;
    Node* o = out.get();
    Node* pa = a.raw();
    return detail::finish(std::move(out), {a}, [o, pa]() {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (std::size_t i = 0; i < o->grad.size(); ++i) pa->grad[i] += o->grad[i];
    });
}

inline Tensor neg(const Tensor& a) { return scale(a, -1.0); }

inline Tensor minimum(const Tensor& a, const Tensor& b) {
    check_same_shape("minimum", a.shape(), b.shape());
    auto out = detail::alloc(a.shape());
    const auto& av = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i) out->value[i] = std::min(av[i], bv[i]);
    Node* o = out.get();
    Node* pa = a.raw();
    Node* pb = b.raw();
    // Ties route to the first operand.
    return detail::finish(std::move(out), {a, b}, [o, pa, pb]() {
        for (std::size_t i = 0; i < o->grad.size(); ++i) {
            bool first = pa->value[i] <= pb->value[i];
            if (first && pa->requires_grad) {
                pa->ensure_grad();
                pa->grad[i] += o->grad[i];
            } else if (!first && pb->requires_grad) {
                pb->ensure_grad();
                pb->grad[i] += o->grad[i];
            }
        }
    });
}

// ---------------------------------------------------------------------------
// nonlinearities
// ---------------------------------------------------------------------------

namespace detail {

template <class Fwd, class Bwd>
Tensor unary(const Tensor& a, Fwd fwd, Bwd bwd_from_in_out) {
    auto out = alloc(a.shape());
    const auto& av = a.values();
    for (std::size_t i = 0; i < av.size(); ++i) out->value[i] = fwd(av[i]);
    Node* o = out.get();
    Node* pa = a.raw();
    return finish(std::move(out), {a}, [o, pa, bwd_from_in_out]() {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (std::size_t i = 0; i < o->grad.size(); ++i)
            pa->grad[i] += o->grad[i] * bwd_from_in_out(pa->value[i], o->value[i]);
    });
}

}  // namespace detail

inline Tensor relu(const Tensor& a) {
    return detail::unary(
        a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Tensor tanh(const Tensor& a) {
    return detail::unary(
        a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

inline Tensor exp(const Tensor& a) {
    return detail::unary(
        a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

inline Tensor log(const Tensor& a) {
    return detail::unary(
        a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

inline Tensor softplus(const Tensor& a) {
    return detail::unary(
        a,
        [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); },
        [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

inline Tensor sigmoid(const Tensor& a) {
    return detail::unary(
        a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
        [](double, double y) { return y * (1.0 - y); });
}

inline Tensor square(const Tensor& a) {
    return detail::unary(
        a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

inline Tensor clamp(const Tensor& a, double lo, double hi) {
    return detail::unary(
        a, [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
        [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

inline Tensor sum(const Tensor& a) {
    auto out = detail::alloc({1});
    double s = 0.0;
    for (double v : a.values()) s += v;
    out->value[0] = s;
    Node* o = out.get();
    Node* pa = a.raw();
    return detail::finish(std::move(out), {a}, [o, pa]() {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (auto& g : pa->grad) g += o->grad[0];
    });
}

inline Tensor mean(const Tensor& a) {
    const double inv = 1.0 / static_cast<double>(a.size());
    auto out = detail::alloc({1});
    double s = 0.0;
    for (double v : a.values()) s += v;
    out->value[0] = s * inv;
    Node* o = out.get();
    Node* pa = a.raw();
    return detail::finish(std::move(out), {a}, [o, pa, inv]() {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (auto& g : pa->grad) g += o->grad[0] * inv;
    });
}

// Row sums of a [m, n] matrix -> [m].
inline Tensor sum_rows(const Tensor& a) {
    if (a.shape().size() != 2) throw DimensionError("sum_rows: expects 2-d, got " + shape_str(a.shape()));
    const int m = a.shape()[0], n = a.shape()[1];
    auto out = detail::alloc({m});
    const auto& av = a.values();
    for (int i = 0; i < m; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += av[static_cast<std::size_t>(i) * n + j];
        out->value[i] = s;
    }
    Node* o = out.get();
    Node* pa = a.raw();
    return detail::finish(std::move(out), {a}, [o, pa, m, n]() {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) pa->grad[static_cast<std::size_t>(i) * n + j] += o->grad[i];
    });
}

// ---------------------------------------------------------------------------
// shape ops
// ---------------------------------------------------------------------------

inline Tensor reshape(const Tensor& a, Shape shape) {
    if (numel(shape) != a.size())
        throw DimensionError("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape) +
                             " changes element count");
    auto out = detail::alloc(shape);
    out->value = a.values();
    Node* o = out.get();
    Node* pa = a.raw();
    return detail::finish(std::move(out), {a}, [o, pa]() {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (std::size_t i = 0; i < o->grad.size(); ++i) pa->grad[i] += o->grad[i];
    });
}

namespace detail {

// Decompose a shape around `axis` into (outer, axis extent, inner) strides.
inline void axis_split(const Shape& s, int axis, std::int64_t& outer, std::int64_t& extent,
                       std::int64_t& inner) {
    if (axis < 0 || axis >= static_cast<int>(s.size()))
        throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
    outer = 1;
    for (int i = 0; i < axis; ++i) outer *= s[i];
    extent = s[axis];
    inner = 1;
    for (int i = axis + 1; i < static_cast<int>(s.size()); ++i) inner *= s[i];
}

}  // namespace detail

inline Tensor slice(const Tensor& a, int axis, int start, int len) {
    std::int64_t outer, extent, inner;
    detail::axis_split(a.shape(), axis, outer, extent, inner);
    if (start < 0 || len <= 0 || start + len > extent)
        throw DimensionError("slice: [" + std::to_string(start) + ", " +
                             std::to_string(start + len) + ") outside axis of extent " +
                             std::to_string(extent));
    Shape os = a.shape();
    os[axis] = len;
    auto out = detail::alloc(os);
    const auto& av = a.values();
    for (std::int64_t ou = 0; ou < outer; ++ou)
        for (std::int64_t k = 0; k < len; ++k)
            std::copy_n(av.begin() + (ou * extent + start + k) * inner, inner,
                        out->value.begin() + (ou * len + k) * inner);
    Node* o = out.get();
    Node* pa = a.raw();
    return detail::finish(std::move(out), {a}, [o, pa, outer, extent, inner, start, len]() {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (std::int64_t ou = 0; ou < outer; ++ou)
            for (std::int64_t k = 0; k < len; ++k) {
                const double* g = o->grad.data() + (ou * len + k) * inner;
                double* dst = pa->grad.data() + (ou * extent + start + k) * inner;
                for (std::int64_t i = 0; i < inner; ++i) dst[i] += g[i];
            }
    });
}

inline Tensor concat(const std::vector<Tensor>& parts, int axis) {
    if (parts.empty()) throw ContractError("concat: no inputs");
    Shape os = parts[0].shape();
    std::int64_t total = 0;
    for (const auto& p : parts) {
        Shape ps = p.shape();
        if (ps.size() != os.size()) throw DimensionError("concat: rank mismatch");
        for (int i = 0; i < static_cast<int>(ps.size()); ++i)
            if (i != axis && ps[i] != os[i])
                throw DimensionError("concat: shape mismatch " + shape_str(os) + " vs " +
                                     shape_str(ps));
        total += ps[axis];
    }
    os[axis] = static_cast<int>(total);
    auto out = detail::alloc(os);
    std::int64_t outer, extent, inner;
    detail::axis_split(os, axis, outer, extent, inner);
    std::int64_t offset = 0;
    for (const auto& p : parts) {
        const std::int64_t pe = p.shape()[axis];
        const auto& pv = p.values();
        for (std::int64_t ou = 0; ou < outer; ++ou)
            std::copy_n(pv.begin() + ou * pe * inner, pe * inner,
                        out->value.begin() + (ou * extent + offset) * inner);
        offset += pe;
    }

    if (!GradMode::enabled()) return Tensor(std::move(out));
    bool any = false;
    for (const auto& p : parts) any = any || p.requires_grad();
    if (!any) return Tensor(std::move(out));

    out->requires_grad = true;
    std::vector<Node*> raws;
    for (const auto& p : parts) {
        out->parents.push_back(p.node());
        raws.push_back(p.raw());
    }
    Node* o = out.get();
    out->backprop = [o, raws, outer, extent, inner, axis]() {
        std::int64_t offset = 0;
        for (Node* p : raws) {
            const std::int64_t pe = p->shape[axis];
            if (p->requires_grad) {
                p->ensure_grad();
                for (std::int64_t ou = 0; ou < outer; ++ou) {
                    const double* g = o->grad.data() + (ou * extent + offset) * inner;
                    double* dst = p->grad.data() + ou * pe * inner;
                    for (std::int64_t i = 0; i < pe * inner; ++i) dst[i] += g[i];
                }
            }
            offset += pe;
        }
    };
    return Tensor(std::move(out));
}

// ---------------------------------------------------------------------------
// matrix multiply
// ---------------------------------------------------------------------------

namespace detail {

// C[m,n] += A[m,k] * B[k,n] ; ikj ordering keeps the inner loop contiguous.
inline void gemm_acc(const double* A, const double* B, double* C, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* a = A + static_cast<std::size_t>(i) * k;
        double* c = C + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double av = a[p];
            if (av == 0.0) continue;
            const double* b = B + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) c[j] += av * b[j];
        }
    }
}

// C[m,n] += A^T[k,m]^T * B ... i.e. C += A_t' with A stored [k,m].
inline void gemm_at_b(const double* A, const double* B, double* C, int k, int m, int n) {
    for (int p = 0; p < k; ++p) {
        const double* a = A + static_cast<std::size_t>(p) * m;
        const double* b = B + static_cast<std::size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            const double av = a[i];
            if (av == 0.0) continue;
            double* c = C + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) c[j] += av * b[j];
        }
    }
}

// C[m,k] += A[m,n] * B^T with B stored [k,n].
inline void gemm_a_bt(const double* A, const double* B, double* C, int m, int n, int k) {
    for (int i = 0; i < m; ++i) {
        const double* a = A + static_cast<std::size_t>(i) * n;
        double* c = C + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const double* b = B + static_cast<std::size_t>(p) * n;
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += a[j] * b[j];
            c[p] += s;
        }
    }
}

}  // namespace detail

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0])
        throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    const int m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    auto out = detail::alloc({m, n});
    detail::gemm_acc(a.values().data(), b.values().data(), out->value.data(), m, k, n);
    Node* o = out.get();
    Node* pa = a.raw();
    Node* pb = b.raw();
    return detail::finish(std::move(out), {a, b}, [o, pa, pb, m, k, n]() {
        if (pa->requires_grad) {
            pa->ensure_grad();
            detail::gemm_a_bt(o->grad.data(), pb->value.data(), pa->grad.data(), m, n, k);
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            detail::gemm_at_b(pa->value.data(), o->grad.data(), pb->grad.data(), m, k, n);
        }
    });
}

}  // namespace uavnav::ad
