#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <unordered_set>
#include <vector>

#include "vlm/common.hpp"

namespace vlm::ad {

// ----------------------------- raw matmul kernels -----------------------------
// Shared by forward and backward passes; backward never builds graph nodes.

// c[m,n] (+)= a[m,k] * b[k,n]
template <class T>
void mm_nn(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        T* crow = c + static_cast<size_t>(i) * n;
        if (!accumulate) std::fill(crow, crow + n, T(0));
        for (int p = 0; p < k; ++p) {
            T av = a[static_cast<size_t>(i) * k + p];
            const T* brow = b + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// c[m,n] (+)= a[m,k] * b[n,k]^T
template <class T>
void mm_nt(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        const T* arow = a + static_cast<size_t>(i) * k;
        for (int j = 0; j < n; ++j) {
            const T* brow = b + static_cast<size_t>(j) * k;
            T acc = 0;
            for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
            T* cp = c + static_cast<size_t>(i) * n + j;
            *cp = accumulate ? *cp + acc : acc;
        }
    }
}

// c[m,n] (+)= a[k,m]^T * b[k,n]
template <class T>
void mm_tn(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
    if (!accumulate) std::fill(c, c + static_cast<size_t>(m) * n, T(0));
    for (int p = 0; p < k; ++p) {
        const T* arow = a + static_cast<size_t>(p) * m;
        const T* brow = b + static_cast<size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            T av = arow[i];
            T* crow = c + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// ----------------------------- tape node -----------------------------

template <class T>
struct TensorNode {
    std::vector<int> shape;
    std::vector<T> value;
    std::vector<T> grad; // empty until backward touches this node
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(const std::vector<T>&)> backward_fn; // arg = this node's grad

    int64_t numel() const {
        int64_t n = 1;
        for (int d : shape) n *= d;
        return n;
    }
    void ensure_grad() {
        if (grad.empty()) grad.assign(value.size(), T(0));
    }
};

// Thread-local switch: under NoGradGuard no graph edges are recorded, so
// inference builds plain value nodes.
inline bool& grad_mode_flag() {
    thread_local bool enabled = true;
    return enabled;
}

struct NoGradGuard {
    bool prev;
    NoGradGuard() : prev(grad_mode_flag()) { grad_mode_flag() = false; }
    ~NoGradGuard() { grad_mode_flag() = prev; }
};

// ----------------------------- tensor handle -----------------------------

template <class T>
class Tensor {
public:
    Tensor() = default;

    Tensor(std::vector<int> shape, std::vector<T> data, bool requires_grad = false) {
        node_ = std::make_shared<TensorNode<T>>();
        node_->shape = std::move(shape);
        node_->value = std::move(data);
        node_->requires_grad = requires_grad;
        if (node_->numel() != static_cast<int64_t>(node_->value.size()))
            throw ShapeError("tensor data length " + std::to_string(node_->value.size()) +
                             " does not match shape " + shape_str(node_->shape));
    }

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false) {
        int64_t n = 1;
        for (int d : shape) n *= d;
        return Tensor(std::move(shape), std::vector<T>(n, T(0)), requires_grad);
    }

    static Tensor full(std::vector<int> shape, T v, bool requires_grad = false) {
        int64_t n = 1;
        for (int d : shape) n *= d;
        return Tensor(std::move(shape), std::vector<T>(n, v), requires_grad);
    }

    static Tensor scalar(T v) { return Tensor({1}, {v}); }

    bool defined() const { return node_ != nullptr; }
    const std::vector<int>& shape() const { return node_->shape; }
    int64_t numel() const { return node_->numel(); }
    int dim(int i) const { return node_->shape[i]; }
    int ndim() const { return static_cast<int>(node_->shape.size()); }
    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool b) { node_->requires_grad = b; }

    const std::vector<T>& value() const { return node_->value; }
    std::vector<T>& value_mut() { return node_->value; }
    const std::vector<T>& grad() const { return node_->grad; }
    std::vector<T>& grad_mut() { return node_->grad; }
    bool has_grad() const { return !node_->grad.empty(); }

    T item() const {
        if (numel() != 1) throw ShapeError("item() on non-scalar tensor " + shape_str(shape()));
        return node_->value[0];
    }

    std::shared_ptr<TensorNode<T>> node() const { return node_; }

    // Fresh leaf with the same values; no graph history shared.
    Tensor deep_copy() const {
        Tensor out(node_->shape, node_->value, node_->requires_grad);
        return out;
    }

    // Reverse pass from a scalar output. Grads of every node reachable
    // through the graph are (re)computed from zero.
    void backward() {
        if (numel() != 1) throw ShapeError("backward() requires a scalar output, got " + shape_str(shape()));
        // iterative post-order DFS
        std::vector<TensorNode<T>*> topo;
        std::unordered_set<TensorNode<T>*> visited;
        struct Frame {
            TensorNode<T>* node;
            size_t next_child;
        };
        std::vector<Frame> stack;
        stack.push_back({node_.get(), 0});
        visited.insert(node_.get());
        while (!stack.empty()) {
            Frame& f = stack.back();
            if (f.next_child < f.node->parents.size()) {
                TensorNode<T>* child = f.node->parents[f.next_child++].get();
                if (visited.insert(child).second) stack.push_back({child, 0});
            } else {
                topo.push_back(f.node);
                stack.pop_back();
            }
        }
        for (TensorNode<T>* n : topo) {
            n->grad.assign(n->value.size(), T(0));
        }
        node_->grad[0] = T(1);
        for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
            TensorNode<T>* n = *it;
            if (n->backward_fn) n->backward_fn(n->grad);
        }
    }

private:
    std::shared_ptr<TensorNode<T>> node_;
};

// ----------------------------- op plumbing -----------------------------

template <class T>
Tensor<T> make_op(std::vector<int> shape, std::vector<T> value,
                  std::vector<Tensor<T>> parents,
                  std::function<void(const std::vector<T>&)> backward_builder_arg = nullptr) {
    Tensor<T> out(std::move(shape), std::move(value));
    bool rg = false;
    for (const auto& p : parents) rg = rg || p.requires_grad();
    rg = rg && grad_mode_flag();
    if (rg) {
        out.set_requires_grad(true);
        auto node = out.node();
        for (const auto& p : parents) node->parents.push_back(p.node());
        node->backward_fn = std::move(backward_builder_arg);
    }
    return out;
}

template <class T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
}

// ----------------------------- elementwise ops -----------------------------

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    check_same_shape(a, b, "add");
    std::vector<T> v(a.value().size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] + b.value()[i];
    auto an = a.node(), bn = b.node();
    return make_op<T>(a.shape(), std::move(v), {a, b}, [an, bn](const std::vector<T>& g) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) an->grad[i] += g[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) bn->grad[i] += g[i];
        }
    });
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    check_same_shape(a, b, "mul");
    std::vector<T> v(a.value().size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = a.value()[i] * b.value()[i];
    auto an = a.node(), bn = b.node();
    return make_op<T>(a.shape(), std::move(v), {a, b}, [an, bn](const std::vector<T>& g) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) an->grad[i] += g[i] * bn->value[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) bn->grad[i] += g[i] * an->value[i];
        }
    });
}

template <class T>
Tensor<T> neg(const Tensor<T>& a) {
    std::vector<T> v(a.value().size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = -a.value()[i];
    auto an = a.node();
    return make_op<T>(a.shape(), std::move(v), {a}, [an](const std::vector<T>& g) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) an->grad[i] -= g[i];
    });
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    return add(a, neg(b));
}

template <class T>
Tensor<T> scale(const Tensor<T>& a, T c) {
    std::vector<T> v(a.value().size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = c * a.value()[i];
    auto an = a.node();
    return make_op<T>(a.shape(), std::move(v), {a}, [an, c](const std::vector<T>& g) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) an->grad[i] += c * g[i];
    });
}

// (n,d) + (d) broadcast over rows
template <class T>
Tensor<T> add_rowvec(const Tensor<T>& a, const Tensor<T>& v) {
    if (a.ndim() != 2 || v.ndim() != 1 || a.dim(1) != v.dim(0))
        throw ShapeError("add_rowvec: shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(v.shape()));
    int n = a.dim(0), d = a.dim(1);
    std::vector<T> out(a.value().size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j)
            out[static_cast<size_t>(i) * d + j] = a.value()[static_cast<size_t>(i) * d + j] + v.value()[j];
    auto an = a.node(), vn = v.node();
    return make_op<T>(a.shape(), std::move(out), {a, v}, [an, vn, n, d](const std::vector<T>& g) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) an->grad[i] += g[i];
        }
        if (vn->requires_grad) {
            vn->ensure_grad();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < d; ++j) vn->grad[j] += g[static_cast<size_t>(i) * d + j];
        }
    });
}

// ----------------------------- matmul family -----------------------------

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0))
        throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
    int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    std::vector<T> v(static_cast<size_t>(m) * n);
    mm_nn(a.value().data(), b.value().data(), v.data(), m, k, n, false);
    auto an = a.node(), bn = b.node();
    return make_op<T>({m, n}, std::move(v), {a, b}, [an, bn, m, k, n](const std::vector<T>& g) {
        if (an->requires_grad) {
            an->ensure_grad();
            mm_nt(g.data(), bn->value.data(), an->grad.data(), m, n, k, true); // g[m,n] * b[k,n]^T
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            mm_tn(an->value.data(), g.data(), bn->grad.data(), k, m, n, true); // a^T[k,m] * g[m,n]
        }
    });
}

// a[m,k] * b[n,k]^T, the common "x W^T" and "Q K^T" pattern
template <class T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(1))
        throw ShapeError("matmul_nt: incompatible shapes " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()) + "^T");
    int m = a.dim(0), k = a.dim(1), n = b.dim(0);
    std::vector<T> v(static_cast<size_t>(m) * n);
    mm_nt(a.value().data(), b.value().data(), v.data(), m, k, n, false);
    auto an = a.node(), bn = b.node();
    return make_op<T>({m, n}, std::move(v), {a, b}, [an, bn, m, k, n](const std::vector<T>& g) {
        if (an->requires_grad) {
            an->ensure_grad();
            mm_nn(g.data(), bn->value.data(), an->grad.data(), m, n, k, true); // g[m,n] * b[n,k]
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            mm_tn(g.data(), an->value.data(), bn->grad.data(), n, m, k, true); // g^T[n,m] * a[m,k]
        }
    });
}

template <class T>
Tensor<T> transpose(const Tensor<T>& a) {
    if (a.ndim() != 2) throw ShapeError("transpose: expected 2-d tensor, got " + shape_str(a.shape()));
    int m = a.dim(0), n = a.dim(1);
    std::vector<T> v(a.value().size());
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) v[static_cast<size_t>(j) * m + i] = a.value()[static_cast<size_t>(i) * n + j];
    auto an = a.node();
    return make_op<T>({n, m}, std::move(v), {a}, [an, m, n](const std::vector<T>& g) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j)
                an->grad[static_cast<size_t>(i) * n + j] += g[static_cast<size_t>(j) * m + i];
    });
}

template <class T>
Tensor<T> reshape(const Tensor<T>& a, std::vector<int> shape) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    if (n != a.numel())
        throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
    auto an = a.node();
    return make_op<T>(std::move(shape), a.value(), {a}, [an](const std::vector<T>& g) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) an->grad[i] += g[i];
    });
}

// ----------------------------- concat / slice -----------------------------

template <class T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, int axis) {
    if (parts.empty()) throw ShapeError("concat: empty input list");
    int nd = parts[0].ndim();
    if (nd != 2 || (axis != 0 && axis != 1))
        throw ShapeError("concat: supports 2-d tensors on axis 0 or 1, got axis " + std::to_string(axis));
    int other = axis == 0 ? 1 : 0;
    int fixed = parts[0].dim(other);
    int total = 0;
    for (const auto& p : parts) {
        if (p.ndim() != 2 || p.dim(other) != fixed)
            throw ShapeError("concat: shape mismatch " + shape_str(parts[0].shape()) + " vs " +
                             shape_str(p.shape()));
        total += p.dim(axis);
    }
    std::vector<int> out_shape = axis == 0 ? std::vector<int>{total, fixed} : std::vector<int>{fixed, total};
    std::vector<T> v(static_cast<size_t>(total) * fixed);
    if (axis == 0) {
        size_t off = 0;
        for (const auto& p : parts) {
            std::copy(p.value().begin(), p.value().end(), v.begin() + off);
            off += p.value().size();
        }
    } else {
        int rows = fixed;
        int col_off = 0;
        for (const auto& p : parts) {
            int pc = p.dim(1);
            for (int i = 0; i < rows; ++i)
                std::copy(p.value().begin() + static_cast<size_t>(i) * pc,
                          p.value().begin() + static_cast<size_t>(i + 1) * pc,
                          v.begin() + static_cast<size_t>(i) * total + col_off);
            col_off += pc;
        }
    }
    std::vector<std::shared_ptr<TensorNode<T>>> pnodes;
    std::vector<int> sizes;
    for (const auto& p : parts) {
        pnodes.push_back(p.node());
        sizes.push_back(p.dim(axis));
    }
    return make_op<T>(out_shape, std::move(v), parts,
                      [pnodes, sizes, axis, fixed, total](const std::vector<T>& g) {
                          if (axis == 0) {
                              size_t off = 0;
                              for (size_t pi = 0; pi < pnodes.size(); ++pi) {
                                  auto& n = pnodes[pi];
                                  size_t cnt = static_cast<size_t>(sizes[pi]) * fixed;
                                  if (n->requires_grad) {
                                      n->ensure_grad();
                                      for (size_t i = 0; i < cnt; ++i) n->grad[i] += g[off + i];
                                  }
                                  off += cnt;
                              }
                          } else {
                              int col_off = 0;
                              for (size_t pi = 0; pi < pnodes.size(); ++pi) {
                                  auto& n = pnodes[pi];
                                  int pc = sizes[pi];
                                  if (n->requires_grad) {
                                      n->ensure_grad();
                                      for (int i = 0; i < fixed; ++i)
                                          for (int j = 0; j < pc; ++j)
                                              n->grad[static_cast<size_t>(i) * pc + j] +=
                                                  g[static_cast<size_t>(i) * total + col_off + j];
                                  }
                                  col_off += pc;
                              }
                          }
                      });
}

template <class T>
Tensor<T> slice_rows(const Tensor<T>& a, int r0, int r1) {
    if (a.ndim() != 2 || r0 < 0 || r1 > a.dim(0) || r0 >= r1)
        throw ShapeError("slice_rows: rows [" + std::to_string(r0) + ", " + std::to_string(r1) +
                         ") out of range for " + shape_str(a.shape()));
    int d = a.dim(1);
    std::vector<T> v(a.value().begin() + static_cast<size_t>(r0) * d,
                     a.value().begin() + static_cast<size_t>(r1) * d);
    auto an = a.node();
    return make_op<T>({r1 - r0, d}, std::move(v), {a}, [an, r0, d](const std::vector<T>& g) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        size_t base = static_cast<size_t>(r0) * d;
        for (size_t i = 0; i < g.size(); ++i) an->grad[base + i] += g[i];
    });
}

template <class T>
Tensor<T> slice_cols(const Tensor<T>& a, int c0, int c1) {
    if (a.ndim() != 2 || c0 < 0 || c1 > a.dim(1) || c0 >= c1)
        throw ShapeError("slice_cols: cols [" + std::to_string(c0) + ", " + std::to_string(c1) +
                         ") out of range for " + shape_str(a.shape()));
    int n = a.dim(0), d = a.dim(1), w = c1 - c0;
    std::vector<T> v(static_cast<size_t>(n) * w);
    for (int i = 0; i < n; ++i)
        std::copy(a.value().begin() + static_cast<size_t>(i) * d + c0,
                  a.value().begin() + static_cast<size_t>(i) * d + c1, v.begin() + static_cast<size_t>(i) * w);
    auto an = a.node();
    return make_op<T>({n, w}, std::move(v), {a}, [an, n, d, c0, w](const std::vector<T>& g) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < w; ++j)
                an->grad[static_cast<size_t>(i) * d + c0 + j] += g[static_cast<size_t>(i) * w + j];
    });
}

// Gather arbitrary flat indices; backward scatter-adds. Index maps are the
// basis of patchify and its test-side inverse.
template <class T>
Tensor<T> gather_flat(const Tensor<T>& a, std::vector<int64_t> indices, std::vector<int> out_shape) {
    int64_t n = 1;
    for (int d : out_shape) n *= d;
    if (n != static_cast<int64_t>(indices.size()))
        throw ShapeError("gather_flat: index count " + std::to_string(indices.size()) +
                         " does not match shape " + shape_str(out_shape));
    std::vector<T> v(indices.size());
    for (size_t i = 0; i < indices.size(); ++i) v[i] = a.value()[indices[i]];
    auto an = a.node();
    auto idx = std::make_shared<std::vector<int64_t>>(std::move(indices));
    return make_op<T>(std::move(out_shape), std::move(v), {a}, [an, idx](const std::vector<T>& g) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) an->grad[(*idx)[i]] += g[i];
    });
}

// Row gather from an embedding table.
template <class T>
Tensor<T> embedding(const Tensor<T>& table, const std::vector<int>& ids) {
    if (table.ndim() != 2) throw ShapeError("embedding: table must be 2-d, got " + shape_str(table.shape()));
    int v = table.dim(0), d = table.dim(1);
    for (int id : ids)
        if (id < 0 || id >= v)
            throw ShapeError("embedding: id " + std::to_string(id) + " out of vocab " + std::to_string(v));
    int n = static_cast<int>(ids.size());
    std::vector<T> out(static_cast<size_t>(n) * d);
    for (int i = 0; i < n; ++i)
        std::copy(table.value().begin() + static_cast<size_t>(ids[i]) * d,
                  table.value().begin() + static_cast<size_t>(ids[i] + 1) * d,
                  out.begin() + static_cast<size_t>(i) * d);
    auto tn = table.node();
    auto ids_copy = std::make_shared<std::vector<int>>(ids);
    return make_op<T>({n, d}, std::move(out), {table}, [tn, ids_copy, d](const std::vector<T>& g) {
        if (!tn->requires_grad) return;
        tn->ensure_grad();
        for (size_t i = 0; i < ids_copy->size(); ++i) {
            size_t src = i * d, dst = static_cast<size_t>((*ids_copy)[i]) * d;
            for (int j = 0; j < d; ++j) tn->grad[dst + j] += g[src + j];
        }
    });
}

// ----------------------------- reductions & nonlinearities -----------------------------

template <class T>
Tensor<T> sum(const Tensor<T>& a) {
    T s = 0;
    for (T x : a.value()) s += x;
    auto an = a.node();
    return make_op<T>({1}, {s}, {a}, [an](const std::vector<T>& g) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (auto& gi : an->grad) gi += g[0];
    });
}

// Softmax along one axis of a 1-d or 2-d tensor, max-subtracted.
template <class T>
Tensor<T> softmax(const Tensor<T>& a, int axis) {
    if (a.ndim() < 1 || a.ndim() > 2 || axis < 0 || axis >= a.ndim())
        throw ShapeError("softmax: axis " + std::to_string(axis) + " invalid for " + shape_str(a.shape()));
    int rows, cols;
    bool along_cols; // reduce over the second index
    if (a.ndim() == 1) {
        rows = 1;
        cols = a.dim(0);
        along_cols = true;
    } else {
        rows = a.dim(0);
        cols = a.dim(1);
        along_cols = (axis == 1);
    }
    std::vector<T> v(a.value().size());
    auto run = [&](int groups, int len, auto at) {
        for (int gI = 0; gI < groups; ++gI) {
            T mx = at(a.value(), gI, 0);
            for (int i = 1; i < len; ++i) mx = std::max(mx, at(a.value(), gI, i));
            T denom = 0;
            for (int i = 0; i < len; ++i) {
                T e = std::exp(at(a.value(), gI, i) - mx);
                at(v, gI, i) = e;
                denom += e;
            }
            for (int i = 0; i < len; ++i) at(v, gI, i) /= denom;
        }
    };
    auto at_row = [cols](auto& buf, int gI, int i) -> decltype(buf[0])& {
        return buf[static_cast<size_t>(gI) * cols + i];
    };
    auto at_col = [cols](auto& buf, int gI, int i) -> decltype(buf[0])& {
        return buf[static_cast<size_t>(i) * cols + gI];
    };
    if (along_cols)
        run(rows, cols, at_row);
    else
        run(cols, rows, at_col);
    auto an = a.node();
    auto yv = std::make_shared<std::vector<T>>(v); // softmax output needed in backward
    return make_op<T>(a.shape(), std::move(v), {a},
                      [an, yv, rows, cols, along_cols](const std::vector<T>& g) {
                          if (!an->requires_grad) return;
                          an->ensure_grad();
                          auto at_row2 = [cols](auto& buf, int gI, int i) -> decltype(buf[0])& {
                              return buf[static_cast<size_t>(gI) * cols + i];
                          };
                          auto at_col2 = [cols](auto& buf, int gI, int i) -> decltype(buf[0])& {
                              return buf[static_cast<size_t>(i) * cols + gI];
                          };
                          auto run_b = [&](int groups, int len, auto at) {
                              for (int gI = 0; gI < groups; ++gI) {
                                  T dot = 0;
                                  for (int i = 0; i < len; ++i) dot += at(g, gI, i) * at(*yv, gI, i);
                                  for (int i = 0; i < len; ++i)
                                      at(an->grad, gI, i) += at(*yv, gI, i) * (at(g, gI, i) - dot);
                              }
                          };
                          if (along_cols)
                              run_b(rows, cols, at_row2);
                          else
                              run_b(cols, rows, at_col2);
                      });
}

template <class T>
Tensor<T> gelu(const Tensor<T>& a) {
    // exact erf form: x * Phi(x)
    std::vector<T> v(a.value().size());
    const T inv_sqrt2 = T(0.7071067811865475);
    for (size_t i = 0; i < v.size(); ++i) {
        T x = a.value()[i];
        v[i] = T(0.5) * x * (T(1) + std::erf(x * inv_sqrt2));
    }
    auto an = a.node();
    return make_op<T>(a.shape(), std::move(v), {a}, [an, inv_sqrt2](const std::vector<T>& g) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        const T inv_sqrt2pi = T(0.3989422804014327);
        for (size_t i = 0; i < g.size(); ++i) {
            T x = an->value[i];
            T phi_cdf = T(0.5) * (T(1) + std::erf(x * inv_sqrt2));
            T phi_pdf = inv_sqrt2pi * std::exp(T(-0.5) * x * x);
            an->grad[i] += g[i] * (phi_cdf + x * phi_pdf);
        }
    });
}

// Per-row layer norm of (n,d): y = (x - mean) / sqrt(var + eps) * gain + bias.
// Variance uses 1/d. eps may be zero; negative is rejected.
template <class T>
Tensor<T> layer_norm(const Tensor<T>& a, const Tensor<T>& gain, const Tensor<T>& bias, T eps) {
    if (a.ndim() != 2) throw ShapeError("layer_norm: expected 2-d input, got " + shape_str(a.shape()));
    int n = a.dim(0), d = a.dim(1);
    if (gain.ndim() != 1 || gain.dim(0) != d || bias.ndim() != 1 || bias.dim(0) != d)
        throw ShapeError("layer_norm: gain/bias shape " + shape_str(gain.shape()) + "/" +
                         shape_str(bias.shape()) + " does not match feature dim " + std::to_string(d));
    if (eps < T(0)) throw std::invalid_argument("layer_norm: eps must be >= 0");
    std::vector<T> v(a.value().size());
    auto xhat = std::make_shared<std::vector<T>>(a.value().size());
    auto inv_std = std::make_shared<std::vector<T>>(n);
    for (int i = 0; i < n; ++i) {
        const T* row = a.value().data() + static_cast<size_t>(i) * d;
        T mean = 0;
        for (int j = 0; j < d; ++j) mean += row[j];
        mean /= d;
        T var = 0;
        for (int j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
        var /= d;
        T is = T(1) / std::sqrt(var + eps);
        (*inv_std)[i] = is;
        for (int j = 0; j < d; ++j) {
            T xh = (row[j] - mean) * is;
            (*xhat)[static_cast<size_t>(i) * d + j] = xh;
            v[static_cast<size_t>(i) * d + j] = xh * gain.value()[j] + bias.value()[j];
        }
    }
    auto an = a.node(), gn = gain.node(), bn = bias.node();
    return make_op<T>(a.shape(), std::move(v), {a, gain, bias},
                      [an, gn, bn, xhat, inv_std, n, d](const std::vector<T>& g) {
                          for (int i = 0; i < n; ++i) {
                              const T* grow = g.data() + static_cast<size_t>(i) * d;
                              const T* xh = xhat->data() + static_cast<size_t>(i) * d;
                              if (gn->requires_grad) {
                                  gn->ensure_grad();
                                  for (int j = 0; j < d; ++j) gn->grad[j] += grow[j] * xh[j];
                              }
                              if (bn->requires_grad) {
                                  bn->ensure_grad();
                                  for (int j = 0; j < d; ++j) bn->grad[j] += grow[j];
                              }
                              if (an->requires_grad) {
                                  an->ensure_grad();
                                  T* arow = an->grad.data() + static_cast<size_t>(i) * d;
                                  // dxhat_j = g_j * gain_j; dx = (dxhat - mean(dxhat) - xhat*mean(dxhat*xhat)) * inv_std
                                  T sum_dxh = 0, sum_dxh_xh = 0;
                                  for (int j = 0; j < d; ++j) {
                                      T dxh = grow[j] * gn->value[j];
                                      sum_dxh += dxh;
                                      sum_dxh_xh += dxh * xh[j];
                                  }
                                  T m1 = sum_dxh / d, m2 = sum_dxh_xh / d;
                                  for (int j = 0; j < d; ++j) {
                                      T dxh = grow[j] * gn->value[j];
                                      arow[j] += (dxh - m1 - xh[j] * m2) * (*inv_std)[i];
                                  }
                              }
                          }
                      });
}

// Mean cross-entropy of logits (n,V) against integer targets, max-subtracted.
template <class T>
Tensor<T> cross_entropy(const Tensor<T>& logits, const std::vector<int>& target_ids) {
    if (logits.ndim() != 2)
        throw ShapeError("cross_entropy: logits must be 2-d, got " + shape_str(logits.shape()));
    int n = logits.dim(0), V = logits.dim(1);
    if (static_cast<int>(target_ids.size()) != n)
        throw ShapeError("cross_entropy: " + std::to_string(target_ids.size()) + " targets for " +
                         std::to_string(n) + " logit rows");
    for (int t : target_ids)
        if (t < 0 || t >= V)
            throw ShapeError("cross_entropy: target id " + std::to_string(t) + " out of vocab " +
                             std::to_string(V));
    auto probs = std::make_shared<std::vector<T>>(logits.value().size());
    T loss = 0;
    for (int i = 0; i < n; ++i) {
        const T* row = logits.value().data() + static_cast<size_t>(i) * V;
        T mx = row[0];
        for (int j = 1; j < V; ++j) mx = std::max(mx, row[j]);
        T denom = 0;
        for (int j = 0; j < V; ++j) {
            T e = std::exp(row[j] - mx);
            (*probs)[static_cast<size_t>(i) * V + j] = e;
            denom += e;
        }
        for (int j = 0; j < V; ++j) (*probs)[static_cast<size_t>(i) * V + j] /= denom;
        loss -= std::log((*probs)[static_cast<size_t>(i) * V + target_ids[i]]);
    }
    loss /= n;
    auto ln = logits.node();
    auto ids = std::make_shared<std::vector<int>>(target_ids);
    return make_op<T>({1}, {loss}, {logits}, [ln, probs, ids, n, V](const std::vector<T>& g) {
        if (!ln->requires_grad) return;
        ln->ensure_grad();
        T go = g[0] / n;
        for (int i = 0; i < n; ++i) {
            T* grow = ln->grad.data() + static_cast<size_t>(i) * V;
            const T* prow = probs->data() + static_cast<size_t>(i) * V;
            for (int j = 0; j < V; ++j) grow[j] += go * prow[j];
            grow[(*ids)[i]] -= go;
        }
    });
}

} // namespace vlm::ad
