#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "vlm/common.hpp"
#include "vlm/tensor.hpp"

namespace vlm {

// Named, optionally frozen model tensor. When trainable is false the
// optimizer never writes to it (freeze contract).
template <class T>
struct Parameter {
    std::string name;
    ad::Tensor<T> tensor;
    bool trainable = true;
};

template <class T>
class ParamStore {
public:
    void add(std::string name, ad::Tensor<T> tensor, bool trainable = true) {
        if (index_.count(name)) throw ContractError("duplicate parameter name: " + name);
        index_[name] = params_.size();
        params_.push_back(Parameter<T>{std::move(name), std::move(tensor), trainable});
    }

    Parameter<T>& at(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw ContractError("unknown parameter: " + name);
        return params_[it->second];
    }
    const Parameter<T>& at(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ContractError("unknown parameter: " + name);
        return params_[it->second];
    }
    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    std::vector<Parameter<T>>& params() { return params_; }
    const std::vector<Parameter<T>>& params() const { return params_; }
    size_t size() const { return params_.size(); }

    int64_t total_elements() const {
        int64_t n = 0;
        for (const auto& p : params_) n += p.tensor.numel();
        return n;
    }

    void set_trainable_all(bool trainable) {
        for (auto& p : params_) p.trainable = trainable;
    }
    void set_trainable_by_prefix(const std::string& prefix, bool trainable) {
        for (auto& p : params_)
            if (p.name.rfind(prefix, 0) == 0) p.trainable = trainable;
    }

    void set_requires_grad_from_trainable() {
        for (auto& p : params_) p.tensor.set_requires_grad(p.trainable);
    }

    void zero_grad() {
        for (auto& p : params_) p.tensor.grad_mut().clear();
    }

    // Order- and content-sensitive hash of the raw parameter values under a
    // prefix. The freeze contract is checked against this, not against
    // optimizer configuration.
    uint64_t digest(const std::string& prefix = "") const {
        uint64_t h = 0xcbf29ce484222325ull;
        for (const auto& p : params_) {
            if (!prefix.empty() && p.name.rfind(prefix, 0) != 0) continue;
            h = fnv1a64(p.name, h);
            h = fnv1a64(p.tensor.value().data(), p.tensor.value().size() * sizeof(T), h);
        }
        return h;
    }

    // Flatten trainable gradients into one vector in parameter order; used
    // for deterministic per-sample accumulation.
    std::vector<T> extract_grads() const {
        std::vector<T> out;
        for (const auto& p : params_) {
            if (!p.trainable) continue;
            if (!p.tensor.has_grad())
                out.insert(out.end(), static_cast<size_t>(p.tensor.numel()), T(0));
            else
                out.insert(out.end(), p.tensor.grad().begin(), p.tensor.grad().end());
        }
        return out;
    }

    void load_grads(const std::vector<T>& flat) {
        size_t off = 0;
        for (auto& p : params_) {
            if (!p.trainable) continue;
            size_t n = static_cast<size_t>(p.tensor.numel());
            p.tensor.grad_mut().assign(flat.begin() + off, flat.begin() + off + n);
            off += n;
        }
        if (off != flat.size()) throw ContractError("load_grads: size mismatch");
    }

private:
    std::vector<Parameter<T>> params_;
    std::unordered_map<std::string, size_t> index_;
};

// ----------------------------- optimizers -----------------------------

template <class T>
void sgd_step(ParamStore<T>& store, T lr) {
    for (auto& p : store.params()) {
        if (!p.trainable) continue;
        if (!p.tensor.has_grad())
            throw ContractError("sgd_step: trainable parameter '" + p.name + "' has no gradient");
        auto& v = p.tensor.value_mut();
        const auto& g = p.tensor.grad();
        for (size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
    }
}

template <class T>
struct AdamWState {
    std::unordered_map<std::string, std::vector<T>> m, v;
    int64_t step = 0;
};

template <class T>
void adamw_step(ParamStore<T>& store, AdamWState<T>& state, T lr, T beta1 = T(0.9),
                T beta2 = T(0.999), T eps = T(1e-8), T weight_decay = T(0)) {
    state.step += 1;
    const T bc1 = T(1) - std::pow(beta1, static_cast<T>(state.step));
    const T bc2 = T(1) - std::pow(beta2, static_cast<T>(state.step));
    for (auto& p : store.params()) {
        if (!p.trainable) continue;
        if (!p.tensor.has_grad())
            throw ContractError("adamw_step: trainable parameter '" + p.name + "' has no gradient");
        auto& val = p.tensor.value_mut();
        const auto& g = p.tensor.grad();
        auto& m = state.m[p.name];
        auto& v = state.v[p.name];
        if (m.empty()) m.assign(val.size(), T(0));
        if (v.empty()) v.assign(val.size(), T(0));
        for (size_t i = 0; i < val.size(); ++i) {
            m[i] = beta1 * m[i] + (T(1) - beta1) * g[i];
            v[i] = beta2 * v[i] + (T(1) - beta2) * g[i] * g[i];
            T mhat = m[i] / bc1;
            T vhat = v[i] / bc2;
            val[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * val[i]);
        }
    }
}

// ----------------------------- gradient checker -----------------------------

// Compares reverse-mode gradients against central differences. Returns the
// max relative error with denominator max(|analytic|, |numeric|, 1e-8).
// Run with T = double.
template <class T>
T gradient_check(const std::function<ad::Tensor<T>(const ad::Tensor<T>&)>& f, ad::Tensor<T> x,
                 T eps) {
    x.set_requires_grad(true);
    ad::Tensor<T> y = f(x);
    y.backward();
    std::vector<T> analytic = x.grad();
    if (analytic.empty()) analytic.assign(x.value().size(), T(0));

    T max_rel = 0;
    for (size_t i = 0; i < x.value().size(); ++i) {
        T orig = x.value()[i];
        x.value_mut()[i] = orig + eps;
        T fp = f(x).item();
        x.value_mut()[i] = orig - eps;
        T fm = f(x).item();
        x.value_mut()[i] = orig;
        T numeric = (fp - fm) / (2 * eps);
        T denom = std::max({std::abs(analytic[i]), std::abs(numeric), T(1e-8)});
        max_rel = std::max(max_rel, std::abs(analytic[i] - numeric) / denom);
    }
    return max_rel;
}

} // namespace vlm
