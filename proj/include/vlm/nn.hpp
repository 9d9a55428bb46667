#pragma once

#include "vlm/common.hpp"
#include "vlm/tensor.hpp"

namespace vlm {

constexpr float kLayerNormEps = 1e-5f;

// y = x * W^T (+ b). W is stored (out, in).
template <class T>
ad::Tensor<T> linear(const ad::Tensor<T>& x, const ad::Tensor<T>& w) {
    return ad::matmul_nt(x, w);
}

template <class T>
ad::Tensor<T> linear(const ad::Tensor<T>& x, const ad::Tensor<T>& w, const ad::Tensor<T>& b) {
    return ad::add_rowvec(ad::matmul_nt(x, w), b);
}

// Scaled dot-product multi-head attention over precomputed q, k, v (n, d).
// mask, when defined, is an (n, n) additive bias (0 or -1e30). Softmax rows
// sum to 1 per head. Scaling is 1/sqrt(d/heads).
template <class T>
ad::Tensor<T> attention_core(const ad::Tensor<T>& q, const ad::Tensor<T>& k, const ad::Tensor<T>& v,
                             const ad::Tensor<T>& wo, int heads, const ad::Tensor<T>* mask = nullptr) {
    const int d = q.dim(1);
    if (d % heads != 0)
        throw ShapeError("attention: embed dim " + std::to_string(d) + " not divisible by " +
                         std::to_string(heads) + " heads");
    const int dh = d / heads;
    const T scl = T(1) / std::sqrt(static_cast<T>(dh));
    std::vector<ad::Tensor<T>> head_outs;
    head_outs.reserve(heads);
    for (int h = 0; h < heads; ++h) {
        auto qh = ad::slice_cols(q, h * dh, (h + 1) * dh);
        auto kh = ad::slice_cols(k, h * dh, (h + 1) * dh);
        auto vh = ad::slice_cols(v, h * dh, (h + 1) * dh);
        auto scores = ad::scale(ad::matmul_nt(qh, kh), scl);
        if (mask) scores = ad::add(scores, *mask);
        auto probs = ad::softmax(scores, 1);
        head_outs.push_back(ad::matmul(probs, vh));
    }
    auto merged = heads == 1 ? head_outs[0] : ad::concat(head_outs, 1);
    return ad::matmul_nt(merged, wo);
}

// Additive causal mask: position i attends to j <= i.
template <class T>
ad::Tensor<T> causal_mask(int n) {
    std::vector<T> m(static_cast<size_t>(n) * n, T(0));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) m[static_cast<size_t>(i) * n + j] = T(-1e30);
    return ad::Tensor<T>({n, n}, std::move(m));
}

} // namespace vlm
