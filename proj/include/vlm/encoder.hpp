#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vlm/common.hpp"
#include "vlm/nn.hpp"
#include "vlm/tensor.hpp"

namespace vlm {

// Where a visual token came from: one of the grid tiles, or the global view.
struct Provenance {
    static constexpr int kGlobal = -1;
    int tile_index = kGlobal; // row-major tile index, or kGlobal

    static Provenance tile(int index) { return Provenance{index}; }
    static Provenance global() { return Provenance{kGlobal}; }
    bool is_global() const { return tile_index == kGlobal; }
    bool operator==(const Provenance&) const = default;
};

template <class T>
struct TokenSequence {
    ad::Tensor<T> tokens; // (n, d)
    std::vector<Provenance> provenance;

    int count() const { return tokens.defined() ? tokens.dim(0) : 0; }
    int embed_dim() const { return tokens.dim(1); }
};

struct EncoderConfig {
    int patch_size = 8;
    int embed_dim = 64;
    int depth = 4;
    int heads = 4;
    float mlp_ratio = 4.0f;
    int view_side = 64;

    int tokens_per_view() const { return (view_side / patch_size) * (view_side / patch_size); }
    int mlp_hidden() const { return static_cast<int>(embed_dim * mlp_ratio); }

    void validate() const {
        if (view_side < 1 || patch_size < 1 || view_side % patch_size != 0)
            throw ShapeError("encoder: view side " + std::to_string(view_side) +
                             " not divisible by patch size " + std::to_string(patch_size));
        if (embed_dim < 1 || heads < 1 || embed_dim % heads != 0)
            throw ShapeError("encoder: embed dim " + std::to_string(embed_dim) +
                             " not divisible by heads " + std::to_string(heads));
        if (depth < 0) throw ConfigError("encoder: negative depth");
    }
};

// One parameter set shared by all views; pre-norm blocks, GELU MLP, learned
// positional embedding, bias-free attention projections.
template <class T>
struct EncoderParams {
    struct Layer {
        ad::Tensor<T> ln1_g, ln1_b;
        ad::Tensor<T> wq, wk, wv, wo;
        ad::Tensor<T> ln2_g, ln2_b;
        ad::Tensor<T> mlp_w1, mlp_b1, mlp_w2, mlp_b2;
    };

    ad::Tensor<T> patch_w; // (d, p*p*channels)
    ad::Tensor<T> patch_b; // (d)
    ad::Tensor<T> pos;     // (tokens_per_view, d)
    std::vector<Layer> layers;
    ad::Tensor<T> final_ln_g, final_ln_b;

    static EncoderParams init(const EncoderConfig& cfg, int channels, Rng& rng) {
        cfg.validate();
        EncoderParams p;
        const int d = cfg.embed_dim;
        const int pd = cfg.patch_size * cfg.patch_size * channels;
        auto randn = [&rng](std::vector<int> shape, double stddev) {
            int64_t n = 1;
            for (int s : shape) n *= s;
            std::vector<T> v(n);
            for (auto& x : v) x = static_cast<T>(rng.normal(0.0, stddev));
            return ad::Tensor<T>(std::move(shape), std::move(v));
        };
        p.patch_w = randn({d, pd}, 1.0 / std::sqrt(static_cast<double>(pd)));
        p.patch_b = ad::Tensor<T>::zeros({d});
        p.pos = randn({cfg.tokens_per_view(), d}, 0.02);
        const double ws = 1.0 / std::sqrt(static_cast<double>(d));
        p.layers.resize(cfg.depth);
        for (auto& l : p.layers) {
            l.ln1_g = ad::Tensor<T>::full({d}, T(1));
            l.ln1_b = ad::Tensor<T>::zeros({d});
            l.wq = randn({d, d}, ws);
            l.wk = randn({d, d}, ws);
            l.wv = randn({d, d}, ws);
            l.wo = randn({d, d}, ws);
            l.ln2_g = ad::Tensor<T>::full({d}, T(1));
            l.ln2_b = ad::Tensor<T>::zeros({d});
            l.mlp_w1 = randn({cfg.mlp_hidden(), d}, ws);
            l.mlp_b1 = ad::Tensor<T>::zeros({cfg.mlp_hidden()});
            l.mlp_w2 = randn({d, cfg.mlp_hidden()}, 1.0 / std::sqrt(static_cast<double>(cfg.mlp_hidden())));
            l.mlp_b2 = ad::Tensor<T>::zeros({d});
        }
        p.final_ln_g = ad::Tensor<T>::full({d}, T(1));
        p.final_ln_b = ad::Tensor<T>::zeros({d});
        return p;
    }

    void for_each_param(const std::function<void(const std::string&, ad::Tensor<T>&)>& fn) {
        fn("patch_w", patch_w);
        fn("patch_b", patch_b);
        fn("pos", pos);
        for (size_t i = 0; i < layers.size(); ++i) {
            auto& l = layers[i];
            std::string pre = "layer" + std::to_string(i) + ".";
            fn(pre + "ln1_g", l.ln1_g);
            fn(pre + "ln1_b", l.ln1_b);
            fn(pre + "wq", l.wq);
            fn(pre + "wk", l.wk);
            fn(pre + "wv", l.wv);
            fn(pre + "wo", l.wo);
            fn(pre + "ln2_g", l.ln2_g);
            fn(pre + "ln2_b", l.ln2_b);
            fn(pre + "mlp_w1", l.mlp_w1);
            fn(pre + "mlp_b1", l.mlp_b1);
            fn(pre + "mlp_w2", l.mlp_w2);
            fn(pre + "mlp_b2", l.mlp_b2);
        }
        fn("final_ln_g", final_ln_g);
        fn("final_ln_b", final_ln_b);
    }
};

// (channels, S, S) -> (tokens_per_view, p*p*channels). Patches are
// enumerated row-major over the patch grid; within a patch, values are
// flattened in (channel, row, col) order. Bijective.
inline std::vector<int64_t> patchify_index_map(int channels, int side, int p) {
    const int g = side / p;
    std::vector<int64_t> idx(static_cast<size_t>(g) * g * channels * p * p);
    size_t k = 0;
    for (int pr = 0; pr < g; ++pr)
        for (int pc = 0; pc < g; ++pc)
            for (int ch = 0; ch < channels; ++ch)
                for (int r = 0; r < p; ++r)
                    for (int c = 0; c < p; ++c)
                        idx[k++] = (static_cast<int64_t>(ch) * side + (pr * p + r)) * side + (pc * p + c);
    return idx;
}

template <class T>
ad::Tensor<T> patchify(const ad::Tensor<T>& view, int p) {
    if (view.ndim() != 3)
        throw ShapeError("patchify: expected (channels, S, S), got " + shape_str(view.shape()));
    const int channels = view.dim(0), side = view.dim(1);
    if (view.dim(2) != side || p < 1 || side % p != 0)
        throw ShapeError("patchify: side " + std::to_string(side) + " not divisible by patch size " +
                         std::to_string(p));
    const int g = side / p;
    return ad::gather_flat(view, patchify_index_map(channels, side, p), {g * g, p * p * channels});
}

// Self-attention over the n tokens of one view only; never across views.
template <class T>
ad::Tensor<T> self_attention(const ad::Tensor<T>& x, const typename EncoderParams<T>::Layer& l,
                             int heads) {
    auto q = linear(x, l.wq);
    auto k = linear(x, l.wk);
    auto v = linear(x, l.wv);
    return attention_core(q, k, v, l.wo, heads);
}

// patchify -> patch embedding -> +pos -> depth x (pre-norm MHSA + pre-norm
// GELU MLP, both residual) -> final layer norm. Token order equals patch
// order.
template <class T>
TokenSequence<T> encode_view(const ad::Tensor<T>& view, const EncoderConfig& cfg,
                             EncoderParams<T>& params, Provenance tag) {
    if (view.ndim() != 3 || view.dim(1) != cfg.view_side || view.dim(2) != cfg.view_side)
        throw ShapeError("encode_view: view shape " + shape_str(view.shape()) +
                         " does not match configured side " + std::to_string(cfg.view_side));
    auto x = patchify(view, cfg.patch_size);
    x = linear(x, params.patch_w, params.patch_b);
    x = ad::add(x, params.pos);
    const T eps = static_cast<T>(kLayerNormEps);
    for (auto& l : params.layers) {
        auto h = ad::layer_norm(x, l.ln1_g, l.ln1_b, eps);
        x = ad::add(x, self_attention(h, l, cfg.heads));
        auto h2 = ad::layer_norm(x, l.ln2_g, l.ln2_b, eps);
        auto m = linear(gelu(linear(h2, l.mlp_w1, l.mlp_b1)), l.mlp_w2, l.mlp_b2);
        x = ad::add(x, m);
    }
    x = ad::layer_norm(x, params.final_ln_g, params.final_ln_b, eps);
    TokenSequence<T> seq;
    seq.tokens = x;
    seq.provenance.assign(cfg.tokens_per_view(), tag);
    return seq;
}

} // namespace vlm
