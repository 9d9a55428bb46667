#pragma once

#include <optional>

#include "vlm/fusion.hpp"
#include "vlm/nn.hpp"

namespace vlm {

struct DecoderConfig {
    int vocab_size = 256; // byte-level
    int d_lm = 128;
    int depth = 4;
    int heads = 4;
    int max_seq = 2048;

    void validate() const {
        if (vocab_size < 2) throw ConfigError("decoder: vocab must be >= 2");
        if (d_lm < 1 || heads < 1 || d_lm % heads != 0)
            throw ShapeError("decoder: d_lm " + std::to_string(d_lm) + " not divisible by heads " +
                             std::to_string(heads));
        if (depth < 0 || max_seq < 1) throw ConfigError("decoder: bad depth/max_seq");
    }
};

// Low-rank delta on a frozen linear map: effective weight
// W + (alpha/rank) * B * A, with B zero-initialized so a freshly attached
// adapter is an exact no-op.
template <class T>
struct LoraAdapter {
    int rank = 4;
    T alpha = T(8);
    ad::Tensor<T> A; // (rank, d_in)
    ad::Tensor<T> B; // (d_out, rank)
    std::string target;

    static LoraAdapter init(int rank, T alpha, int d_in, int d_out, std::string target, Rng& rng) {
        if (rank < 1) throw std::invalid_argument("lora: rank must be >= 1, got " + std::to_string(rank));
        LoraAdapter a;
        a.rank = rank;
        a.alpha = alpha;
        a.target = std::move(target);
        std::vector<T> av(static_cast<size_t>(rank) * d_in);
        const double s = 1.0 / std::sqrt(static_cast<double>(d_in));
        for (auto& x : av) x = static_cast<T>(rng.normal(0.0, s));
        a.A = ad::Tensor<T>({rank, d_in}, std::move(av));
        a.B = ad::Tensor<T>::zeros({d_out, rank});
        return a;
    }

    T scaling() const { return alpha / static_cast<T>(rank); }
};

// y = x W^T + (alpha/r) * (x A^T) B^T. The base weight is never mutated;
// with a frozen base only A and B receive gradients.
template <class T>
ad::Tensor<T> lora_wrap(const ad::Tensor<T>& x, const ad::Tensor<T>& w,
                        const LoraAdapter<T>& adapter) {
    if (adapter.rank < 1) throw std::invalid_argument("lora_wrap: rank must be >= 1");
    auto base = ad::matmul_nt(x, w);
    auto delta = ad::matmul_nt(ad::matmul_nt(x, adapter.A), adapter.B);
    return ad::add(base, ad::scale(delta, adapter.scaling()));
}

template <class T>
struct DecoderParams {
    struct Layer {
        ad::Tensor<T> ln1_g, ln1_b;
        ad::Tensor<T> wq, wk, wv, wo;
        ad::Tensor<T> ln2_g, ln2_b;
        ad::Tensor<T> mlp_w1, mlp_b1, mlp_w2, mlp_b2;
        std::optional<LoraAdapter<T>> lora_q, lora_v;
    };

    ad::Tensor<T> tok_embed; // (vocab, d_lm)
    ad::Tensor<T> pos_embed; // (max_seq, d_lm)
    std::vector<Layer> layers;
    ad::Tensor<T> final_ln_g, final_ln_b;
    ad::Tensor<T> unembed; // (vocab, d_lm)

    static DecoderParams init(const DecoderConfig& cfg, Rng& rng) {
        cfg.validate();
        DecoderParams p;
        const int d = cfg.d_lm;
        auto randn = [&rng](std::vector<int> shape, double stddev) {
            int64_t n = 1;
            for (int s : shape) n *= s;
            std::vector<T> v(n);
            for (auto& x : v) x = static_cast<T>(rng.normal(0.0, stddev));
            return ad::Tensor<T>(std::move(shape), std::move(v));
        };
        const double ws = 1.0 / std::sqrt(static_cast<double>(d));
        p.tok_embed = randn({cfg.vocab_size, d}, 0.02);
        p.pos_embed = randn({cfg.max_seq, d}, 0.02);
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
            l.mlp_w1 = randn({4 * d, d}, ws);
            l.mlp_b1 = ad::Tensor<T>::zeros({4 * d});
            l.mlp_w2 = randn({d, 4 * d}, 1.0 / std::sqrt(4.0 * d));
            l.mlp_b2 = ad::Tensor<T>::zeros({d});
        }
        p.final_ln_g = ad::Tensor<T>::full({d}, T(1));
        p.final_ln_b = ad::Tensor<T>::zeros({d});
        p.unembed = randn({cfg.vocab_size, d}, ws);
        return p;
    }

    // Rank-r adapters on Wq and Wv of every layer.
    void attach_lora(int rank, T alpha, Rng& rng) {
        const int d = tok_embed.dim(1);
        for (size_t i = 0; i < layers.size(); ++i) {
            layers[i].lora_q =
                LoraAdapter<T>::init(rank, alpha, d, d, "layer" + std::to_string(i) + ".wq", rng);
            layers[i].lora_v =
                LoraAdapter<T>::init(rank, alpha, d, d, "layer" + std::to_string(i) + ".wv", rng);
        }
    }

    bool has_lora() const {
        for (const auto& l : layers)
            if (l.lora_q || l.lora_v) return true;
        return false;
    }

    // Fold (alpha/r) * B * A into the base weights and drop the adapters.
    void merge_lora() {
        for (auto& l : layers) {
            auto fold = [](ad::Tensor<T>& w, const LoraAdapter<T>& a) {
                const int d_out = a.B.dim(0), r = a.B.dim(1), d_in = a.A.dim(1);
                std::vector<T> delta(static_cast<size_t>(d_out) * d_in);
                ad::mm_nn(a.B.value().data(), a.A.value().data(), delta.data(), d_out, r, d_in, false);
                const T s = a.scaling();
                auto& wv = w.value_mut();
                for (size_t i = 0; i < wv.size(); ++i) wv[i] += s * delta[i];
            };
            if (l.lora_q) fold(l.wq, *l.lora_q);
            if (l.lora_v) fold(l.wv, *l.lora_v);
            l.lora_q.reset();
            l.lora_v.reset();
        }
    }

    // Base decoder weights; registered under the "lm." prefix.
    void for_each_param(const std::function<void(const std::string&, ad::Tensor<T>&)>& fn) {
        fn("tok_embed", tok_embed);
        fn("pos_embed", pos_embed);
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
        fn("unembed", unembed);
    }

    // Adapter weights; registered under the "lora." prefix.
    void for_each_lora_param(const std::function<void(const std::string&, ad::Tensor<T>&)>& fn) {
        for (size_t i = 0; i < layers.size(); ++i) {
            auto& l = layers[i];
            std::string pre = "layer" + std::to_string(i) + ".";
            if (l.lora_q) {
                fn(pre + "q.A", l.lora_q->A);
                fn(pre + "q.B", l.lora_q->B);
            }
            if (l.lora_v) {
                fn(pre + "v.A", l.lora_v->A);
                fn(pre + "v.B", l.lora_v->B);
            }
        }
    }
};

// Causal decoding over [visual prefix, text embeddings]; every position
// attends to itself and everything earlier, so the whole visual prefix is
// visible to every text position. Logits are returned for text positions
// only.
template <class T>
ad::Tensor<T> decode_forward(const TokenSequence<T>& visual, const std::vector<int>& text_ids,
                             const DecoderConfig& cfg, DecoderParams<T>& params) {
    const int n_v = visual.tokens.defined() ? visual.count() : 0;
    const int n_t = static_cast<int>(text_ids.size());
    if (n_t < 1) throw ContractError("decode_forward: no text positions");
    if (n_v + n_t > cfg.max_seq)
        throw CapacityError("decode_forward: sequence length " + std::to_string(n_v + n_t) +
                            " (visual " + std::to_string(n_v) + " + text " + std::to_string(n_t) +
                            ") exceeds max_seq " + std::to_string(cfg.max_seq));
    if (n_v > 0 && visual.tokens.dim(1) != cfg.d_lm)
        throw ShapeError("decode_forward: visual token dim " + std::to_string(visual.tokens.dim(1)) +
                         " does not match d_lm " + std::to_string(cfg.d_lm));

    auto text_emb = ad::embedding(params.tok_embed, text_ids);
    auto x = n_v > 0 ? ad::concat<T>({visual.tokens, text_emb}, 0) : text_emb;
    const int L = n_v + n_t;
    x = ad::add(x, ad::slice_rows(params.pos_embed, 0, L));

    auto mask = causal_mask<T>(L);
    const T eps = static_cast<T>(kLayerNormEps);
    for (auto& l : params.layers) {
        auto h = ad::layer_norm(x, l.ln1_g, l.ln1_b, eps);
        auto q = l.lora_q ? lora_wrap(h, l.wq, *l.lora_q) : linear(h, l.wq);
        auto k = linear(h, l.wk);
        auto v = l.lora_v ? lora_wrap(h, l.wv, *l.lora_v) : linear(h, l.wv);
        x = ad::add(x, attention_core(q, k, v, l.wo, cfg.heads, &mask));
        auto h2 = ad::layer_norm(x, l.ln2_g, l.ln2_b, eps);
        x = ad::add(x, linear(ad::gelu(linear(h2, l.mlp_w1, l.mlp_b1)), l.mlp_w2, l.mlp_b2));
    }
    x = ad::layer_norm(x, params.final_ln_g, params.final_ln_b, eps);
    auto text_h = n_v > 0 ? ad::slice_rows(x, n_v, L) : x;
    return ad::matmul_nt(text_h, params.unembed); // (n_t, vocab)
}

// Mean next-token cross-entropy; targets align row-for-row with logits.
template <class T>
ad::Tensor<T> language_loss(const ad::Tensor<T>& logits, const std::vector<int>& target_ids) {
    return ad::cross_entropy(logits, target_ids);
}

} // namespace vlm
