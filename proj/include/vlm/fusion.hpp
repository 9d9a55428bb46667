#pragma once

#include <optional>

#include "vlm/encoder.hpp"
#include "vlm/image.hpp"

namespace vlm {

// Shared two-layer MLP mapping visual tokens into the language-model
// embedding space. One parameter set for all tokens from all views.
template <class T>
struct ProjectorParams {
    ad::Tensor<T> w1, b1; // (d_hidden, d), (d_hidden)
    ad::Tensor<T> w2, b2; // (d_lm, d_hidden), (d_lm)

    static ProjectorParams init(int d_in, int d_hidden, int d_lm, Rng& rng) {
        ProjectorParams p;
        auto randn = [&rng](std::vector<int> shape, double stddev) {
            int64_t n = 1;
            for (int s : shape) n *= s;
            std::vector<T> v(n);
            for (auto& x : v) x = static_cast<T>(rng.normal(0.0, stddev));
            return ad::Tensor<T>(std::move(shape), std::move(v));
        };
        p.w1 = randn({d_hidden, d_in}, 1.0 / std::sqrt(static_cast<double>(d_in)));
        p.b1 = ad::Tensor<T>::zeros({d_hidden});
        p.w2 = randn({d_lm, d_hidden}, 1.0 / std::sqrt(static_cast<double>(d_hidden)));
        p.b2 = ad::Tensor<T>::zeros({d_lm});
        return p;
    }

    void for_each_param(const std::function<void(const std::string&, ad::Tensor<T>&)>& fn) {
        fn("w1", w1);
        fn("b1", b1);
        fn("w2", w2);
        fn("b2", b2);
    }
};

// Frozen concatenation order: tiles in row-major grid order, then the global
// view last if present. The order is a contract, independent of any parallel
// completion order upstream.
template <class T>
TokenSequence<T> fuse(const std::vector<TokenSequence<T>>& tile_tokens,
                      const std::optional<TokenSequence<T>>& global_tokens) {
    if (tile_tokens.empty()) throw ContractError("fuse: no tile sequences");
    const int d = tile_tokens.front().embed_dim();
    std::vector<ad::Tensor<T>> parts;
    parts.reserve(tile_tokens.size() + 1);
    TokenSequence<T> out;
    for (size_t t = 0; t < tile_tokens.size(); ++t) {
        const auto& seq = tile_tokens[t];
        if (seq.embed_dim() != d)
            throw ShapeError("fuse: mixed embed dims " + std::to_string(d) + " vs " +
                             std::to_string(seq.embed_dim()));
        parts.push_back(seq.tokens);
        out.provenance.insert(out.provenance.end(), seq.provenance.begin(), seq.provenance.end());
    }
    if (global_tokens) {
        if (global_tokens->embed_dim() != d)
            throw ShapeError("fuse: global embed dim " + std::to_string(global_tokens->embed_dim()) +
                             " vs tile dim " + std::to_string(d));
        parts.push_back(global_tokens->tokens);
        out.provenance.insert(out.provenance.end(), global_tokens->provenance.begin(),
                              global_tokens->provenance.end());
    }
    out.tokens = parts.size() == 1 ? parts[0] : ad::concat(parts, 0);
    return out;
}

// Tokenwise MLP into d_lm. Token count, order and provenance are unchanged.
template <class T>
TokenSequence<T> project(const TokenSequence<T>& tokens, ProjectorParams<T>& params) {
    if (tokens.embed_dim() != params.w1.dim(1))
        throw ShapeError("project: token dim " + std::to_string(tokens.embed_dim()) +
                         " does not match projector input dim " + std::to_string(params.w1.dim(1)));
    TokenSequence<T> out;
    out.tokens = linear(ad::gelu(linear(tokens.tokens, params.w1, params.b1)), params.w2, params.b2);
    out.provenance = tokens.provenance;
    return out;
}

// (r*c + [global]) * (S/p)^2, the closed form the fuse output length obeys.
inline int64_t visual_token_count(const GridSpec& spec, const EncoderConfig& cfg) {
    cfg.validate();
    if (spec.rows < 1 || spec.cols < 1) throw ConfigError("visual_token_count: invalid grid");
    return static_cast<int64_t>(spec.view_count()) * cfg.tokens_per_view();
}

} // namespace vlm
