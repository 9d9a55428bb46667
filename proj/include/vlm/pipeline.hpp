#pragma once

#include "vlm/decoder.hpp"
#include "vlm/image.hpp"
#include "vlm/parallel.hpp"
#include "vlm/params.hpp"

namespace vlm {

// Pixel normalization constants are part of the persisted model config.
struct NormStats {
    std::vector<float> mean{0.5f, 0.5f, 0.5f};
    std::vector<float> std{0.5f, 0.5f, 0.5f};
};

struct LoraConfig {
    bool enabled = true;
    int rank = 4;
    float alpha = 8.0f;
};

// The full image -> logits pipeline: grid split -> normalize -> shared
// per-view encoder -> fuse -> shared MLP projector -> causal decoder with
// the visual sequence as prefix.
template <class T>
struct VlmModel {
    GridSpec grid;
    EncoderConfig enc_cfg;
    DecoderConfig dec_cfg;
    NormStats norm;
    int channels = 3;

    EncoderParams<T> vision;
    ProjectorParams<T> projector;
    DecoderParams<T> lm;

    // Named view over the same tensors; rebuilt whenever the tensor handles
    // change (init, clone, lora attach).
    ParamStore<T> params;

    void rebuild_store() {
        ParamStore<T> fresh;
        vision.for_each_param([&](const std::string& n, ad::Tensor<T>& t) { fresh.add("vision." + n, t); });
        projector.for_each_param(
            [&](const std::string& n, ad::Tensor<T>& t) { fresh.add("projector." + n, t); });
        lm.for_each_param([&](const std::string& n, ad::Tensor<T>& t) { fresh.add("lm." + n, t); });
        lm.for_each_lora_param(
            [&](const std::string& n, ad::Tensor<T>& t) { fresh.add("lora." + n, t); });
        // carry over freeze flags where names persist
        for (auto& p : fresh.params())
            if (params.contains(p.name)) p.trainable = params.at(p.name).trainable;
        params = std::move(fresh);
    }

    VlmModel clone() const {
        VlmModel out = *this;
        auto copy = [](const std::string&, ad::Tensor<T>& t) { t = t.deep_copy(); };
        out.vision.for_each_param(copy);
        out.projector.for_each_param(copy);
        out.lm.for_each_param(copy);
        out.lm.for_each_lora_param(copy);
        out.rebuild_store();
        for (auto& p : out.params.params()) p.trainable = params.at(p.name).trainable;
        out.params.set_requires_grad_from_trainable();
        return out;
    }

    // Ordered views: tiles row-major, then the optional global view.
    std::vector<ad::Tensor<T>> normalized_views(const RasterImage& img) const {
        TileSet tiles = split_into_tiles(img, grid);
        std::vector<ad::Tensor<T>> views;
        views.reserve(grid.view_count());
        for (const auto& t : tiles.tiles) views.push_back(normalize_pixels<T>(t, norm.mean, norm.std));
        if (tiles.global_view)
            views.push_back(normalize_pixels<T>(*tiles.global_view, norm.mean, norm.std));
        return views;
    }

    // Encode every view (optionally across threads) and fuse by index. The
    // fused order never depends on the completion schedule.
    TokenSequence<T> encode_image(const RasterImage& img, int threads = 1) {
        auto views = normalized_views(img);
        const int n_tiles = grid.rows * grid.cols;
        std::vector<TokenSequence<T>> encoded(views.size());
        bool grad_on = ad::grad_mode_flag();
        parallel_for(static_cast<int64_t>(views.size()), threads, [&](int64_t i) {
            ad::grad_mode_flag() = grad_on;
            Provenance tag = i < n_tiles ? Provenance::tile(static_cast<int>(i)) : Provenance::global();
            encoded[i] = encode_view(views[i], enc_cfg, vision, tag);
        });
        std::vector<TokenSequence<T>> tile_seqs(encoded.begin(), encoded.begin() + n_tiles);
        std::optional<TokenSequence<T>> global_seq;
        if (grid.include_global) global_seq = encoded.back();
        auto fused = fuse(tile_seqs, global_seq);
        return project(fused, projector);
    }

    ad::Tensor<T> forward(const RasterImage& img, const std::vector<int>& text_ids, int threads = 1) {
        return decode_forward(encode_image(img, threads), text_ids, dec_cfg, lm);
    }
};

template <class T>
VlmModel<T> build_pipeline(const GridSpec& grid, const EncoderConfig& enc, const DecoderConfig& dec,
                           uint64_t seed, const NormStats& norm = {}, const LoraConfig& lora = {},
                           int channels = 3) {
    enc.validate();
    dec.validate();
    if (grid.view_side != enc.view_side)
        throw ConfigError("build_pipeline: grid view side " + std::to_string(grid.view_side) +
                          " != encoder view side " + std::to_string(enc.view_side));
    int64_t vt = visual_token_count(grid, enc);
    if (vt + 1 > dec.max_seq)
        throw CapacityError("build_pipeline: " + std::to_string(vt) +
                            " visual tokens leave no room for text in max_seq " +
                            std::to_string(dec.max_seq));

    VlmModel<T> m;
    m.grid = grid;
    m.enc_cfg = enc;
    m.dec_cfg = dec;
    m.norm = norm;
    m.channels = channels;
    Rng enc_rng(sub_seed(seed, "init.vision"));
    Rng proj_rng(sub_seed(seed, "init.projector"));
    Rng dec_rng(sub_seed(seed, "init.lm"));
    m.vision = EncoderParams<T>::init(enc, channels, enc_rng);
    m.projector = ProjectorParams<T>::init(enc.embed_dim, dec.d_lm, dec.d_lm, proj_rng);
    m.lm = DecoderParams<T>::init(dec, dec_rng);
    if (lora.enabled) {
        Rng lora_rng(sub_seed(seed, "init.lora"));
        m.lm.attach_lora(lora.rank, static_cast<T>(lora.alpha), lora_rng);
    }
    m.rebuild_store();
    m.params.set_requires_grad_from_trainable();
    return m;
}

// Greedy byte-level decoding of a fixed number of answer bytes.
template <class T>
std::string greedy_decode(VlmModel<T>& model, const RasterImage& img, const std::string& question,
                          int answer_len, int threads = 1) {
    ad::NoGradGuard ng;
    std::vector<int> ids;
    ids.reserve(question.size() + answer_len);
    for (unsigned char c : question) ids.push_back(c);
    auto visual = model.encode_image(img, threads);
    std::string out;
    for (int step = 0; step < answer_len; ++step) {
        auto logits = decode_forward(visual, ids, model.dec_cfg, model.lm);
        const int V = logits.dim(1);
        const T* row = logits.value().data() + static_cast<size_t>(logits.dim(0) - 1) * V;
        int best = 0;
        for (int j = 1; j < V; ++j)
            if (row[j] > row[best]) best = j;
        out.push_back(static_cast<char>(best));
        ids.push_back(best);
    }
    return out;
}

} // namespace vlm
