#pragma once

#include "vlm/train.hpp"

namespace vlm {

// Text-format pretraining for the toy decoder, standing in for the
// pretrained backbone LM the full-size pipeline would download. Sequences
// are [gaussian noise prefix, question template, random answer bytes]; the
// answers are uniform over the template's alphabet and the prefix is pure
// noise, so no task information leaks — the decoder learns output formats
// and prefix-robust readout, nothing else. Runs before phase 1; the
// two-phase freeze contracts are measured from their own start states.
// A question template plus its payload-index -> answer map. Distinct
// templates may read different bits of the same payload index (the relation
// questions read bit 0 and bit 1 respectively), so one planted payload can
// carry several question-conditioned answers at once.
struct FormatTemplate {
    std::string question;
    std::vector<std::string> answers_by_payload; // size = payload_count
};

struct WarmupConfig {
    int steps = 1500;
    int batch_size = 8;
    float learning_rate = 1e-3f;
    int prefix_tokens = 64; // noise-prefix length, typically the visual token count
    uint64_t seed = 0;
    int threads = 1;
    // Fraction of warmup samples that add a marker+payload vector at one or
    // more random prefix positions, with the answer tied to the payload
    // index. This trains a generic retrieve-from-prefix circuit (the toy
    // analog of a pretrained LM's copy heads) that stays readable when the
    // payload is weak or spread over many positions; payload indices are
    // uniform random, so it carries no benchmark information.
    float copy_fraction = 0.7f;
    int payload_count = 8;
};

// Fixed random marker/payload directions derived from the warmup seed; the
// decoder learns them during warmup and the upstream discovers them through
// gradients during finetuning.
template <class T>
struct CopyCodebook {
    std::vector<T> marker;                 // (d_lm)
    std::vector<std::vector<T>> payloads;  // payload_count x (d_lm)

    static CopyCodebook make(uint64_t seed, int d_lm, int payload_count) {
        Rng rng(sub_seed(seed, "lm-warmup-codebook"));
        CopyCodebook cb;
        cb.marker.resize(d_lm);
        for (auto& x : cb.marker) x = static_cast<T>(rng.normal());
        cb.payloads.assign(payload_count, std::vector<T>(d_lm));
        for (auto& p : cb.payloads)
            for (auto& x : p) x = static_cast<T>(rng.normal());
        return cb;
    }
};

template <class T>
std::vector<float> pretrain_decoder_format(VlmModel<T>& model,
                                           const std::vector<FormatTemplate>& templates,
                                           const WarmupConfig& cfg) {
    if (templates.empty()) throw ContractError("decoder warmup: no templates");
    model.params.set_trainable_all(false);
    model.params.set_trainable_by_prefix("lm.", true);
    model.params.set_requires_grad_from_trainable();

    const int nw = std::max(1, std::min(cfg.threads, cfg.batch_size));
    std::vector<VlmModel<T>> workers;
    workers.reserve(nw);
    for (int w = 0; w < nw; ++w) workers.push_back(model.clone());

    AdamWState<T> opt;
    std::vector<float> trace;
    trace.reserve(cfg.steps);
    const int d_lm = model.dec_cfg.d_lm;

    for (int step = 0; step < cfg.steps; ++step) {
        // deterministic per-sample streams
        struct Sample {
            std::vector<T> prefix;
            std::vector<int> ids;
        };
        auto codebook = CopyCodebook<T>::make(cfg.seed, d_lm, cfg.payload_count);
        std::vector<Sample> batch(cfg.batch_size);
        for (int b = 0; b < cfg.batch_size; ++b) {
            Rng rng(sub_seed(cfg.seed, "lm-warmup") ^
                    (0x9e3779b97f4a7c15ull * (static_cast<uint64_t>(step) * cfg.batch_size + b + 1)));
            const auto& tpl = templates[rng.uniform_int(0, static_cast<int64_t>(templates.size()) - 1)];
            Sample s;
            s.prefix.resize(static_cast<size_t>(cfg.prefix_tokens) * d_lm);
            for (auto& x : s.prefix) x = static_cast<T>(rng.normal());
            if (static_cast<int>(tpl.answers_by_payload.size()) != cfg.payload_count)
                throw ContractError("decoder warmup: template answer map must cover every payload");
            std::string ans;
            int idx = static_cast<int>(rng.uniform_int(0, cfg.payload_count - 1));
            if (rng.uniform01() < cfg.copy_fraction) {
                // add marker+payload at a few random positions with jittered
                // amplitude; the answer is the template's reading of the
                // payload index
                double roll = rng.uniform01();
                int k = roll < 0.6 ? 1 : roll < 0.85 ? 2 : 4;
                T amp = static_cast<T>(rng.uniform(1.0, 2.0) / std::sqrt(static_cast<double>(k)));
                for (int plant = 0; plant < k; ++plant) {
                    int pos = static_cast<int>(rng.uniform_int(0, cfg.prefix_tokens - 1));
                    for (int j = 0; j < d_lm; ++j)
                        s.prefix[static_cast<size_t>(pos) * d_lm + j] +=
                            amp * (codebook.marker[j] + codebook.payloads[idx][j]);
                }
            }
            ans = tpl.answers_by_payload[idx]; // without a plant, idx is just noise
            for (unsigned char c : tpl.question) s.ids.push_back(c);
            for (unsigned char c : ans) s.ids.push_back(c);
            batch[b] = std::move(s);
        }

        for (auto& w : workers)
            for (auto& p : w.params.params())
                p.tensor.value_mut() = model.params.at(p.name).tensor.value();

        std::vector<std::vector<T>> grads(cfg.batch_size);
        std::vector<T> losses(cfg.batch_size, T(0));
        auto run_chunk = [&](VlmModel<T>& m, int64_t begin, int64_t end) {
            for (int64_t i = begin; i < end; ++i) {
                TokenSequence<T> prefix;
                prefix.tokens = ad::Tensor<T>({cfg.prefix_tokens, d_lm}, batch[i].prefix);
                prefix.provenance.assign(cfg.prefix_tokens, Provenance::global());
                auto logits = decode_forward(prefix, batch[i].ids, m.dec_cfg, m.lm);
                // next-byte loss across the whole text
                auto rows = ad::slice_rows(logits, 0, static_cast<int>(batch[i].ids.size()) - 1);
                std::vector<int> targets(batch[i].ids.begin() + 1, batch[i].ids.end());
                auto loss = ad::cross_entropy(rows, targets);
                loss.backward();
                losses[i] = loss.item();
                grads[i] = m.params.extract_grads();
                m.params.zero_grad();
            }
        };
        if (nw == 1) {
            run_chunk(workers[0], 0, cfg.batch_size);
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < nw; ++w) {
                int64_t begin = static_cast<int64_t>(cfg.batch_size) * w / nw;
                int64_t end = static_cast<int64_t>(cfg.batch_size) * (w + 1) / nw;
                pool.emplace_back([&, w, begin, end] { run_chunk(workers[w], begin, end); });
            }
            for (auto& t : pool) t.join();
        }

        std::vector<T> total = grads[0];
        for (int i = 1; i < cfg.batch_size; ++i)
            for (size_t j = 0; j < total.size(); ++j) total[j] += grads[i][j];
        const T inv_b = T(1) / static_cast<T>(cfg.batch_size);
        for (auto& g : total) g *= inv_b;
        model.params.load_grads(total);
        adamw_step(model.params, opt, static_cast<T>(cfg.learning_rate));
        model.params.zero_grad();

        T loss_sum = 0;
        for (auto l : losses) loss_sum += l;
        trace.push_back(static_cast<float>(loss_sum * inv_b));
    }
    return trace;
}

// The standard template set covering the benchmark tasks and the caption
// pretraining format. The detail/caption templates read the whole payload
// index; the relation templates read bit 0 ("left of") and bit 1 ("above"),
// so a single payload can answer both spatial questions about one image.
inline std::vector<FormatTemplate> benchmark_templates(int payload_count = 8) {
    std::vector<FormatTemplate> t;
    FormatTemplate detail;
    detail.question = "which glyph?";
    for (int i = 0; i < payload_count; ++i)
        detail.answers_by_payload.push_back(std::string(1, static_cast<char>('0' + i)));
    FormatTemplate rel_h;
    rel_h.question = "is A left of B?";
    FormatTemplate rel_v;
    rel_v.question = "is A above B?";
    FormatTemplate caption;
    caption.question = "caption:";
    for (int i = 0; i < payload_count; ++i) {
        rel_h.answers_by_payload.push_back((i & 1) ? "y" : "n");
        rel_v.answers_by_payload.push_back((i & 2) ? "y" : "n");
        caption.answers_by_payload.push_back("glyph " + std::to_string(i));
    }
    t.push_back(detail);
    t.push_back(rel_h);
    t.push_back(rel_v);
    t.push_back(caption);
    return t;
}

} // namespace vlm
