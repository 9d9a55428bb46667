#pragma once

#include <chrono>
#include <map>
#include <thread>

#include "vlm/checkpoint.hpp"
#include "vlm/cost.hpp"
#include "vlm/eval.hpp"
#include "vlm/pipeline.hpp"

namespace vlm {

enum class Phase { pretrain, finetune };

inline const char* phase_name(Phase p) { return p == Phase::pretrain ? "pretrain" : "finetune"; }

struct TrainConfig {
    Phase phase = Phase::pretrain;
    float learning_rate = 0.0f; // 0 -> phase default (1e-3 pretrain, 2e-5 finetune)
    int steps = 0;
    int batch_size = 16;
    uint64_t seed = 0;
    int threads = 1;
    // AdamW defaults; the paper fixes only the learning rates
    float beta1 = 0.9f, beta2 = 0.999f, adam_eps = 1e-8f, weight_decay = 0.0f;

    float effective_lr() const {
        if (learning_rate > 0.0f) return learning_rate;
        return phase == Phase::pretrain ? 1e-3f : 2e-5f;
    }
};

struct TrainReport {
    std::string phase;
    float lr_used = 0;
    std::vector<float> loss_trace;
    double wall_seconds = 0;
    int64_t tokens_processed = 0;
    double flops_estimate = 0;
    std::string checkpoint_path;
    std::map<std::string, std::pair<uint64_t, uint64_t>> prefix_digests; // before/after
    std::vector<std::string> changed_prefixes;
};

using SampleFn = std::function<SyntheticSample(int64_t)>;

namespace detail_train {

inline const std::vector<std::string>& all_prefixes() {
    static const std::vector<std::string> p = {"vision.", "projector.", "lm.", "lora."};
    return p;
}

// Per-sample loss graph: teacher forcing over question+answer bytes, loss on
// the answer predictions only.
template <class T>
ad::Tensor<T> sample_loss(VlmModel<T>& model, const SyntheticSample& s) {
    std::vector<int> text_ids;
    text_ids.reserve(s.question.size() + s.answer.size());
    for (unsigned char c : s.question) text_ids.push_back(c);
    for (unsigned char c : s.answer) text_ids.push_back(c);
    const int len_q = static_cast<int>(s.question.size());
    const int len_a = static_cast<int>(s.answer.size());
    if (len_q < 1 || len_a < 1) throw ContractError("sample_loss: empty question or answer");

    auto logits = model.forward(s.image, text_ids);
    // row i predicts text token i+1; answer bytes sit at rows len_q-1 .. len_q+len_a-2
    auto answer_logits = ad::slice_rows(logits, len_q - 1, len_q - 1 + len_a);
    std::vector<int> targets(text_ids.begin() + len_q, text_ids.end());
    return language_loss(answer_logits, targets);
}

// One optimizer step over a batch. Per-sample gradients are computed on
// private model clones and reduced in sample-index order, which makes the
// result independent of the thread count.
template <class T>
float train_step(VlmModel<T>& master, std::vector<VlmModel<T>>& workers,
                 const std::vector<SyntheticSample>& batch, AdamWState<T>& opt,
                 const TrainConfig& cfg) {
    const int B = static_cast<int>(batch.size());
    const int nw = static_cast<int>(workers.size());

    // refresh worker parameter values from the master
    for (auto& w : workers) {
        auto& src = master.params;
        for (auto& p : w.params.params()) p.tensor.value_mut() = src.at(p.name).tensor.value();
    }

    std::vector<std::vector<T>> grads(B);
    std::vector<T> losses(B, T(0));
    auto run_chunk = [&](VlmModel<T>& m, int64_t begin, int64_t end) {
        for (int64_t i = begin; i < end; ++i) {
            auto loss = sample_loss(m, batch[i]);
            loss.backward();
            losses[i] = loss.item();
            grads[i] = m.params.extract_grads();
            m.params.zero_grad();
        }
    };
    if (nw == 1) {
        run_chunk(workers[0], 0, B);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nw);
        for (int w = 0; w < nw; ++w) {
            int64_t begin = static_cast<int64_t>(B) * w / nw;
            int64_t end = static_cast<int64_t>(B) * (w + 1) / nw;
            pool.emplace_back([&, w, begin, end] { run_chunk(workers[w], begin, end); });
        }
        for (auto& t : pool) t.join();
    }

    // fixed-order reduction, then scale by 1/B
    std::vector<T> total = grads[0];
    for (int i = 1; i < B; ++i)
        for (size_t j = 0; j < total.size(); ++j) total[j] += grads[i][j];
    const T inv_b = T(1) / static_cast<T>(B);
    for (auto& g : total) g *= inv_b;
    master.params.load_grads(total);
    adamw_step(master.params, opt, static_cast<T>(cfg.effective_lr()), static_cast<T>(cfg.beta1),
               static_cast<T>(cfg.beta2), static_cast<T>(cfg.adam_eps),
               static_cast<T>(cfg.weight_decay));
    master.params.zero_grad();

    T loss_sum = 0;
    for (int i = 0; i < B; ++i) loss_sum += losses[i];
    return static_cast<float>(loss_sum * inv_b);
}

template <class T>
TrainReport run_phase(VlmModel<T>& model, const SampleFn& data, const TrainConfig& cfg,
                      const std::vector<std::string>& trainable_prefixes,
                      const std::string& checkpoint_base) {
    auto t0 = std::chrono::steady_clock::now();
    TrainReport report;
    report.phase = phase_name(cfg.phase);
    report.lr_used = cfg.effective_lr();

    for (const auto& pre : all_prefixes())
        report.prefix_digests[pre] = {model.params.digest(pre), 0};

    model.params.set_trainable_all(false);
    for (const auto& pre : trainable_prefixes) model.params.set_trainable_by_prefix(pre, true);
    model.params.set_requires_grad_from_trainable();

    const int nw = std::max(1, std::min(cfg.threads, std::max(1, cfg.batch_size)));
    std::vector<VlmModel<T>> workers;
    workers.reserve(nw);
    for (int w = 0; w < nw; ++w) workers.push_back(model.clone());

    AdamWState<T> opt;
    CostReport unit;
    bool have_unit_cost = false;
    for (int step = 0; step < cfg.steps; ++step) {
        std::vector<SyntheticSample> batch;
        batch.reserve(cfg.batch_size);
        for (int i = 0; i < cfg.batch_size; ++i)
            batch.push_back(data(static_cast<int64_t>(step) * cfg.batch_size + i));
        if (!have_unit_cost) {
            int text_len = static_cast<int>(batch[0].question.size() + batch[0].answer.size());
            unit = estimate_cost(model.grid, model.enc_cfg, model.dec_cfg, text_len);
            have_unit_cost = true;
        }
        report.loss_trace.push_back(train_step(model, workers, batch, opt, cfg));
        for (const auto& s : batch)
            report.tokens_processed += visual_token_count(model.grid, model.enc_cfg) +
                                       static_cast<int64_t>(s.question.size() + s.answer.size());
    }
    report.flops_estimate = have_unit_cost
                                ? unit.train_total * static_cast<double>(cfg.steps) * cfg.batch_size
                                : 0.0;

    // freeze contract: verified from digests, never trusted from optimizer
    // configuration
    for (const auto& pre : all_prefixes()) {
        uint64_t after = model.params.digest(pre);
        report.prefix_digests[pre].second = after;
        bool changed = after != report.prefix_digests[pre].first;
        if (changed) report.changed_prefixes.push_back(pre);
        bool allowed = false;
        for (const auto& tp : trainable_prefixes) allowed = allowed || tp == pre;
        if (changed && !allowed)
            throw FreezeViolation(std::string(phase_name(cfg.phase)) + " modified frozen prefix '" +
                                  pre + "'");
    }

    if (!checkpoint_base.empty()) {
        if constexpr (std::is_same_v<T, float>) {
            save_checkpoint(model.params, checkpoint_base);
            report.checkpoint_path = checkpoint_base;
        }
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

} // namespace detail_train

// Phase 1: pretrain the projector; vision encoder and language model stay
// frozen (checked bit-exactly via digests).
template <class T>
TrainReport run_phase1(VlmModel<T>& model, const SampleFn& data, const TrainConfig& cfg,
                       const std::string& checkpoint_base = "") {
    if (cfg.phase != Phase::pretrain) throw ContractError("run_phase1 requires phase = pretrain");
    return detail_train::run_phase(model, data, cfg, {"projector."}, checkpoint_base);
}

// Phase 2: finetune vision encoder, projector, and LoRA adapters; the base
// language model weights stay frozen.
template <class T>
TrainReport run_phase2(VlmModel<T>& model, const SampleFn& data, const TrainConfig& cfg,
                       const std::string& checkpoint_base = "") {
    if (cfg.phase != Phase::finetune) throw ContractError("run_phase2 requires phase = finetune");
    if (!model.lm.has_lora())
        throw ContractError("run_phase2: model has no LoRA adapters attached");
    return detail_train::run_phase(model, data, cfg, {"vision.", "projector.", "lora."},
                                   checkpoint_base);
}

} // namespace vlm
