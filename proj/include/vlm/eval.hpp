#pragma once

#include <thread>

#include "vlm/metrics.hpp"
#include "vlm/pipeline.hpp"
#include "vlm/synth.hpp"

namespace vlm {

// Greedy-decode every sample's answer and score with exact match; binary
// tasks also get precision/recall/F1 with "y" as the positive class.
// Each worker thread owns a private model clone and writes predictions by
// sample index, so results are identical for any thread count.
template <class T>
EvalResult evaluate_model(VlmModel<T>& model, const std::vector<SyntheticSample>& samples,
                          int threads = 1) {
    if (samples.empty()) throw ContractError("evaluate_model: no samples");
    const TaskKind task = samples.front().task;
    for (const auto& s : samples)
        if (s.task != task) throw ContractError("evaluate_model: samples mix tasks");

    const int64_t n = static_cast<int64_t>(samples.size());
    const int nw = static_cast<int>(std::max<int64_t>(1, std::min<int64_t>(threads, n)));
    std::vector<std::string> predictions(samples.size());

    auto run_chunk = [&](VlmModel<T>& m, int64_t begin, int64_t end) {
        for (int64_t i = begin; i < end; ++i)
            predictions[i] = greedy_decode(m, samples[i].image, samples[i].question,
                                           static_cast<int>(samples[i].answer.size()));
    };
    if (nw == 1) {
        run_chunk(model, 0, n);
    } else {
        std::vector<VlmModel<T>> workers;
        workers.reserve(nw);
        for (int w = 0; w < nw; ++w) workers.push_back(model.clone());
        std::vector<std::thread> pool;
        pool.reserve(nw);
        for (int w = 0; w < nw; ++w) {
            int64_t begin = n * w / nw, end = n * (w + 1) / nw;
            pool.emplace_back([&, w, begin, end] { run_chunk(workers[w], begin, end); });
        }
        for (auto& t : pool) t.join();
    }

    std::vector<std::string> references;
    references.reserve(samples.size());
    for (const auto& s : samples) references.push_back(s.answer);

    EvalResult r;
    r.task = task_name(task);
    r.n_samples = n;
    r.accuracy = exact_match_accuracy(predictions, references);
    if (task == TaskKind::coherence) {
        r.prf = binary_prf(predictions, references);
        r.aggregate_f1 = r.prf->f1;
    }
    return r;
}

} // namespace vlm
