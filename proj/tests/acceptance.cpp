// Acceptance suite. Runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion; exits nonzero if any fail.
//
// Heavy criteria (7, 8) train real models; expect tens of minutes total on a
// 2-core machine. ACCEPT_FAST=1 skips those two (for quick iteration only —
// the shipped gate runs everything).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>

#include "vlm/eval.hpp"
#include "vlm/train.hpp"
#include "vlm/warmup.hpp"

using namespace vlm;
using ad::Tensor;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

int g_failures = 0;

void run_criterion(int id, const char* title, const std::function<Outcome()>& fn) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = fn();
    } catch (const std::exception& e) {
        out = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %2d: %s — %s (%.1fs)\n", out.pass ? "PASS" : "FAIL", id, title,
                out.detail.c_str(), secs);
    std::fflush(stdout);
    if (!out.pass) ++g_failures;
}

RasterImage random_image(Rng& rng, int h, int w) {
    RasterImage img = RasterImage::zeros(h, w, 3);
    for (auto& v : img.data) v = static_cast<float>(rng.uniform01());
    return img;
}

Tensor<double> randn_d(Rng& rng, std::vector<int> shape) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    return Tensor<double>(std::move(shape), std::move(v));
}

const std::vector<GridSpec>& five_configs(int side) {
    static std::vector<GridSpec> g;
    g = {GridSpec{1, 1, false, side}, GridSpec{2, 2, false, side}, GridSpec{2, 2, true, side},
         GridSpec{3, 3, false, side}, GridSpec{3, 3, true, side}};
    return g;
}

// ----------------------------- criteria 1-6, 9-11 -----------------------------

Outcome partition_reassembly() {
    Rng rng(1001);
    int images = 0;
    for (int trial = 0; trial < 200; ++trial) {
        int h = static_cast<int>(rng.uniform_int(8, 220));
        int w = static_cast<int>(rng.uniform_int(8, 220));
        RasterImage img = random_image(rng, h, w);
        for (const auto& spec : five_configs(32)) {
            TileSet tiles = split_into_tiles(img, spec);
            RasterImage canvas =
                bilinear_resize(img, spec.rows * spec.view_side, spec.cols * spec.view_side);
            if (stitch_tiles(tiles, spec).data != canvas.data)
                return {false, "stitch mismatch at image " + std::to_string(trial)};
            if (spec.include_global) {
                if (!tiles.global_view ||
                    tiles.global_view->data !=
                        bilinear_resize(img, spec.view_side, spec.view_side).data)
                    return {false, "global view mismatch at image " + std::to_string(trial)};
            }
        }
        ++images;
    }
    return {true, "200 images x 5 configs stitched bit-exactly"};
}

Outcome token_count_law() {
    Rng rng(1002);
    int combos = 0;
    for (int S : {8, 16, 32}) {
        for (int p : {4, 8}) {
            if (S % p != 0) continue;
            for (GridSpec spec : {GridSpec{1, 1, false, S}, GridSpec{2, 2, true, S},
                                  GridSpec{3, 3, false, S}, GridSpec{2, 3, true, S},
                                  GridSpec{3, 1, false, S}}) {
                EncoderConfig cfg;
                cfg.patch_size = p;
                cfg.embed_dim = 8;
                cfg.depth = 1;
                cfg.heads = 2;
                cfg.view_side = S;
                Rng init_rng(rng.next_u64());
                auto params = EncoderParams<float>::init(cfg, 3, init_rng);
                RasterImage img = random_image(rng, 50, 70);
                TileSet tiles = split_into_tiles(img, spec);
                std::vector<TokenSequence<float>> seqs;
                for (size_t t = 0; t < tiles.tiles.size(); ++t)
                    seqs.push_back(encode_view(
                        normalize_pixels<float>(tiles.tiles[t], {0.5f, 0.5f, 0.5f},
                                                {0.5f, 0.5f, 0.5f}),
                        cfg, params, Provenance::tile(static_cast<int>(t))));
                std::optional<TokenSequence<float>> global;
                if (tiles.global_view)
                    global = encode_view(normalize_pixels<float>(*tiles.global_view,
                                                                  {0.5f, 0.5f, 0.5f},
                                                                  {0.5f, 0.5f, 0.5f}),
                                         cfg, params, Provenance::global());
                auto fused = fuse(seqs, global);
                int64_t expect = visual_token_count(spec, cfg);
                if (fused.count() != expect)
                    return {false, "fused " + std::to_string(fused.count()) + " != " +
                                       std::to_string(expect)};
                ++combos;
            }
        }
    }
    return {true, std::to_string(combos) + " (grid, S, p) combos fused to the closed form"};
}

Outcome tile_locality() {
    Rng rng(1003);
    for (int trial = 0; trial < 50; ++trial) {
        int rows = static_cast<int>(rng.uniform_int(1, 3));
        int cols = static_cast<int>(rng.uniform_int(1, 3));
        int S = 8;
        GridSpec spec{rows, cols, false, S};
        EncoderConfig cfg;
        cfg.patch_size = 4;
        cfg.embed_dim = 8;
        cfg.depth = 1;
        cfg.heads = 2;
        cfg.view_side = S;
        Rng init_rng(rng.next_u64());
        auto params = EncoderParams<float>::init(cfg, 3, init_rng);
        RasterImage img = random_image(rng, rows * S, cols * S); // identity canvas

        int t = static_cast<int>(rng.uniform_int(0, rows * cols - 1));
        RasterImage perturbed = img;
        int pr = (t / cols) * S + static_cast<int>(rng.uniform_int(0, S - 1));
        int pc = (t % cols) * S + static_cast<int>(rng.uniform_int(0, S - 1));
        for (int ch = 0; ch < 3; ++ch) perturbed.at(pr, pc, ch) = 1.0f - perturbed.at(pr, pc, ch);

        auto fused_of = [&](const RasterImage& im) {
            TileSet tiles = split_into_tiles(im, spec);
            std::vector<TokenSequence<float>> seqs;
            for (size_t i = 0; i < tiles.tiles.size(); ++i)
                seqs.push_back(encode_view(
                    normalize_pixels<float>(tiles.tiles[i], {0.5f, 0.5f, 0.5f}, {0.5f, 0.5f, 0.5f}),
                    cfg, params, Provenance::tile(static_cast<int>(i))));
            return fuse<float>(seqs, std::nullopt);
        };
        auto a = fused_of(img);
        auto b = fused_of(perturbed);
        const int d = cfg.embed_dim;
        bool target_changed = false;
        for (int i = 0; i < a.count(); ++i) {
            bool same = std::memcmp(a.tokens.value().data() + static_cast<size_t>(i) * d,
                                    b.tokens.value().data() + static_cast<size_t>(i) * d,
                                    sizeof(float) * d) == 0;
            if (a.provenance[i] == Provenance::tile(t)) {
                target_changed |= !same;
            } else if (!same) {
                return {false, "trial " + std::to_string(trial) + ": token of tile " +
                                   std::to_string(a.provenance[i].tile_index) +
                                   " changed when tile " + std::to_string(t) + " was perturbed"};
            }
        }
        if (!target_changed)
            return {false, "trial " + std::to_string(trial) + ": perturbation had no effect"};
    }
    return {true, "50 trials: only the perturbed tile's tokens changed (exact)"};
}

Outcome gradient_correctness() {
    // (a) end-to-end double-precision check over every parameter of a
    // miniature pipeline (2 encoder layers, 2 decoder layers)
    GridSpec grid{2, 2, true, 4};
    EncoderConfig enc;
    enc.patch_size = 2;
    enc.embed_dim = 4;
    enc.depth = 2;
    enc.heads = 2;
    enc.view_side = 4;
    DecoderConfig dec;
    dec.vocab_size = 16;
    dec.d_lm = 4;
    dec.depth = 2;
    dec.heads = 2;
    dec.max_seq = 32;
    auto model = build_pipeline<double>(grid, enc, dec, 4242);
    Rng rng(1004);
    RasterImage img = random_image(rng, 8, 8);
    std::vector<int> ids = {3, 7, 1};
    std::vector<int> targets = {7, 1, 2};
    model.params.set_trainable_all(true);
    model.params.set_requires_grad_from_trainable();
    auto f = [&](const Tensor<double>&) { return language_loss(model.forward(img, ids), targets); };
    double worst_e2e = 0;
    for (auto& p : model.params.params())
        worst_e2e = std::max(worst_e2e, gradient_check<double>(f, p.tensor, 2e-6));
    if (worst_e2e > 1e-5)
        return {false, "end-to-end max relative error " + std::to_string(worst_e2e)};

    // (b) randomized per-op checks
    int cases = 0;
    double worst_op = 0;
    auto check = [&](const std::function<Tensor<double>(const Tensor<double>&)>& fn,
                     Tensor<double> x) {
        worst_op = std::max(worst_op, gradient_check<double>(fn, std::move(x), 1e-5));
        ++cases;
    };
    for (int trial = 0; trial < 10; ++trial) {
        int m = static_cast<int>(rng.uniform_int(1, 4));
        int k = static_cast<int>(rng.uniform_int(1, 4));
        int n = static_cast<int>(rng.uniform_int(1, 4));
        auto B = randn_d(rng, {k, n});
        auto Bt = randn_d(rng, {n, k});
        auto C = randn_d(rng, {m, k});
        check([&](const Tensor<double>& t) { return ad::sum(ad::matmul(t, B)); }, randn_d(rng, {m, k}));
        check([&](const Tensor<double>& t) { return ad::sum(ad::matmul(C, t)); }, randn_d(rng, {k, n}));
        check([&](const Tensor<double>& t) { return ad::sum(ad::matmul_nt(t, Bt)); },
              randn_d(rng, {m, k}));
        check([&](const Tensor<double>& t) { return ad::sum(ad::mul(t, t)); }, randn_d(rng, {m, n}));
        check([&](const Tensor<double>& t) { return ad::sum(ad::add(ad::transpose(t), Bt)); },
              randn_d(rng, {k, n}));
        check([&](const Tensor<double>& t) { return ad::sum(ad::gelu(t)); }, randn_d(rng, {m, k}));
        check([&](const Tensor<double>& t) {
            return ad::sum(ad::mul(ad::softmax(t, 1), ad::reshape(C, {m, k})));
        },
              randn_d(rng, {m, k}));
        check([&](const Tensor<double>& t) { return ad::sum(ad::concat<double>({t, C}, 0)); },
              randn_d(rng, {2, k}));
        check([&](const Tensor<double>& t) { return ad::sum(ad::slice_rows(t, 0, 1)); },
              randn_d(rng, {m + 1, k}));
        check([&](const Tensor<double>& t) { return ad::sum(ad::slice_cols(t, 1, k + 1)); },
              randn_d(rng, {m, k + 1}));
        int nf = n < 3 ? n + 2 : n; // sub-3-wide layer norm saturates to a sign pattern
        auto gain = randn_d(rng, {nf});
        auto bias = randn_d(rng, {nf});
        auto x_fixed = randn_d(rng, {m, nf});
        check([&](const Tensor<double>& t) { return ad::sum(ad::layer_norm(t, gain, bias, 1e-5)); },
              randn_d(rng, {m, nf}));
        check([&](const Tensor<double>& t) { return ad::sum(ad::layer_norm(x_fixed, t, bias, 1e-5)); },
              randn_d(rng, {nf}));
        check([&](const Tensor<double>& t) { return ad::sum(ad::layer_norm(x_fixed, gain, t, 1e-5)); },
              randn_d(rng, {nf}));
        check([&](const Tensor<double>& t) { return ad::sum(ad::add_rowvec(x_fixed, t)); },
              randn_d(rng, {nf}));
        check([&](const Tensor<double>& t) {
            std::vector<int> tid = {0};
            return ad::cross_entropy(t, tid);
        },
              randn_d(rng, {1, n + 1}));
        check([&](const Tensor<double>& t) { return ad::sum(ad::embedding(t, {0, m})); },
              randn_d(rng, {m + 1, k}));
    }
    if (cases < 100 || worst_op > 1e-5)
        return {false, std::to_string(cases) + " op checks, worst " + std::to_string(worst_op)};
    char buf[160];
    std::snprintf(buf, sizeof(buf), "end-to-end worst %.2e over %zu params; %d op checks worst %.2e",
                  worst_e2e, model.params.size(), cases, worst_op);
    return {true, buf};
}

// shared micro setup for criteria 5 and 11
VlmModel<float> micro_model(uint64_t seed) {
    GridSpec grid{2, 2, false, 16};
    EncoderConfig enc;
    enc.patch_size = 8;
    enc.embed_dim = 16;
    enc.depth = 1;
    enc.heads = 2;
    enc.view_side = 16;
    DecoderConfig dec;
    dec.vocab_size = 256;
    dec.d_lm = 32;
    dec.depth = 2;
    dec.heads = 2;
    dec.max_seq = 96;
    return build_pipeline<float>(grid, enc, dec, seed);
}

SampleFn micro_captions(uint64_t seed) {
    DetailTaskParams p;
    p.image_side = 64;
    return [p, seed](int64_t i) { return make_caption_sample(p, seed, i); };
}

SampleFn micro_details(uint64_t seed) {
    DetailTaskParams p;
    p.image_side = 64;
    return [p, seed](int64_t i) { return make_detail_sample(p, seed, i); };
}

Outcome freeze_contracts() {
    auto model = micro_model(5001);
    uint64_t vision0 = model.params.digest("vision.");
    uint64_t lm0 = model.params.digest("lm.");

    TrainConfig p1;
    p1.phase = Phase::pretrain;
    p1.steps = 6;
    p1.batch_size = 4;
    p1.threads = 2;
    run_phase1(model, micro_captions(5002), p1);
    if (model.params.digest("vision.") != vision0) return {false, "phase 1 moved vision.*"};
    if (model.params.digest("lm.") != lm0) return {false, "phase 1 moved lm.*"};

    uint64_t vision1 = model.params.digest("vision.");
    uint64_t proj1 = model.params.digest("projector.");
    uint64_t lora1 = model.params.digest("lora.");
    TrainConfig p2;
    p2.phase = Phase::finetune;
    p2.steps = 6;
    p2.batch_size = 4;
    p2.threads = 2;
    p2.learning_rate = 1e-3f;
    run_phase2(model, micro_details(5003), p2);
    if (model.params.digest("lm.") != lm0) return {false, "phase 2 moved lm.*"};
    if (model.params.digest("vision.") == vision1) return {false, "phase 2 left vision.* unchanged"};
    if (model.params.digest("projector.") == proj1)
        return {false, "phase 2 left projector.* unchanged"};
    if (model.params.digest("lora.") == lora1) return {false, "phase 2 left lora.* unchanged"};
    return {true, "phase 1 froze vision./lm.; phase 2 froze lm. and moved the rest (bit-exact)"};
}

Outcome lora_zero_init() {
    Rng rng(1006);
    DecoderConfig cfg;
    cfg.vocab_size = 64;
    cfg.d_lm = 16;
    cfg.depth = 2;
    cfg.heads = 2;
    cfg.max_seq = 64;
    for (int trial = 0; trial < 20; ++trial) {
        Rng init_rng(rng.next_u64());
        auto base = DecoderParams<float>::init(cfg, init_rng);
        auto adapted = base;
        Rng lora_rng(rng.next_u64());
        adapted.attach_lora(4, 8.0f, lora_rng);
        int n_v = static_cast<int>(rng.uniform_int(1, 8));
        std::vector<float> vv(static_cast<size_t>(n_v) * cfg.d_lm);
        for (auto& x : vv) x = static_cast<float>(rng.normal());
        TokenSequence<float> vis;
        vis.tokens = Tensor<float>({n_v, cfg.d_lm}, vv);
        vis.provenance.assign(n_v, Provenance::tile(0));
        std::vector<int> ids;
        for (int i = 0, n_t = static_cast<int>(rng.uniform_int(1, 6)); i < n_t; ++i)
            ids.push_back(static_cast<int>(rng.uniform_int(0, cfg.vocab_size - 1)));
        auto la = decode_forward(vis, ids, cfg, base);
        auto lb = decode_forward(vis, ids, cfg, adapted);
        if (std::memcmp(la.value().data(), lb.value().data(),
                        la.value().size() * sizeof(float)) != 0)
            return {false, "trial " + std::to_string(trial) + ": logits differ"};
    }
    return {true, "20 random inputs: adapter-attached logits bit-identical to base"};
}

// ----------------------------- experiments (criteria 7, 8) -----------------------------

struct ExperimentScale {
    EncoderConfig enc;
    DecoderConfig dec;
    int warmup_steps = 2000; // decoder format/copy pretraining (backbone stand-in)
    int phase1_steps = 100;
    int phase2_steps = 3000;
    int batch = 16;
    float phase1_lr = 1e-3f; // paper's pretrain default
    float phase2_lr = 1e-3f; // overridden for the toy scale; logged in reports
    int threads = 2;
    int n_train = 4000;
    int n_test = 1000;
};

ExperimentScale experiment_scale() {
    ExperimentScale s;
    s.enc.patch_size = 16;
    s.enc.embed_dim = 48;
    s.enc.depth = 2;
    s.enc.heads = 2;
    s.enc.mlp_ratio = 2.0f;
    s.enc.view_side = 64;
    s.dec.vocab_size = 256;
    s.dec.d_lm = 64;
    s.dec.depth = 1;
    s.dec.heads = 2;
    s.dec.max_seq = 768;
    return s;
}

// Build the arm's model (with its pretrained-backbone warmup), run both
// phases, and return test accuracy.
double train_and_eval(const ExperimentScale& s, GridSpec grid, uint64_t seed, TaskKind task,
                      const SampleFn& caption_data, const SampleFn& task_data,
                      const std::vector<SyntheticSample>& test) {
    auto model = build_pipeline<float>(grid, s.enc, s.dec, sub_seed(seed, "model"));
    WarmupConfig wc;
    wc.steps = s.warmup_steps;
    wc.batch_size = 8;
    wc.threads = s.threads;
    wc.seed = sub_seed(seed, "warmup");
    wc.prefix_tokens = static_cast<int>(visual_token_count(grid, s.enc));
    pretrain_decoder_format(model, benchmark_templates(), wc);

    TrainConfig p1;
    p1.phase = Phase::pretrain;
    p1.steps = s.phase1_steps;
    p1.batch_size = s.batch;
    p1.learning_rate = s.phase1_lr;
    p1.seed = seed;
    p1.threads = s.threads;
    run_phase1(model, caption_data, p1);
    TrainConfig p2;
    p2.phase = Phase::finetune;
    p2.steps = s.phase2_steps;
    p2.batch_size = s.batch;
    p2.learning_rate = s.phase2_lr;
    p2.seed = seed;
    p2.threads = s.threads;
    run_phase2(model, task_data, p2);
    (void)task;
    return evaluate_model(model, test, s.threads).accuracy;
}

double median3(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

Outcome detail_experiment() {
    ExperimentScale s = experiment_scale();
    DetailTaskParams dp; // image 256, glyph 8, 8 glyphs
    const std::vector<uint64_t> seeds = {101, 202, 303};

    std::vector<SyntheticSample> test;
    for (int i = 0; i < s.n_test; ++i) test.push_back(make_detail_sample(dp, 777001, i));

    std::vector<double> base_acc, tiled_acc;
    for (uint64_t seed : seeds) {
        SampleFn captions = [dp, seed, &s](int64_t i) {
            return make_caption_sample(dp, sub_seed(seed, "cap"), i % s.n_train);
        };
        SampleFn details = [dp, seed, &s](int64_t i) {
            return make_detail_sample(dp, sub_seed(seed, "task"), i % s.n_train);
        };
        double a1 = train_and_eval(s, GridSpec{1, 1, false, 64}, seed, TaskKind::detail, captions,
                                   details, test);
        double a2 = train_and_eval(s, GridSpec{2, 2, false, 64}, seed, TaskKind::detail, captions,
                                   details, test);
        std::printf("    seed %llu: 1x1 %.3f, 2x2 %.3f\n", static_cast<unsigned long long>(seed),
                    a1, a2);
        std::fflush(stdout);
        base_acc.push_back(a1);
        tiled_acc.push_back(a2);
    }
    double m1 = median3(base_acc), m2 = median3(tiled_acc);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "median 2x2 %.3f vs 1x1 %.3f (delta %+.1f pp, need >= +10)",
                  m2, m1, 100.0 * (m2 - m1));
    return {m2 - m1 >= 0.10, buf};
}

Outcome coherence_experiment() {
    ExperimentScale s = experiment_scale();
    CoherenceTaskParams cp; // image 256, 3x3 cells, 24px markers
    const std::vector<uint64_t> seeds = {404, 505, 606};

    std::vector<SyntheticSample> test;
    for (int i = 0; i < s.n_test; ++i) test.push_back(make_coherence_sample(cp, 777002, i));
    DetailTaskParams dp;

    std::vector<double> plain_acc, global_acc;
    for (uint64_t seed : seeds) {
        SampleFn captions = [dp, seed, &s](int64_t i) {
            return make_caption_sample(dp, sub_seed(seed, "cap"), i % s.n_train);
        };
        SampleFn tasks = [cp, seed, &s](int64_t i) {
            return make_coherence_sample(cp, sub_seed(seed, "task"), i % s.n_train);
        };
        double a1 = train_and_eval(s, GridSpec{3, 3, false, 64}, seed, TaskKind::coherence,
                                   captions, tasks, test);
        double a2 = train_and_eval(s, GridSpec{3, 3, true, 64}, seed, TaskKind::coherence, captions,
                                   tasks, test);
        std::printf("    seed %llu: 3x3 %.3f, 3x3+g %.3f\n", static_cast<unsigned long long>(seed),
                    a1, a2);
        std::fflush(stdout);
        plain_acc.push_back(a1);
        global_acc.push_back(a2);
    }
    double m1 = median3(plain_acc), m2 = median3(global_acc);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "median 3x3+g %.3f vs 3x3 %.3f (delta %+.1f pp, need >= +10)",
                  m2, m1, 100.0 * (m2 - m1));
    return {m2 - m1 >= 0.10, buf};
}

Outcome cost_orderings() {
    EncoderConfig enc;
    enc.patch_size = 8;
    enc.embed_dim = 64;
    enc.depth = 4;
    enc.heads = 4;
    enc.view_side = 64;
    DecoderConfig dec;
    dec.vocab_size = 256;
    dec.d_lm = 128;
    dec.depth = 4;
    dec.heads = 4;
    dec.max_seq = 2048;

    auto c11 = estimate_cost(GridSpec{1, 1, false, 64}, enc, dec, kFinetuneTextLen);
    auto c22 = estimate_cost(GridSpec{2, 2, false, 64}, enc, dec, kFinetuneTextLen);
    auto c22g = estimate_cost(GridSpec{2, 2, true, 64}, enc, dec, kFinetuneTextLen);
    auto c33 = estimate_cost(GridSpec{3, 3, false, 64}, enc, dec, kFinetuneTextLen);
    auto c33g = estimate_cost(GridSpec{3, 3, true, 64}, enc, dec, kFinetuneTextLen);

    if (!(c22g.train_total > c22.train_total && c33g.train_total > c33.train_total))
        return {false, "global > no-global ordering violated"};
    if (!(c33.train_total > c22.train_total && c33g.train_total > c22g.train_total))
        return {false, "3x3 > 2x2 ordering violated"};
    for (const auto* c : {&c22, &c22g, &c33, &c33g})
        if (!(c->train_total > c11.train_total)) return {false, "tiled <= baseline"};

    double oh22 = overhead_ratio(c22g, c22);
    double oh33 = overhead_ratio(c33g, c33);
    if (!(oh22 > 0.0 && oh22 <= 0.26)) return {false, "2x2 overhead " + std::to_string(oh22)};
    if (!(oh33 > 0.0 && oh33 <= 0.26)) return {false, "3x3 overhead " + std::to_string(oh33)};
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "all pairwise orderings hold; global overhead 2x2 %+.1f%%, 3x3 %+.1f%%", 100 * oh22,
                  100 * oh33);
    return {true, buf};
}

Outcome metric_kernels() {
    Rng rng(1010);
    for (int trial = 0; trial < 1000; ++trial) {
        int n = static_cast<int>(rng.uniform_int(1, 50));
        std::vector<std::string> preds, refs;
        int tp = 0, fp = 0, fn = 0, match = 0;
        for (int i = 0; i < n; ++i) {
            bool p = rng.uniform01() < 0.5, r = rng.uniform01() < 0.5;
            preds.push_back(p ? "yes" : "no");
            refs.push_back(r ? "yes" : "no");
            tp += p && r;
            fp += p && !r;
            fn += !p && r;
            match += p == r;
        }
        double acc = exact_match_accuracy(preds, refs);
        if (std::abs(acc - static_cast<double>(match) / n) > 1e-12)
            return {false, "exact match recount mismatch"};
        auto s = binary_prf(preds, refs);
        double pr = tp + fp ? static_cast<double>(tp) / (tp + fp) : 0.0;
        double rc = tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0;
        double f1 = pr + rc > 0 ? 2 * pr * rc / (pr + rc) : 0.0;
        if (std::abs(s.precision - pr) > 1e-12 || std::abs(s.recall - rc) > 1e-12 ||
            std::abs(s.f1 - f1) > 1e-12)
            return {false, "prf recount mismatch"};
        double x = rng.uniform01();
        if (std::abs(pope_aggregate(x, x, x) - x) > 1e-12)
            return {false, "pope_aggregate(x,x,x) != x"};
    }
    return {true, "1000 random prediction sets match brute-force recounts"};
}

Outcome reproducibility() {
    // (a) identical runs, single-threaded: bit-identical checkpoints/reports
    TrainConfig cfg;
    cfg.phase = Phase::pretrain;
    cfg.steps = 5;
    cfg.batch_size = 4;
    cfg.threads = 1;
    auto m1 = micro_model(7001);
    auto m2 = micro_model(7001);
    auto r1 = run_phase1(m1, micro_captions(7002), cfg);
    auto r2 = run_phase1(m2, micro_captions(7002), cfg);
    if (r1.loss_trace != r2.loss_trace) return {false, "single-thread loss traces differ"};
    if (m1.params.digest() != m2.params.digest()) return {false, "single-thread checkpoints differ"};

    // (b) thread count does not change the result
    TrainConfig cfg2 = cfg;
    cfg2.threads = 2;
    auto m3 = micro_model(7001);
    auto r3 = run_phase1(m3, micro_captions(7002), cfg2);
    if (r1.loss_trace != r3.loss_trace || m1.params.digest() != m3.params.digest())
        return {false, "multi-thread training diverged from single-thread"};

    // (c) fused tokens identical for any thread count
    GridSpec grid{3, 3, true, 16};
    EncoderConfig enc;
    enc.patch_size = 8;
    enc.embed_dim = 16;
    enc.depth = 2;
    enc.heads = 2;
    enc.view_side = 16;
    DecoderConfig dec;
    dec.vocab_size = 64;
    dec.d_lm = 16;
    dec.depth = 1;
    dec.heads = 2;
    dec.max_seq = 256;
    auto model = build_pipeline<float>(grid, enc, dec, 7003);
    Rng rng(7004);
    for (int trial = 0; trial < 10; ++trial) {
        auto img = random_image(rng, 70, 90);
        auto t1 = model.encode_image(img, 1);
        auto t2 = model.encode_image(img, 2);
        auto t4 = model.encode_image(img, 4);
        if (t1.tokens.value() != t2.tokens.value() || t1.tokens.value() != t4.tokens.value())
            return {false, "fused tokens vary with thread count"};
    }
    return {true, "bit-identical traces, checkpoints, and fused tokens across thread counts"};
}

} // namespace

int main() {
    const bool fast = std::getenv("ACCEPT_FAST") != nullptr;
    std::printf("tilevlm acceptance suite\n");

    run_criterion(1, "partition & reassembly", partition_reassembly);
    run_criterion(2, "token-count law", token_count_law);
    run_criterion(3, "tile locality (no cross-tile attention)", tile_locality);
    run_criterion(4, "gradient correctness", gradient_correctness);
    run_criterion(5, "freeze contracts", freeze_contracts);
    run_criterion(6, "LoRA zero-init equivalence", lora_zero_init);
    if (fast) {
        std::printf("[SKIP] criterion  7: detail-recovery experiment (ACCEPT_FAST)\n");
        std::printf("[SKIP] criterion  8: coherence experiment (ACCEPT_FAST)\n");
    } else {
        run_criterion(7, "detail-recovery experiment (2x2 vs 1x1)", detail_experiment);
        run_criterion(8, "coherence experiment (3x3+g vs 3x3)", coherence_experiment);
    }
    run_criterion(9, "cost-model orderings", cost_orderings);
    run_criterion(10, "metric kernels vs brute force", metric_kernels);
    run_criterion(11, "reproducibility", reproducibility);

    if (g_failures == 0) {
        std::printf("all criteria passed%s\n", fast ? " (fast subset)" : "");
        return fast ? 1 : 0; // the fast subset never counts as the full gate
    }
    std::printf("%d criteria FAILED\n", g_failures);
    return 1;
}
