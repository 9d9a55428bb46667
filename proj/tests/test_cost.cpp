#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vlm/cost.hpp"

using namespace vlm;

namespace {

EncoderConfig toy_enc() {
    EncoderConfig e;
    e.patch_size = 8;
    e.embed_dim = 64;
    e.depth = 4;
    e.heads = 4;
    e.view_side = 64;
    return e;
}

DecoderConfig toy_dec() {
    DecoderConfig d;
    d.vocab_size = 256;
    d.d_lm = 128;
    d.depth = 4;
    d.heads = 4;
    d.max_seq = 2048;
    return d;
}

GridSpec grid(int r, int c, bool g) { return GridSpec{r, c, g, 64}; }

} // namespace

TEST_CASE("adding the global view to 2x2 multiplies encoder flops by exactly 1.25") {
    auto a = estimate_cost(grid(2, 2, false), toy_enc(), toy_dec(), 64);
    auto b = estimate_cost(grid(2, 2, true), toy_enc(), toy_dec(), 64);
    CHECK(b.encoder_flops / a.encoder_flops == doctest::Approx(1.25).epsilon(1e-12));
}

TEST_CASE("1x1 vs 3x3+global encoder flops ratio is exactly 10") {
    auto a = estimate_cost(grid(1, 1, false), toy_enc(), toy_dec(), 64);
    auto b = estimate_cost(grid(3, 3, true), toy_enc(), toy_dec(), 64);
    CHECK(b.encoder_flops / a.encoder_flops == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("finetune-workload totals reproduce the pairwise orderings") {
    auto c11 = estimate_cost(grid(1, 1, false), toy_enc(), toy_dec(), kFinetuneTextLen);
    auto c22 = estimate_cost(grid(2, 2, false), toy_enc(), toy_dec(), kFinetuneTextLen);
    auto c22g = estimate_cost(grid(2, 2, true), toy_enc(), toy_dec(), kFinetuneTextLen);
    auto c33 = estimate_cost(grid(3, 3, false), toy_enc(), toy_dec(), kFinetuneTextLen);
    auto c33g = estimate_cost(grid(3, 3, true), toy_enc(), toy_dec(), kFinetuneTextLen);

    // global > no-global at fixed grid
    CHECK(c22g.train_total > c22.train_total);
    CHECK(c33g.train_total > c33.train_total);
    // larger grid > smaller grid at fixed flag
    CHECK(c33.train_total > c22.train_total);
    CHECK(c33g.train_total > c22g.train_total);
    // every tiled config > baseline
    for (const auto* c : {&c22, &c22g, &c33, &c33g}) CHECK(c->train_total > c11.train_total);
}

TEST_CASE("identical configs have zero overhead") {
    auto a = estimate_cost(grid(2, 2, true), toy_enc(), toy_dec(), 32);
    CHECK(overhead_ratio(a, a) == doctest::Approx(0.0));
}

TEST_CASE("measured finetune energy overheads derived from the published table") {
    // 2x2: 59.08/53.70 - 1, 3x3: 63.40/56.72 - 1
    CHECK(59.08 / 53.70 - 1.0 == doctest::Approx(0.1002).epsilon(1e-3));
    CHECK(63.40 / 56.72 - 1.0 == doctest::Approx(0.1178).epsilon(1e-3));
}

TEST_CASE("predicted global-view overhead sits in (0, 0.26] at fixed grid") {
    for (int g = 2; g <= 4; ++g) {
        auto base = estimate_cost(grid(g, g, false), toy_enc(), toy_dec(), kFinetuneTextLen);
        auto with = estimate_cost(grid(g, g, true), toy_enc(), toy_dec(), kFinetuneTextLen);
        double oh = overhead_ratio(with, base);
        CHECK(oh > 0.0);
        CHECK(oh <= 0.26);
    }
}

TEST_CASE("doubling text length strictly increases the decoder share") {
    auto a = estimate_cost(grid(2, 2, true), toy_enc(), toy_dec(), 64);
    auto b = estimate_cost(grid(2, 2, true), toy_enc(), toy_dec(), 128);
    double share_a = a.decoder_flops / a.forward_total;
    double share_b = b.decoder_flops / b.forward_total;
    CHECK(share_b > share_a);
}

TEST_CASE("total cost is strictly monotone in view count and text length") {
    double prev = 0;
    for (auto [r, c, g] : std::vector<std::tuple<int, int, bool>>{
             {1, 1, false}, {1, 1, true}, {2, 2, false}, {2, 2, true}, {3, 3, false}, {3, 3, true},
             {4, 4, false}, {4, 4, true}}) {
        auto rep = estimate_cost(grid(r, c, g), toy_enc(), toy_dec(), 48);
        CHECK(rep.train_total > prev);
        prev = rep.train_total;
    }
    prev = 0;
    for (int t : {8, 16, 32, 64, 128, 512}) {
        auto rep = estimate_cost(grid(2, 2, false), toy_enc(), toy_dec(), t);
        CHECK(rep.train_total > prev);
        prev = rep.train_total;
    }
}

TEST_CASE("labels and token counts are recorded") {
    auto r = estimate_cost(grid(3, 3, true), toy_enc(), toy_dec(), 10);
    CHECK(r.label == "3x3+g");
    CHECK(r.visual_tokens == 640);
    CHECK(r.forward_total > 0);
    CHECK(r.train_total == doctest::Approx(3.0 * r.forward_total));
}
