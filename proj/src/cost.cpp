#include "vlm/cost.hpp"

#include "vlm/fusion.hpp"

namespace vlm {

const char* CostReport::formula_notes() {
    return "matmul=2mnk; encoder/view=2*n*pd*d + depth*(8nd^2 + 4n^2 d + 4*n*d*h); "
           "projector=2*n_v*d_h*(d+d_lm); decoder=depth*(24 L d^2 + 2 L^2 d) + 2*n_t*d*V, "
           "L=n_v+n_t; train=3*forward";
}

CostReport estimate_cost(const GridSpec& spec, const EncoderConfig& enc, const DecoderConfig& dec,
                         int text_len) {
    enc.validate();
    dec.validate();
    if (text_len < 0) throw ConfigError("estimate_cost: negative text length");

    CostReport r;
    r.grid = spec;
    r.text_len = text_len;
    r.label = std::to_string(spec.rows) + "x" + std::to_string(spec.cols) +
              (spec.include_global ? "+g" : "");
    r.visual_tokens = visual_token_count(spec, enc);

    const double n = enc.tokens_per_view();
    const double d = enc.embed_dim;
    const double h = enc.mlp_hidden();
    const double pd = static_cast<double>(enc.patch_size) * enc.patch_size * 3;
    const double per_view =
        2.0 * n * pd * d + enc.depth * (8.0 * n * d * d + 4.0 * n * n * d + 4.0 * n * d * h);
    r.encoder_flops = per_view * spec.view_count();

    const double nv = static_cast<double>(r.visual_tokens);
    const double dlm = dec.d_lm;
    r.projector_flops = 2.0 * nv * dlm * (d + dlm); // hidden width = d_lm

    const double L = nv + text_len;
    r.decoder_flops = dec.depth * (24.0 * L * dlm * dlm + 2.0 * L * L * dlm) +
                      2.0 * text_len * dlm * dec.vocab_size;

    r.forward_total = r.encoder_flops + r.projector_flops + r.decoder_flops;
    r.train_total = 3.0 * r.forward_total;
    return r;
}

double overhead_ratio(const CostReport& a, const CostReport& b) {
    return a.train_total / b.train_total - 1.0;
}

} // namespace vlm
