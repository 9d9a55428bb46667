#pragma once

#include <string>

#include "vlm/decoder.hpp"
#include "vlm/image.hpp"

namespace vlm {

// Analytical FLOP accounting per pipeline configuration. Conventions:
//   - dense matmul costs 2*m*n*k; vector adds and norms are ignored
//   - encoder attention is bidirectional: 4*n^2*d score/mix FLOPs per layer
//   - decoder attention is causal and counted at half dense: 2*L^2*d
//   - training cost = 3x forward (forward + backward heuristic)
// FLOPs stand in for the hardware-specific kWh figures; only orderings and
// overhead bands are meaningful.
struct CostReport {
    std::string label;
    GridSpec grid;
    int text_len = 0;
    int64_t visual_tokens = 0;
    double encoder_flops = 0;   // all views, one image
    double projector_flops = 0; // all fused tokens
    double decoder_flops = 0;   // one forward at text_len
    double forward_total = 0;
    double train_total = 0; // 3x forward
    double overhead_vs_baseline = 0;

    static const char* formula_notes();
};

// Decoder sequence length for accounting is visual tokens + text_len.
CostReport estimate_cost(const GridSpec& spec, const EncoderConfig& enc, const DecoderConfig& dec,
                         int text_len);

// a.train_total / b.train_total - 1
double overhead_ratio(const CostReport& a, const CostReport& b);

// Text length used when ranking configs under a finetune-like workload.
constexpr int kFinetuneTextLen = 64;

} // namespace vlm
