#pragma once

#include <array>
#include <string>

#include "vlm/image.hpp"

namespace vlm {

enum class TaskKind { detail, coherence, pope_style, caption };

const char* task_name(TaskKind t);
TaskKind task_from_name(const std::string& name);

// A generated benchmark sample. The answer is always re-derivable from the
// placement metadata, so the generator doubles as its own oracle.
struct SyntheticSample {
    RasterImage image;
    std::string question;
    std::string answer;
    TaskKind task = TaskKind::detail;

    // detail/caption metadata
    int glyph_id = -1;
    int glyph_row = -1, glyph_col = -1; // top-left corner in image coords

    // coherence metadata: cells are row-major indices into the conceptual
    // rows x cols grid of the image (cell boundaries map onto tile
    // boundaries under the canvas resize)
    int grid_rows = 0, grid_cols = 0;
    int cell_a = -1, cell_b = -1;
    char relation = 0; // 'h' = "is A left of B?", 'v' = "is A above B?"
};

struct DetailTaskParams {
    int image_side = 256;
    int glyph_side = 8;
    int n_glyphs = 8;
};

struct CoherenceTaskParams {
    int image_side = 256;
    int rows = 3, cols = 3;
    int marker_side = 24;
};

// The fixed glyph alphabet: 8x8 binary patterns built from 2x2 pixel blocks.
// Every 4x4 quadrant holds exactly half its pixels on, so a 4x downsample
// collapses all glyphs to the same flat gray; a 2x downsample keeps their
// block maps distinct.
std::array<uint8_t, 64> glyph_bitmap(int glyph_id);

// One glyph at a uniform random location over a procedurally textured
// background; question "which glyph?", answer the glyph id digit.
SyntheticSample make_detail_sample(const DetailTaskParams& p, uint64_t seed, int64_t index);

// Two markers (A white, B black) in different grid cells; the question asks
// a cross-cell spatial relation no single tile can decide.
SyntheticSample make_coherence_sample(const CoherenceTaskParams& p, uint64_t seed, int64_t index);

// Caption-style stream for the projector pretraining phase.
SyntheticSample make_caption_sample(const DetailTaskParams& p, uint64_t seed, int64_t index);

// Recompute the answer from placement metadata (oracle path).
std::string answer_from_metadata(const SyntheticSample& s);

// Whether a single tile of the sample's grid suffices to decide the answer;
// structural difficulty check for the two tasks.
bool single_tile_decidable(const SyntheticSample& s);

} // namespace vlm
