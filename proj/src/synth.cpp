#include "vlm/synth.hpp"

#include <cmath>

namespace vlm {

const char* task_name(TaskKind t) {
    switch (t) {
        case TaskKind::detail: return "detail";
        case TaskKind::coherence: return "coherence";
        case TaskKind::pope_style: return "pope-style";
        case TaskKind::caption: return "caption";
    }
    return "?";
}

TaskKind task_from_name(const std::string& name) {
    if (name == "detail") return TaskKind::detail;
    if (name == "coherence") return TaskKind::coherence;
    if (name == "pope-style") return TaskKind::pope_style;
    if (name == "caption") return TaskKind::caption;
    throw ConfigError("unknown task '" + name + "'");
}

namespace {

uint64_t sample_seed(uint64_t seed, int64_t index, const char* tag) {
    uint64_t h = fnv1a64(tag);
    h = fnv1a64(&seed, sizeof(seed), h);
    h = fnv1a64(&index, sizeof(index), h);
    return h;
}

// Smooth low-frequency texture around mid gray. Amplitude and frequency are
// kept small so a glyph/marker patch is salient against it; the texture's
// job is to vary the background per sample, not to hide the content.
RasterImage textured_background(int side, Rng& rng) {
    RasterImage img = RasterImage::zeros(side, side, 3);
    float f1 = static_cast<float>(rng.uniform(0.01, 0.05));
    float f2 = static_cast<float>(rng.uniform(0.01, 0.05));
    float f3 = static_cast<float>(rng.uniform(0.005, 0.03));
    float p1 = static_cast<float>(rng.uniform(0.0, 6.283185));
    float p2 = static_cast<float>(rng.uniform(0.0, 6.283185));
    float p3 = static_cast<float>(rng.uniform(0.0, 6.283185));
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) {
            float v = 0.5f + 0.04f * std::sin(f1 * c + p1) * std::sin(f2 * r + p2) +
                      0.03f * std::sin(f3 * (r + c) + p3);
            for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = v;
        }
    return img;
}

void draw_square(RasterImage& img, int r0, int c0, int side, float value) {
    for (int r = r0; r < r0 + side; ++r)
        for (int c = c0; c < c0 + side; ++c)
            for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = value;
}

// Each glyph is a 4x4 map of 2x2-pixel blocks; every 2x2-block quadrant has
// exactly 2 blocks on, drawn as a horizontal pair (H), vertical pair (V), or
// main diagonal (D). Orientation is a translation-robust cue, so glyph
// identity survives arbitrary placement against the patch grid; parity
// tricks (top vs bottom pair) would not, since those are 1px translates of
// each other.
constexpr int kOrientBlocks[3][2] = {{0, 1}, {0, 2}, {0, 3}}; // H, V, D pairs
constexpr char kGlyphOrients[8][4] = {
    {'H', 'H', 'H', 'H'},
    {'V', 'V', 'V', 'V'},
    {'D', 'D', 'D', 'D'},
    {'H', 'H', 'V', 'V'},
    {'V', 'V', 'H', 'H'},
    {'H', 'V', 'H', 'V'},
    {'V', 'H', 'V', 'H'},
    {'H', 'D', 'D', 'H'},
};

} // namespace

std::array<uint8_t, 64> glyph_bitmap(int glyph_id) {
    if (glyph_id < 0 || glyph_id >= 8)
        throw std::invalid_argument("glyph_bitmap: glyph id " + std::to_string(glyph_id) +
                                    " outside the 8-glyph alphabet");
    std::array<uint8_t, 64> bits{};
    for (int br = 0; br < 4; ++br)
        for (int bc = 0; bc < 4; ++bc) {
            int quadrant = (br / 2) * 2 + (bc / 2);
            int in_quad = (br % 2) * 2 + (bc % 2);
            char orient = kGlyphOrients[glyph_id][quadrant];
            int oi = orient == 'H' ? 0 : orient == 'V' ? 1 : 2;
            bool on = in_quad == kOrientBlocks[oi][0] || in_quad == kOrientBlocks[oi][1];
            if (on)
                for (int r = 0; r < 2; ++r)
                    for (int c = 0; c < 2; ++c) bits[(br * 2 + r) * 8 + (bc * 2 + c)] = 1;
        }
    return bits;
}

SyntheticSample make_detail_sample(const DetailTaskParams& p, uint64_t seed, int64_t index) {
    if (p.n_glyphs < 2 || p.n_glyphs > 8)
        throw std::invalid_argument("detail task: n_glyphs must be in [2, 8]");
    if (p.glyph_side < 8 || p.glyph_side % 8 != 0)
        throw std::invalid_argument("detail task: glyph side must be a positive multiple of 8");
    if (p.glyph_side > p.image_side / 3)
        throw std::invalid_argument("detail task: glyph side " + std::to_string(p.glyph_side) +
                                    " larger than a 3x3-grid tile of a " +
                                    std::to_string(p.image_side) + "px image");

    Rng rng(sample_seed(seed, index, "detail"));
    SyntheticSample s;
    s.task = TaskKind::detail;
    s.image = textured_background(p.image_side, rng);
    s.glyph_id = static_cast<int>(rng.uniform_int(0, p.n_glyphs - 1));
    // uniform over the glyph's own footprint grid: keeps the pattern's 2x2
    // blocks intact under the tile-canvas resize (legible when tiled) and
    // makes the 4x-downsampled baseline view exactly flat gray
    const int cells = p.image_side / p.glyph_side;
    s.glyph_row = p.glyph_side * static_cast<int>(rng.uniform_int(0, cells - 1));
    s.glyph_col = p.glyph_side * static_cast<int>(rng.uniform_int(0, cells - 1));

    auto bits = glyph_bitmap(s.glyph_id);
    const int scale = p.glyph_side / 8;
    for (int r = 0; r < p.glyph_side; ++r)
        for (int c = 0; c < p.glyph_side; ++c) {
            float v = bits[(r / scale) * 8 + (c / scale)] ? 1.0f : 0.0f;
            for (int ch = 0; ch < 3; ++ch) s.image.at(s.glyph_row + r, s.glyph_col + c, ch) = v;
        }

    s.question = "which glyph?";
    s.answer = std::string(1, static_cast<char>('0' + s.glyph_id));
    return s;
}

SyntheticSample make_coherence_sample(const CoherenceTaskParams& p, uint64_t seed, int64_t index) {
    if (p.rows * p.cols < 4)
        throw std::invalid_argument("coherence task: grid must have at least 4 cells");
    Rng rng(sample_seed(seed, index, "coherence"));
    SyntheticSample s;
    s.task = TaskKind::coherence;
    s.grid_rows = p.rows;
    s.grid_cols = p.cols;
    s.image = textured_background(p.image_side, rng);

    s.relation = rng.uniform01() < 0.5 ? 'h' : 'v';
    s.cell_a = static_cast<int>(rng.uniform_int(0, p.rows * p.cols - 1));
    int ar = s.cell_a / p.cols, ac = s.cell_a % p.cols;
    for (;;) {
        s.cell_b = static_cast<int>(rng.uniform_int(0, p.rows * p.cols - 1));
        int br = s.cell_b / p.cols, bc = s.cell_b % p.cols;
        if (s.relation == 'h' ? bc != ac : br != ar) break;
    }

    // place each marker fully inside its cell with a safety margin, so the
    // cell relation survives the canvas resize
    auto place = [&](int cell, int& row, int& col) {
        int cr = cell / p.cols, cc = cell % p.cols;
        int r0 = cr * p.image_side / p.rows, r1 = (cr + 1) * p.image_side / p.rows;
        int c0 = cc * p.image_side / p.cols, c1 = (cc + 1) * p.image_side / p.cols;
        const int margin = 4;
        if (r1 - r0 < p.marker_side + 2 * margin || c1 - c0 < p.marker_side + 2 * margin)
            throw std::invalid_argument("coherence task: marker does not fit inside a grid cell");
        row = static_cast<int>(rng.uniform_int(r0 + margin, r1 - margin - p.marker_side));
        col = static_cast<int>(rng.uniform_int(c0 + margin, c1 - margin - p.marker_side));
    };
    int a_row, a_col, b_row, b_col;
    place(s.cell_a, a_row, a_col);
    place(s.cell_b, b_row, b_col);
    draw_square(s.image, a_row, a_col, p.marker_side, 1.0f); // A: white
    draw_square(s.image, b_row, b_col, p.marker_side, 0.0f); // B: black

    s.question = s.relation == 'h' ? "is A left of B?" : "is A above B?";
    s.answer = answer_from_metadata(s);
    return s;
}

SyntheticSample make_caption_sample(const DetailTaskParams& p, uint64_t seed, int64_t index) {
    SyntheticSample s = make_detail_sample(p, sample_seed(seed, 0, "caption"), index);
    s.task = TaskKind::caption;
    s.question = "caption:";
    s.answer = "glyph " + std::to_string(s.glyph_id);
    return s;
}

std::string answer_from_metadata(const SyntheticSample& s) {
    switch (s.task) {
        case TaskKind::detail:
            return std::string(1, static_cast<char>('0' + s.glyph_id));
        case TaskKind::caption:
            return "glyph " + std::to_string(s.glyph_id);
        case TaskKind::coherence: {
            int ar = s.cell_a / s.grid_cols, ac = s.cell_a % s.grid_cols;
            int br = s.cell_b / s.grid_cols, bc = s.cell_b % s.grid_cols;
            bool yes = s.relation == 'h' ? ac < bc : ar < br;
            return yes ? "y" : "n";
        }
        case TaskKind::pope_style:
            throw ContractError("pope-style samples carry no generator in this artifact");
    }
    throw ContractError("answer_from_metadata: bad task");
}

bool single_tile_decidable(const SyntheticSample& s) {
    switch (s.task) {
        case TaskKind::detail:
        case TaskKind::caption:
            return true; // the glyph and its identity live in one region
        case TaskKind::coherence:
            return false; // markers sit in different cells by construction
        case TaskKind::pope_style:
            return true;
    }
    return true;
}

} // namespace vlm
