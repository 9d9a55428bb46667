#pragma once

#include <optional>
#include <vector>

#include "vlm/common.hpp"
#include "vlm/tensor.hpp"

namespace vlm {

// Dense float pixel grid, row-major (row, column, channel), intensities in [0,1].
struct RasterImage {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> data;

    static RasterImage zeros(int h, int w, int c) {
        RasterImage img;
        img.height = h;
        img.width = w;
        img.channels = c;
        img.data.assign(static_cast<size_t>(h) * w * c, 0.0f);
        return img;
    }

    float& at(int r, int c, int ch) {
        return data[(static_cast<size_t>(r) * width + c) * channels + ch];
    }
    float at(int r, int c, int ch) const {
        return data[(static_cast<size_t>(r) * width + c) * channels + ch];
    }

    bool valid() const {
        return height >= 1 && width >= 1 && (channels == 1 || channels == 3) &&
               data.size() == static_cast<size_t>(height) * width * channels;
    }
};

// r x c tiling configuration. rows = cols = 1 with include_global = false is
// the single-resized-image baseline.
struct GridSpec {
    int rows = 1;
    int cols = 1;
    bool include_global = false;
    int view_side = 224;

    int view_count() const { return rows * cols + (include_global ? 1 : 0); }
    bool is_baseline() const { return rows == 1 && cols == 1 && !include_global; }
};

// Ordered output of a grid split: tiles in row-major grid order
// (tile index t = row * cols + col), each exactly view_side x view_side.
struct TileSet {
    std::vector<RasterImage> tiles;
    std::optional<RasterImage> global_view;
};

// Half-pixel-center bilinear resampling: u = (i + 0.5) * (in/out) - 0.5,
// clamped. Resizing to the source size is the identity.
RasterImage bilinear_resize(const RasterImage& img, int out_h, int out_w);

// Resize to the (rows*S, cols*S) canvas, then cut disjoint S x S blocks in
// row-major order. The global view, when requested, is resized from the
// original image, not the canvas.
TileSet split_into_tiles(const RasterImage& img, const GridSpec& spec);

// Stitch a tile set back into the canvas it partitions (test oracle and CLI
// inspection helper).
RasterImage stitch_tiles(const TileSet& tiles, const GridSpec& spec);

// Per-channel (pixel - mean) / std into a (channels, S, S) tensor.
template <class T>
ad::Tensor<T> normalize_pixels(const RasterImage& img, const std::vector<float>& mean,
                               const std::vector<float>& std) {
    if (static_cast<int>(mean.size()) != img.channels || static_cast<int>(std.size()) != img.channels)
        throw std::invalid_argument("normalize_pixels: mean/std length must equal channel count " +
                                    std::to_string(img.channels));
    for (float s : std)
        if (s == 0.0f) throw std::invalid_argument("normalize_pixels: zero std component");
    std::vector<T> out(img.data.size());
    const int H = img.height, W = img.width, C = img.channels;
    for (int ch = 0; ch < C; ++ch) {
        const T m = static_cast<T>(mean[ch]);
        const T inv = T(1) / static_cast<T>(std[ch]);
        for (int r = 0; r < H; ++r)
            for (int c = 0; c < W; ++c)
                out[(static_cast<size_t>(ch) * H + r) * W + c] =
                    (static_cast<T>(img.at(r, c, ch)) - m) * inv;
    }
    return ad::Tensor<T>({C, H, W}, std::move(out));
}

} // namespace vlm
