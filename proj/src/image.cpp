#include "vlm/image.hpp"

#include <algorithm>
#include <cmath>

namespace vlm {

RasterImage bilinear_resize(const RasterImage& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1)
        throw std::invalid_argument("bilinear_resize: zero-sized target " + std::to_string(out_h) +
                                    "x" + std::to_string(out_w));
    if (!img.valid()) throw std::invalid_argument("bilinear_resize: invalid input image");
    if (out_h == img.height && out_w == img.width) return img; // identity, bit-exact

    RasterImage out = RasterImage::zeros(out_h, out_w, img.channels);
    const float sy = static_cast<float>(img.height) / out_h;
    const float sx = static_cast<float>(img.width) / out_w;
    const int C = img.channels;
    for (int i = 0; i < out_h; ++i) {
        float v = (i + 0.5f) * sy - 0.5f;
        v = std::clamp(v, 0.0f, static_cast<float>(img.height - 1));
        int r0 = static_cast<int>(v);
        int r1 = std::min(r0 + 1, img.height - 1);
        float fy = v - r0;
        for (int j = 0; j < out_w; ++j) {
            float u = (j + 0.5f) * sx - 0.5f;
            u = std::clamp(u, 0.0f, static_cast<float>(img.width - 1));
            int c0 = static_cast<int>(u);
            int c1 = std::min(c0 + 1, img.width - 1);
            float fx = u - c0;
            for (int ch = 0; ch < C; ++ch) {
                float top = img.at(r0, c0, ch) * (1.0f - fx) + img.at(r0, c1, ch) * fx;
                float bot = img.at(r1, c0, ch) * (1.0f - fx) + img.at(r1, c1, ch) * fx;
                out.at(i, j, ch) = top * (1.0f - fy) + bot * fy;
            }
        }
    }
    return out;
}

TileSet split_into_tiles(const RasterImage& img, const GridSpec& spec) {
    if (spec.rows < 1 || spec.cols < 1 || spec.view_side < 1)
        throw std::invalid_argument("split_into_tiles: invalid grid spec " + std::to_string(spec.rows) +
                                    "x" + std::to_string(spec.cols) + " S=" + std::to_string(spec.view_side));
    const int S = spec.view_side;
    RasterImage canvas = bilinear_resize(img, spec.rows * S, spec.cols * S);

    TileSet out;
    out.tiles.reserve(static_cast<size_t>(spec.rows) * spec.cols);
    const int C = img.channels;
    for (int tr = 0; tr < spec.rows; ++tr) {
        for (int tc = 0; tc < spec.cols; ++tc) {
            RasterImage tile = RasterImage::zeros(S, S, C);
            for (int r = 0; r < S; ++r) {
                const float* src = &canvas.data[((static_cast<size_t>(tr) * S + r) * canvas.width +
                                                 static_cast<size_t>(tc) * S) * C];
                std::copy(src, src + static_cast<size_t>(S) * C,
                          tile.data.begin() + static_cast<size_t>(r) * S * C);
            }
            out.tiles.push_back(std::move(tile));
        }
    }
    if (spec.include_global) out.global_view = bilinear_resize(img, S, S);
    return out;
}

RasterImage stitch_tiles(const TileSet& tiles, const GridSpec& spec) {
    const int S = spec.view_side;
    if (static_cast<int>(tiles.tiles.size()) != spec.rows * spec.cols)
        throw ContractError("stitch_tiles: " + std::to_string(tiles.tiles.size()) + " tiles for a " +
                            std::to_string(spec.rows) + "x" + std::to_string(spec.cols) + " grid");
    const int C = tiles.tiles.front().channels;
    RasterImage canvas = RasterImage::zeros(spec.rows * S, spec.cols * S, C);
    for (int tr = 0; tr < spec.rows; ++tr) {
        for (int tc = 0; tc < spec.cols; ++tc) {
            const RasterImage& tile = tiles.tiles[static_cast<size_t>(tr) * spec.cols + tc];
            for (int r = 0; r < S; ++r) {
                const float* src = &tile.data[static_cast<size_t>(r) * S * C];
                std::copy(src, src + static_cast<size_t>(S) * C,
                          canvas.data.begin() +
                              ((static_cast<size_t>(tr) * S + r) * canvas.width +
                               static_cast<size_t>(tc) * S) * C);
            }
        }
    }
    return canvas;
}

} // namespace vlm
