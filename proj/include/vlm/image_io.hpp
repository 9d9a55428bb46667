#pragma once

#include <string>

#include "vlm/image.hpp"

namespace vlm {

// Reads PNG (8-bit gray/RGB/RGBA, non-interlaced) or binary PPM (P6),
// dispatching on the magic bytes. 8-bit channels map to float by v/255.
RasterImage load_image(const std::string& path);

// 8-bit PNG, grayscale or RGB depending on channel count. Values are
// clamped to [0,1] and quantized by round(v*255).
void save_png(const RasterImage& img, const std::string& path);

void save_ppm(const RasterImage& img, const std::string& path);

} // namespace vlm
