#pragma once

#include <string>

#include "delight/core/image.hpp"

namespace dlt {

// Float image container (.fimg):
//   line 1: "fimg"
//   line 2: "<width> <height> <channels>"
//   then height rows, top to bottom, each row width*channels little-endian
//   float32 values, channel-interleaved.
void writeFimg(const std::string& path, const Image& img);
Image readFimg(const std::string& path);

// 8-bit sRGB preview (binary PPM, P6). Values are clamped to [0,1] after
// the linear-to-sRGB transfer. Single-channel inputs are replicated.
void writePreviewPpm(const std::string& path, const Image& linear);

float linearToSrgb(float v);
float srgbToLinear(float v);

}  // namespace dlt
