#pragma once

#include <string>
#include <vector>

#include "delight/core/image.hpp"

namespace dlt {

// Horizontal strip of panels written as an 8-bit sRGB preview (PPM):
// input | prediction | aligned prediction | ground truth | abs difference.
// Qualitative panels show the unaligned prediction; only the dedicated
// aligned panel applies the fitted color transform.
void writeComparisonGrid(const std::string& path, const Image& input, const Image& prediction,
                         const Image& alignedPrediction, const Image& groundTruth);

Image hstack(const std::vector<Image>& panels);

}  // namespace dlt
