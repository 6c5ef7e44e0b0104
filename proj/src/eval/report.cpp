#include "delight/eval/report.hpp"

#include <cmath>

#include "delight/core/errors.hpp"
#include "delight/core/image_io.hpp"

namespace dlt {

Image hstack(const std::vector<Image>& panels) {
    if (panels.empty()) throw DataError("hstack: no panels");
    const int h = panels[0].height();
    int w = 0;
    for (const auto& p : panels) {
        if (p.height() != h || p.channels() != panels[0].channels())
            throw DataError("hstack: panel shapes differ");
        w += p.width();
    }
    Image out(h, w, panels[0].channels());
    int at = 0;
    for (const auto& p : panels) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < p.width(); ++x)
                for (int c = 0; c < p.channels(); ++c) out.at(y, at + x, c) = p.at(y, x, c);
        at += p.width();
    }
    return out;
}

void writeComparisonGrid(const std::string& path, const Image& input, const Image& prediction,
                         const Image& alignedPrediction, const Image& groundTruth) {
    Image diff(groundTruth.height(), groundTruth.width(), groundTruth.channels());
    for (size_t i = 0; i < diff.size(); ++i)
        diff.data()[i] = std::abs(alignedPrediction.data()[i] - groundTruth.data()[i]);
    writePreviewPpm(path, hstack({input, prediction, alignedPrediction, groundTruth, diff}));
}

}  // namespace dlt
