#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "delight/core/errors.hpp"

namespace dlt {

// Row-major, channel-interleaved float image in linear RGB (or single
// channel for masks). All pipeline images live in linear space; sRGB only
// appears in 8-bit previews.
class Image {
  public:
    Image() = default;
    Image(int height, int width, int channels, float fill = 0.0f)
        : h_(height), w_(width), c_(channels), data_(size_t(height) * width * channels, fill) {}

    int height() const { return h_; }
    int width() const { return w_; }
    int channels() const { return c_; }
    bool empty() const { return data_.empty(); }
    size_t size() const { return data_.size(); }

    float& at(int y, int x, int ch = 0) { return data_[(size_t(y) * w_ + x) * c_ + ch]; }
    float at(int y, int x, int ch = 0) const { return data_[(size_t(y) * w_ + x) * c_ + ch]; }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }

    bool sameShape(const Image& o) const { return h_ == o.h_ && w_ == o.w_ && c_ == o.c_; }

    void fill(float v) { std::fill(data_.begin(), data_.end(), v); }

    // Bilinear sample at continuous coordinates (x, y) in pixel units,
    // clamped at the border.
    float sample(float y, float x, int ch) const {
        const float xc = std::clamp(x, 0.0f, float(w_ - 1));
        const float yc = std::clamp(y, 0.0f, float(h_ - 1));
        const int x0 = int(xc);
        const int y0 = int(yc);
        const int x1 = std::min(x0 + 1, w_ - 1);
        const int y1 = std::min(y0 + 1, h_ - 1);
        const float fx = xc - x0;
        const float fy = yc - y0;
        return (1 - fy) * ((1 - fx) * at(y0, x0, ch) + fx * at(y0, x1, ch)) +
               fy * ((1 - fx) * at(y1, x0, ch) + fx * at(y1, x1, ch));
    }

  private:
    int h_ = 0, w_ = 0, c_ = 0;
    std::vector<float> data_;
};

Image gaussianBlur(const Image& src, double sigma);
Image resizeBilinear(const Image& src, int newH, int newW);
Image downsample2x(const Image& src);

// Variance of the 4-neighbor Laplacian response; the sharpness statistic
// used for frame selection.
double laplacianVariance(const Image& gray);

Image toGray(const Image& rgb);

inline double maskedMeanAbsDiff(const Image& a, const Image& b, const Image& mask) {
    if (!a.sameShape(b)) throw DataError("maskedMeanAbsDiff: shape mismatch");
    double acc = 0.0;
    long n = 0;
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) {
            if (mask.at(y, x) <= 0.5f) continue;
            for (int ch = 0; ch < a.channels(); ++ch) {
                acc += std::abs(double(a.at(y, x, ch)) - double(b.at(y, x, ch)));
                ++n;
            }
        }
    if (n == 0) throw DataError("maskedMeanAbsDiff: empty mask");
    return acc / double(n);
}

inline double maskedMse(const Image& a, const Image& b, const Image& mask) {
    if (!a.sameShape(b)) throw DataError("maskedMse: shape mismatch");
    double acc = 0.0;
    long n = 0;
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) {
            if (mask.at(y, x) <= 0.5f) continue;
            for (int ch = 0; ch < a.channels(); ++ch) {
                const double d = double(a.at(y, x, ch)) - double(b.at(y, x, ch));
                acc += d * d;
                ++n;
            }
        }
    if (n == 0) throw DataError("maskedMse: empty mask");
    return acc / double(n);
}

}  // namespace dlt
