#include "delight/core/image.hpp"

#include <cmath>

namespace dlt {

static std::vector<float> gaussianKernel(double sigma) {
    const int radius = std::max(1, int(std::ceil(3.0 * sigma)));
    std::vector<float> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[i + radius] = float(v);
        sum += v;
    }
    for (auto& v : k) v = float(v / sum);
    return k;
}

Image gaussianBlur(const Image& src, double sigma) {
    if (sigma <= 0.0) return src;
    const auto k = gaussianKernel(sigma);
    const int radius = int(k.size() / 2);
    const int h = src.height(), w = src.width(), c = src.channels();

    Image tmp(h, w, c);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    const int xs = std::clamp(x + i, 0, w - 1);
                    acc += double(k[i + radius]) * src.at(y, xs, ch);
                }
                tmp.at(y, x, ch) = float(acc);
            }

    Image out(h, w, c);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    const int ys = std::clamp(y + i, 0, h - 1);
                    acc += double(k[i + radius]) * tmp.at(ys, x, ch);
                }
                out.at(y, x, ch) = float(acc);
            }
    return out;
}

Image resizeBilinear(const Image& src, int newH, int newW) {
    Image out(newH, newW, src.channels());
    const float sy = float(src.height()) / float(newH);
    const float sx = float(src.width()) / float(newW);
    for (int y = 0; y < newH; ++y)
        for (int x = 0; x < newW; ++x) {
            const float ys = (y + 0.5f) * sy - 0.5f;
            const float xs = (x + 0.5f) * sx - 0.5f;
            for (int ch = 0; ch < src.channels(); ++ch)
                out.at(y, x, ch) = src.sample(ys, xs, ch);
        }
    return out;
}

Image downsample2x(const Image& src) {
    const int h = std::max(1, src.height() / 2);
    const int w = std::max(1, src.width() / 2);
    Image out(h, w, src.channels());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < src.channels(); ++ch) {
                const int y0 = 2 * y, x0 = 2 * x;
                const int y1 = std::min(y0 + 1, src.height() - 1);
                const int x1 = std::min(x0 + 1, src.width() - 1);
                out.at(y, x, ch) = 0.25f * (src.at(y0, x0, ch) + src.at(y0, x1, ch) +
                                            src.at(y1, x0, ch) + src.at(y1, x1, ch));
            }
    return out;
}

Image toGray(const Image& rgb) {
    if (rgb.channels() == 1) return rgb;
    Image out(rgb.height(), rgb.width(), 1);
    for (int y = 0; y < rgb.height(); ++y)
        for (int x = 0; x < rgb.width(); ++x)
            out.at(y, x) = 0.2126f * rgb.at(y, x, 0) + 0.7152f * rgb.at(y, x, 1) +
                           0.0722f * rgb.at(y, x, 2);
    return out;
}

double laplacianVariance(const Image& gray) {
    const Image g = toGray(gray);
    const int h = g.height(), w = g.width();
    std::vector<double> lap;
    lap.reserve(size_t(std::max(0, h - 2)) * std::max(0, w - 2));
    for (int y = 1; y + 1 < h; ++y)
        for (int x = 1; x + 1 < w; ++x)
            lap.push_back(double(g.at(y - 1, x)) + g.at(y + 1, x) + g.at(y, x - 1) +
                          g.at(y, x + 1) - 4.0 * g.at(y, x));
    if (lap.empty()) return 0.0;
    double mean = 0.0;
    for (double v : lap) mean += v;
    mean /= double(lap.size());
    double var = 0.0;
    for (double v : lap) var += (v - mean) * (v - mean);
    return var / double(lap.size());
}

}  // namespace dlt
