#include "delight/data/align.hpp"

#include <cmath>

#include "delight/core/errors.hpp"

namespace dlt {

Similarity2D Similarity2D::inverse() const {
    const double d = ar * ar + ai * ai;
    Similarity2D inv;
    inv.ar = ar / d;
    inv.ai = -ai / d;
    inv.tx = -(inv.ar * tx - inv.ai * ty);
    inv.ty = -(inv.ai * tx + inv.ar * ty);
    return inv;
}

Similarity2D Similarity2D::compose(const Similarity2D& inner) const {
    Similarity2D out;
    out.ar = ar * inner.ar - ai * inner.ai;
    out.ai = ar * inner.ai + ai * inner.ar;
    const Eigen::Vector2d t = apply({inner.tx, inner.ty});
    out.tx = t.x();
    out.ty = t.y();
    return out;
}

Similarity2D fitSimilarity(const std::vector<Eigen::Vector2d>& from,
                           const std::vector<Eigen::Vector2d>& to) {
    if (from.size() != to.size()) throw DataError("fitSimilarity: point counts differ");
    const size_t n = from.size();
    if (n < 3) throw DataError("fitSimilarity: need at least 3 landmarks");

    Eigen::Vector2d mf = Eigen::Vector2d::Zero(), mt = Eigen::Vector2d::Zero();
    for (size_t i = 0; i < n; ++i) {
        mf += from[i];
        mt += to[i];
    }
    mf /= double(n);
    mt /= double(n);

    // collinearity: max triangle area over centered points
    double spread = 0.0, maxArea = 0.0;
    for (size_t i = 0; i < n; ++i) spread = std::max(spread, (from[i] - mf).norm());
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            const Eigen::Vector2d a = from[i] - mf, b = from[j] - mf;
            maxArea = std::max(maxArea, std::abs(a.x() * b.y() - a.y() * b.x()));
        }
    if (spread < 1e-12 || maxArea < 1e-9 * spread * spread)
        throw DataError("fitSimilarity: degenerate (collinear or coincident) landmarks");

    // complex least squares: minimize sum |a*(z_i - z̄) - (w_i - w̄)|^2
    double num_r = 0.0, num_i = 0.0, den = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const Eigen::Vector2d z = from[i] - mf;
        const Eigen::Vector2d w = to[i] - mt;
        num_r += w.x() * z.x() + w.y() * z.y();
        num_i += w.y() * z.x() - w.x() * z.y();
        den += z.squaredNorm();
    }

    Similarity2D s;
    s.ar = num_r / den;
    s.ai = num_i / den;
    const Eigen::Vector2d t = mt - Eigen::Vector2d(s.ar * mf.x() - s.ai * mf.y(),
                                                   s.ai * mf.x() + s.ar * mf.y());
    s.tx = t.x();
    s.ty = t.y();
    return s;
}

std::vector<Eigen::Vector2d> canonicalTemplate(int outputSize) {
    const double S = outputSize;
    return {
        {0.34 * S, 0.40 * S},  // eyeL
        {0.66 * S, 0.40 * S},  // eyeR
        {0.50 * S, 0.58 * S},  // nose
        {0.38 * S, 0.72 * S},  // mouthL
        {0.62 * S, 0.72 * S},  // mouthR
    };
}

Image warpSimilarity(const Image& src, const Similarity2D& srcToDst, int outH, int outW,
                     bool nearestNeighbor) {
    const Similarity2D inv = srcToDst.inverse();
    Image out(outH, outW, src.channels(), 0.0f);
    for (int y = 0; y < outH; ++y)
        for (int x = 0; x < outW; ++x) {
            const Eigen::Vector2d p = inv.apply({double(x), double(y)});
            if (p.x() < -0.5 || p.y() < -0.5 || p.x() > src.width() - 0.5 ||
                p.y() > src.height() - 0.5)
                continue;  // outside source: leave zero
            if (nearestNeighbor) {
                const int sx = std::clamp(int(std::lround(p.x())), 0, src.width() - 1);
                const int sy = std::clamp(int(std::lround(p.y())), 0, src.height() - 1);
                for (int ch = 0; ch < src.channels(); ++ch) out.at(y, x, ch) = src.at(sy, sx, ch);
            } else {
                for (int ch = 0; ch < src.channels(); ++ch)
                    out.at(y, x, ch) = src.sample(float(p.y()), float(p.x()), ch);
            }
        }
    return out;
}

AlignedFace alignFace(const Image& image, const std::vector<Eigen::Vector2d>& landmarks,
                      int outputSize) {
    const Similarity2D t = fitSimilarity(landmarks, canonicalTemplate(outputSize));
    return {warpSimilarity(image, t, outputSize, outputSize), t};
}

}  // namespace dlt
