#pragma once

#include <vector>

#include <Eigen/Core>

#include "delight/core/image.hpp"

namespace dlt {

// 2D similarity p' = s * R(theta) * p + t, stored as the complex pair
// a = s*e^{i theta}, b = t.
struct Similarity2D {
    double ar = 1.0, ai = 0.0;  // a = ar + i*ai
    double tx = 0.0, ty = 0.0;

    double scale() const { return std::sqrt(ar * ar + ai * ai); }
    double rotation() const { return std::atan2(ai, ar); }

    Eigen::Vector2d apply(const Eigen::Vector2d& p) const {
        return {ar * p.x() - ai * p.y() + tx, ai * p.x() + ar * p.y() + ty};
    }
    Similarity2D inverse() const;
    Similarity2D compose(const Similarity2D& inner) const;  // this ∘ inner
};

// Least-squares similarity mapping `from` onto `to` (Procrustes, closed
// form via the complex normal equations). Requires >= 3 landmarks, not all
// collinear.
Similarity2D fitSimilarity(const std::vector<Eigen::Vector2d>& from,
                           const std::vector<Eigen::Vector2d>& to);

// Canonical 5-point template (eyeL, eyeR, nose, mouthL, mouthR) scaled to
// an outputSize x outputSize frame; coordinates are (x, y) pixels.
std::vector<Eigen::Vector2d> canonicalTemplate(int outputSize);

// Resample src so that srcToDst maps source pixels onto the output frame
// (inverse-mapped bilinear). nearestNeighbor suits binary masks.
Image warpSimilarity(const Image& src, const Similarity2D& srcToDst, int outH, int outW,
                     bool nearestNeighbor = false);

struct AlignedFace {
    Image image;
    Similarity2D transform;  // source pixels -> aligned pixels
};

// Landmark-based alignment onto the canonical template.
AlignedFace alignFace(const Image& image, const std::vector<Eigen::Vector2d>& landmarks,
                      int outputSize);

}  // namespace dlt
