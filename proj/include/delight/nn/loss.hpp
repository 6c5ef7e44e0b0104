#pragma once

#include "delight/nn/image_ops.hpp"

namespace dlt::nn {

struct LossWeights {
    double l1 = 1.0;
    double perc = 0.5;
};

struct LossTerms {
    Tensor total;
    Tensor l1;
    Tensor perc;
};

// Mean absolute difference over masked pixels (mask broadcast to all
// channels). Throws DataError on an empty mask.
Tensor maskedL1(const Tensor& pred, const Tensor& target, const Image& mask);

// Perceptual substitute: L1 between finite-difference gradients of the two
// inputs on a 3-scale Gaussian pyramid. Stands in for a pretrained
// perceptual metric at desk scale; an external scorer can replace it for
// fidelity runs via the evaluation module's scorer hook.
Tensor gradientPyramidLoss(const Tensor& a, const Tensor& b, int scales = 3);

// lambda_l1 * maskedL1 + lambda_perc * gradientPyramidLoss(pred .* mask, target .* mask)
LossTerms delightLoss(const Tensor& pred, const Image& target, const Image& mask,
                      const LossWeights& w);

Tensor maskTensor3(const Image& mask);  // 1ch mask -> (3,H,W) constant tensor

}  // namespace dlt::nn
