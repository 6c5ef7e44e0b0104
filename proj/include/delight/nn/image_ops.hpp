#pragma once

#include "delight/core/image.hpp"
#include "delight/nn/tensor.hpp"

namespace dlt::nn {

// Image tensors are (channels, height, width), row-major.

Tensor imageToTensor(const Image& img);           // HWC float -> CHW double
Image tensorToImage(const Tensor& t);             // CHW double -> HWC float

// 3x3-or-any-odd-kernel convolution, stride 1, zero-padded to same size.
// weight shape: (outC, inC * kh * kw); bias shape: (outC).
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int kh, int kw);

Tensor avgPool2x(const Tensor& x);      // H, W must be even
Tensor upsample2xNearest(const Tensor& x);

Tensor concatChannels(const Tensor& a, const Tensor& b);

// Non-overlapping P x P patch extraction: (C,H,W) -> (N, C*P*P) with
// N = (H/P)*(W/P), patches in row-major grid order.
Tensor patchify(const Tensor& x, int patch);
// Inverse arrangement of token channels onto the patch grid:
// (N, C) -> (C, H/P, W/P).
Tensor unpatchifyToGrid(const Tensor& tokens, int gridH, int gridW);

// Separable fixed-kernel blur (zero padding). The kernel is a constant of
// the graph, so the op is self-adjoint for symmetric kernels.
Tensor separableBlurFixed(const Tensor& x, const std::vector<double>& kernel);

// Horizontal / vertical forward differences (output one column/row narrower).
Tensor diffX(const Tensor& x);
Tensor diffY(const Tensor& x);

std::vector<double> gaussianKernel1d(double sigma);

}  // namespace dlt::nn
