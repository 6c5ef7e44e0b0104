#include "delight/nn/loss.hpp"

#include "delight/core/errors.hpp"

namespace dlt::nn {

Tensor maskTensor3(const Image& mask) {
    Tensor m = Tensor::zeros({3, mask.height(), mask.width()});
    double* d = m.value().data();
    const size_t plane = size_t(mask.height()) * mask.width();
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) {
            const double v = mask.at(y, x) > 0.5f ? 1.0 : 0.0;
            const size_t px = size_t(y) * mask.width() + x;
            d[px] = v;
            d[plane + px] = v;
            d[2 * plane + px] = v;
        }
    return m;
}

Tensor maskedL1(const Tensor& pred, const Tensor& target, const Image& mask) {
    if (pred.shape() != target.shape()) throw DataError("maskedL1: shape mismatch");
    const Tensor m3 = maskTensor3(mask);
    if (m3.shape() != pred.shape()) throw DataError("maskedL1: mask resolution mismatch");
    const double denom = m3.value().sum();
    if (denom <= 0.0) throw DataError("maskedL1: empty mask");
    Tensor diff = absT(sub(pred, target));
    return scale(sum(mul(diff, m3)), 1.0 / denom);
}

Tensor gradientPyramidLoss(const Tensor& a, const Tensor& b, int scales) {
    if (a.shape() != b.shape()) throw DataError("gradientPyramidLoss: shape mismatch");
    static const std::vector<double> kernel = gaussianKernel1d(1.0);

    Tensor la = a, lb = b;
    Tensor acc;
    for (int s = 0; s < scales; ++s) {
        if (s > 0) {
            la = avgPool2x(separableBlurFixed(la, kernel));
            lb = avgPool2x(separableBlurFixed(lb, kernel));
        }
        Tensor term = add(mean(absT(sub(diffX(la), diffX(lb)))),
                          mean(absT(sub(diffY(la), diffY(lb)))));
        acc = acc.defined() ? add(acc, term) : term;
    }
    return scale(acc, 1.0 / double(2 * scales));
}

LossTerms delightLoss(const Tensor& pred, const Image& target, const Image& mask,
                      const LossWeights& w) {
    const Tensor t = imageToTensor(target);
    const Tensor m3 = maskTensor3(mask);

    LossTerms out;
    out.l1 = maskedL1(pred, t, mask);
    out.perc = gradientPyramidLoss(mul(pred, m3), mul(t, m3));
    out.total = add(scale(out.l1, w.l1), scale(out.perc, w.perc));
    return out;
}

}  // namespace dlt::nn
