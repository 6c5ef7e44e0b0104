#include <doctest.h>

#include "delight/core/errors.hpp"
#include "delight/nn/image_ops.hpp"
#include "delight/nn/loss.hpp"

using namespace dlt;
using namespace dlt::nn;

namespace {

Tensor randT(std::vector<int> shape, Rng& rng, bool rg = true) {
    return Tensor::randn(std::move(shape), 1.0, rng, rg);
}

}  // namespace

TEST_CASE("elementwise ops pass finite-difference checks") {
    Rng rng(1);
    Tensor x = randT({4, 5}, rng);
    Tensor y = randT({4, 5}, rng);

    CHECK(gradCheck([&] { return sum(mul(x, y)); }, x, 10, rng) < 1e-6);
    CHECK(gradCheck([&] { return sum(square(sub(x, y))); }, x, 10, rng) < 1e-6);
    CHECK(gradCheck([&] { return mean(absT(x)); }, x, 10, rng) < 1e-5);
    CHECK(gradCheck([&] { return sum(gelu(x)); }, x, 10, rng) < 1e-6);
    CHECK(gradCheck([&] { return sum(charbonnier(x, 0.01)); }, x, 10, rng) < 1e-5);
    CHECK(gradCheck([&] { return sum(relu(x)); }, x, 10, rng) < 1e-6);
}

TEST_CASE("matmul gradients, all transpose variants") {
    Rng rng(2);
    Tensor a = randT({3, 4}, rng);
    Tensor b = randT({4, 5}, rng);
    Tensor bt = randT({5, 4}, rng);
    Tensor at = randT({4, 3}, rng);

    CHECK(gradCheck([&] { return sum(matmul(a, b)); }, a, 12, rng) < 1e-6);
    CHECK(gradCheck([&] { return sum(matmul(a, b)); }, b, 12, rng) < 1e-6);
    CHECK(gradCheck([&] { return sum(matmul(a, bt, false, true)); }, bt, 12, rng) < 1e-6);
    CHECK(gradCheck([&] { return sum(matmul(at, b, true, false)); }, at, 12, rng) < 1e-6);
    CHECK(gradCheck([&] { return sum(matmul(at, bt, true, true)); }, at, 12, rng) < 1e-6);
}

TEST_CASE("softmax, layernorm, row-vector bias gradients") {
    Rng rng(3);
    Tensor x = randT({6, 8}, rng);
    Tensor g = randT({8}, rng);
    Tensor b = randT({8}, rng);
    Tensor v = randT({8}, rng);

    CHECK(gradCheck([&] { return sum(mul(softmaxRows(x), x)); }, x, 16, rng) < 1e-5);
    CHECK(gradCheck([&] { return sum(square(layerNormRows(x, g, b))); }, x, 16, rng) < 1e-5);
    CHECK(gradCheck([&] { return sum(square(layerNormRows(x, g, b))); }, g, 8, rng) < 1e-5);
    CHECK(gradCheck([&] { return sum(square(layerNormRows(x, g, b))); }, b, 8, rng) < 1e-5);
    CHECK(gradCheck([&] { return sum(square(addRowVector(x, v))); }, v, 8, rng) < 1e-6);
}

TEST_CASE("slice and concat gradients") {
    Rng rng(4);
    Tensor x = randT({6, 6}, rng);
    Tensor y = randT({2, 6}, rng);

    CHECK(gradCheck([&] { return sum(square(sliceRows(concatRows(x, y), 2, 8))); }, x, 12, rng) <
          1e-6);
    CHECK(gradCheck([&] { return sum(square(sliceCols(x, 1, 4))); }, x, 12, rng) < 1e-6);
    CHECK(gradCheck(
              [&] {
                  std::vector<Tensor> parts{sliceCols(x, 0, 2), sliceCols(x, 2, 6)};
                  return sum(square(concatColsMany(parts)));
              },
              x, 12, rng) < 1e-6);
}

TEST_CASE("image ops gradients: conv, pool, upsample, patchify, blur, diffs") {
    Rng rng(5);
    Tensor x = randT({2, 8, 8}, rng);
    Tensor w = randT({3, 2 * 9}, rng);
    Tensor b = randT({3}, rng);

    CHECK(gradCheck([&] { return sum(square(conv2d(x, w, b, 3, 3))); }, x, 16, rng) < 1e-5);
    CHECK(gradCheck([&] { return sum(square(conv2d(x, w, b, 3, 3))); }, w, 16, rng) < 1e-5);
    CHECK(gradCheck([&] { return sum(square(conv2d(x, w, b, 3, 3))); }, b, 3, rng) < 1e-5);
    CHECK(gradCheck([&] { return sum(square(avgPool2x(x))); }, x, 12, rng) < 1e-6);
    CHECK(gradCheck([&] { return sum(square(upsample2xNearest(x))); }, x, 12, rng) < 1e-6);
    CHECK(gradCheck([&] { return sum(square(patchify(x, 4))); }, x, 12, rng) < 1e-6);

    Tensor tok = randT({16, 3}, rng);
    CHECK(gradCheck([&] { return sum(square(unpatchifyToGrid(tok, 4, 4))); }, tok, 12, rng) < 1e-6);

    const auto kernel = gaussianKernel1d(1.0);
    CHECK(gradCheck([&] { return sum(square(separableBlurFixed(x, kernel))); }, x, 16, rng) < 1e-5);
    CHECK(gradCheck([&] { return sum(square(diffX(x))); }, x, 12, rng) < 1e-6);
    CHECK(gradCheck([&] { return sum(square(diffY(x))); }, x, 12, rng) < 1e-6);
}

TEST_CASE("conv2d matches a direct dense reference") {
    Rng rng(6);
    const int inC = 2, outC = 3, H = 6, W = 7;
    Tensor x = randT({inC, H, W}, rng, false);
    Tensor w = randT({outC, inC * 9}, rng, false);
    Tensor b = randT({outC}, rng, false);
    const Tensor y = conv2d(x, w, b, 3, 3);

    for (int oc = 0; oc < outC; ++oc)
        for (int yy = 0; yy < H; ++yy)
            for (int xx = 0; xx < W; ++xx) {
                double acc = b.value()[oc];
                for (int ic = 0; ic < inC; ++ic)
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx) {
                            const int sy = yy + ky - 1, sx = xx + kx - 1;
                            if (sy < 0 || sy >= H || sx < 0 || sx >= W) continue;
                            acc += w.value()[(oc * inC + ic) * 9 + ky * 3 + kx] *
                                   x.value()[(ic * H + sy) * W + sx];
                        }
                CHECK(y.value()[(oc * H + yy) * W + xx] == doctest::Approx(acc).epsilon(1e-10));
            }
}

TEST_CASE("no-grad mode detaches the graph") {
    Rng rng(7);
    Tensor x = randT({3, 3}, rng);
    NoGradGuard ng;
    Tensor y = sum(square(x));
    CHECK_FALSE(y.requiresGrad());
    CHECK(y.node()->parents.empty());
}

TEST_CASE("clampMin0 keeps gradient flowing at exactly zero") {
    Tensor x = Tensor::zeros({2, 2}, true);
    Tensor y = sum(clampMin0(x));
    y.backward();
    for (int i = 0; i < 4; ++i) CHECK(x.grad()[i] == 1.0);
}

TEST_CASE("loss terms pass finite-difference checks on 16x16 crops") {
    Rng rng(8);
    Tensor pred = randT({3, 16, 16}, rng);
    Image target(16, 16, 3);
    Image mask(16, 16, 1);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            mask.at(y, x) = (x + y) % 3 == 0 ? 0.0f : 1.0f;
            for (int c = 0; c < 3; ++c) target.at(y, x, c) = float(rng.uniform());
        }
    const Tensor t = imageToTensor(target);

    CHECK(gradCheck([&] { return maskedL1(pred, t, mask); }, pred, 40, rng) < 1e-4);
    CHECK(gradCheck([&] { return gradientPyramidLoss(pred, t); }, pred, 40, rng) < 1e-4);
    LossWeights w;
    CHECK(gradCheck([&] { return delightLoss(pred, target, mask, w).total; }, pred, 40, rng) <
          1e-4);
}

TEST_CASE("maskedL1 ignores differences outside the mask") {
    Rng rng(9);
    Image a(8, 8, 3), b(8, 8, 3), mask(8, 8, 1);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            mask.at(y, x) = x < 4 ? 1.0f : 0.0f;
            for (int c = 0; c < 3; ++c) {
                a.at(y, x, c) = float(rng.uniform());
                b.at(y, x, c) = a.at(y, x, c) + (x < 4 ? 0.0f : 5.0f);  // differ only outside
            }
        }
    const Tensor loss = maskedL1(imageToTensor(a), imageToTensor(b), mask);
    CHECK(loss.item() == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

    Image empty(8, 8, 1, 0.0f);
    CHECK_THROWS_AS(maskedL1(imageToTensor(a), imageToTensor(b), empty), DataError);
}
