#include <doctest.h>

#include <filesystem>

#include "delight/core/errors.hpp"
#include "delight/core/rng.hpp"
#include "delight/eval/metrics.hpp"
#include "delight/eval/report.hpp"

using namespace dlt;

namespace {

Image randImage(int h, int w, Rng& rng) {
    Image img(h, w, 3);
    for (size_t i = 0; i < img.size(); ++i) img.data()[i] = float(0.1 + 0.8 * rng.uniform());
    return img;
}

Image fullMask(int h, int w) { return Image(h, w, 1, 1.0f); }

// brute-force normal-equations oracle for the per-channel affine fit
void oracleAffine(const Image& pred, const Image& gt, const Image& mask, int ch, double* s,
                  double* b) {
    double a11 = 0, a12 = 0, a22 = 0, r1 = 0, r2 = 0;
    for (int y = 0; y < pred.height(); ++y)
        for (int x = 0; x < pred.width(); ++x) {
            if (mask.at(y, x) <= 0.5f) continue;
            const double p = pred.at(y, x, ch), g = gt.at(y, x, ch);
            a11 += p * p;
            a12 += p;
            a22 += 1;
            r1 += p * g;
            r2 += g;
        }
    const double det = a11 * a22 - a12 * a12;
    *s = (r1 * a22 - r2 * a12) / det;
    *b = (a11 * r2 - a12 * r1) / det;
}

}  // namespace

TEST_CASE("color transform: identity, exact affine inverse, oracle agreement") {
    Rng rng(1);
    const Image gt = randImage(24, 24, rng);
    const Image mask = fullMask(24, 24);

    SUBCASE("pred == gt") {
        const ColorTransform t = fitColorTransform(gt, gt, mask);
        for (int ch = 0; ch < 3; ++ch) {
            CHECK(t.scale[ch] == doctest::Approx(1.0).epsilon(1e-10));
            CHECK(t.bias[ch] == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
        }
    }
    SUBCASE("pred = 2*gt + 0.1 recovers scale .5 bias -.05") {
        Image pred(24, 24, 3);
        for (size_t i = 0; i < pred.size(); ++i) pred.data()[i] = 2.0f * gt.data()[i] + 0.1f;
        const ColorTransform t = fitColorTransform(pred, gt, mask);
        for (int ch = 0; ch < 3; ++ch) {
            CHECK(std::abs(t.scale[ch] - 0.5) < 1e-6);
            CHECK(std::abs(t.bias[ch] + 0.05) < 1e-6);
        }
    }
    SUBCASE("random pred/gt matches the normal-equations oracle") {
        const Image m16 = fullMask(16, 16);
        for (int trial = 0; trial < 10; ++trial) {
            const Image pred = randImage(16, 16, rng);
            const Image g = randImage(16, 16, rng);
            const ColorTransform t = fitColorTransform(pred, g, m16);
            for (int ch = 0; ch < 3; ++ch) {
                double s, b;
                oracleAffine(pred, g, m16, ch, &s, &b);
                CHECK(std::abs(t.scale[ch] - s) <= 1e-8);
                CHECK(std::abs(t.bias[ch] - b) <= 1e-8);
            }
        }
    }
    SUBCASE("constant pred channel falls back with a warning flag") {
        Image pred(24, 24, 3, 0.5f);
        const ColorTransform t = fitColorTransform(pred, gt, mask);
        CHECK(t.degenerate);
        for (int ch = 0; ch < 3; ++ch) CHECK(t.scale[ch] == 1.0);
    }
}

TEST_CASE("psnr: identity infinite, unit-MSE zero, +0.1 gives 20 dB") {
    Rng rng(2);
    const Image a = randImage(16, 16, rng);
    const Image mask = fullMask(16, 16);
    CHECK(std::isinf(psnrMasked(a, a, mask)));

    Image b = a;
    for (size_t i = 0; i < b.size(); ++i) b.data()[i] += 0.1f;
    CHECK(psnrMasked(a, b, mask) == doctest::Approx(20.0).epsilon(1e-4));

    Image c = a;
    for (size_t i = 0; i < c.size(); ++i) c.data()[i] += 1.0f;  // MSE = peak^2
    CHECK(psnrMasked(a, c, mask) == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));

    Image empty(16, 16, 1, 0.0f);
    CHECK_THROWS_AS(psnrMasked(a, b, empty), DataError);
}

TEST_CASE("ssim: identity is 1, inversion scores below 1, oracle agreement") {
    Rng rng(3);
    Image a(32, 32, 3);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            for (int c = 0; c < 3; ++c)
                a.at(y, x, c) = float(0.5 + 0.4 * std::sin(0.3 * x + 0.2 * y + c));
    const Image mask = fullMask(32, 32);
    CHECK(ssimMasked(a, a, mask) == doctest::Approx(1.0).epsilon(1e-9));

    Image inv(32, 32, 3);
    for (size_t i = 0; i < inv.size(); ++i) inv.data()[i] = 1.0f - a.data()[i];
    CHECK(ssimMasked(a, inv, mask) < 1.0);

    // windows must fit in the mask
    Image tiny(8, 8, 1, 1.0f);
    Image a8 = randImage(8, 8, rng);
    CHECK_THROWS_AS(ssimMasked(a8, a8, tiny), DataError);
}

TEST_CASE("evaluateMethod: affine corruptions align to >= 60 dB; orderings match noise") {
    Rng rng(4);
    const int n = 6;
    EvalInputs clean;
    clean.method = "clean";
    EvalInputs noisy;
    noisy.method = "noisy";
    for (int i = 0; i < n; ++i) {
        const Image gt = randImage(24, 24, rng);
        Image corrupted(24, 24, 3);
        for (int c = 0; c < 3; ++c) {
            const double s = 0.5 + rng.uniform();
            const double b = rng.uniform(-0.2, 0.2);
            for (int y = 0; y < 24; ++y)
                for (int x = 0; x < 24; ++x)
                    corrupted.at(y, x, c) = float(s * gt.at(y, x, c) + b);
        }
        Image noised = corrupted;
        for (size_t k = 0; k < noised.size(); ++k)
            noised.data()[k] += float(0.05 * rng.normal());

        clean.predictions.push_back(corrupted);
        clean.groundTruths.push_back(gt);
        clean.masks.push_back(fullMask(24, 24));
        noisy.predictions.push_back(noised);
        noisy.groundTruths.push_back(gt);
        noisy.masks.push_back(fullMask(24, 24));
    }

    const EvalReport cleanReport = evaluateMethod(clean);
    const EvalReport noisyReport = evaluateMethod(noisy);
    for (const auto& rec : cleanReport.records) CHECK(rec.psnr >= 60.0);
    CHECK(cleanReport.summary.meanPsnr > noisyReport.summary.meanPsnr);
    CHECK(cleanReport.summary.meanSsim > noisyReport.summary.meanSsim);

    EvalInputs bad = clean;
    bad.masks.pop_back();
    CHECK_THROWS_AS(evaluateMethod(bad), DataError);
}

TEST_CASE("affine invariance and alignment optimality") {
    Rng rng(5);
    const Image gt = randImage(20, 20, rng);
    const Image pred = randImage(20, 20, rng);
    const Image mask = fullMask(20, 20);

    const ColorTransform t0 = fitColorTransform(pred, gt, mask);
    const double mse0 = maskedMse(applyColorTransform(pred, t0), gt, mask);

    // post-alignment MSE never exceeds pre-alignment MSE
    CHECK(mse0 <= maskedMse(pred, gt, mask) + 1e-12);

    // applying any nonzero-scale affine map first leaves the result unchanged
    for (int trial = 0; trial < 5; ++trial) {
        ColorTransform warp;
        for (int c = 0; c < 3; ++c) {
            warp.scale[c] = 0.3 + 2.0 * rng.uniform();
            warp.bias[c] = rng.uniform(-0.3, 0.3);
        }
        const Image warped = applyColorTransform(pred, warp);
        const ColorTransform t1 = fitColorTransform(warped, gt, mask);
        const double mse1 = maskedMse(applyColorTransform(warped, t1), gt, mask);
        CHECK(mse1 == doctest::Approx(mse0).epsilon(1e-6));
    }
}

TEST_CASE("metrics ignore pixels outside the mask") {
    Rng rng(6);
    const Image gt = randImage(24, 24, rng);
    Image pred = gt;
    Image mask(24, 24, 1, 0.0f);
    for (int y = 4; y < 20; ++y)
        for (int x = 4; x < 20; ++x) mask.at(y, x) = 1.0f;

    Image outside = pred;
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x)
            if (mask.at(y, x) < 0.5f)
                for (int c = 0; c < 3; ++c) outside.at(y, x, c) = float(rng.uniform() * 9);

    CHECK(std::isinf(psnrMasked(outside, gt, mask)));
    CHECK(ssimMasked(outside, gt, mask) == doctest::Approx(1.0).epsilon(1e-9));
    const ColorTransform t = fitColorTransform(outside, gt, mask);
    for (int c = 0; c < 3; ++c) CHECK(t.scale[c] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("hstack and comparison grid write") {
    Image a(8, 8, 3, 0.2f), b(8, 8, 3, 0.4f);
    const Image s = hstack({a, b});
    CHECK(s.width() == 16);
    CHECK(s.at(3, 3, 0) == doctest::Approx(0.2f));
    CHECK(s.at(3, 11, 0) == doctest::Approx(0.4f));

    const std::string path =
        (std::filesystem::temp_directory_path() / "dlt_grid.ppm").string();
    writeComparisonGrid(path, a, b, b, a);
    CHECK(std::filesystem::exists(path));
    std::filesystem::remove(path);
}
