#include <doctest.h>

#include "delight/core/errors.hpp"
#include "delight/data/olat.hpp"

using namespace dlt;

namespace {

OlatCapture testCapture(uint64_t seed, int nLights = 48, double blur = 0.8) {
    Rng rng(seed);
    ScanAsset asset = makeProceduralFace(32, 48, rng);
    const Camera cam = frontalCamera(48, 3.2, 0.0, 0.0);
    ShadingParams shading;
    shading.specStrength = 0.4;
    return captureOlat(asset, cam, nLights, blur, shading);
}

double relNorm(const Image& a, const Image& b) {
    double diff = 0.0, ref = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = double(a.data()[i]) - b.data()[i];
        diff += d * d;
        ref += double(b.data()[i]) * b.data()[i];
    }
    return std::sqrt(diff) / std::max(1e-30, std::sqrt(ref));
}

}  // namespace

TEST_CASE("capture invariants: unit dirs, solid angles tile the sphere") {
    const OlatCapture cap = testCapture(1);
    CHECK_NOTHROW(cap.validate());
    double sum = 0.0;
    for (double w : cap.solidAngles) sum += w;
    CHECK(sum == doctest::Approx(4.0 * kPi).epsilon(1e-6));
}

TEST_CASE("zero env relights to black") {
    const OlatCapture cap = testCapture(2);
    const Image out = relightOlat(cap, makeConstantEnv(8, 0.0));
    for (size_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == 0.0f);
}

TEST_CASE("uniform env reproduces the stored albedo proxy exactly") {
    const OlatCapture cap = testCapture(3);
    const Image out = relightOlat(cap, makeConstantEnv(12, 1.0));
    // proxy = scale * uniform relight; fit the single scalar and compare
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < out.size(); ++i) {
        num += double(out.data()[i]) * cap.albedoProxy.data()[i];
        den += double(out.data()[i]) * out.data()[i];
    }
    const double s = num / den;
    double err = 0.0, ref = 0.0;
    for (size_t i = 0; i < out.size(); ++i) {
        const double d = s * out.data()[i] - cap.albedoProxy.data()[i];
        err += d * d;
        ref += double(cap.albedoProxy.data()[i]) * cap.albedoProxy.data()[i];
    }
    CHECK(std::sqrt(err / std::max(1e-30, ref)) <= 1e-6);
}

TEST_CASE("relighting is linear in the environment") {
    const OlatCapture cap = testCapture(4);
    Rng rng(99);
    for (int trial = 0; trial < 8; ++trial) {
        const EnvironmentMap a = makeProceduralEnv(12, rng, "a");
        const EnvironmentMap b = makeProceduralEnv(12, rng, "b");
        EnvironmentMap sum;
        sum.id = "a+b";
        sum.pixels = Image(a.height(), a.width(), 3);
        for (size_t i = 0; i < sum.pixels.size(); ++i)
            sum.pixels.data()[i] = a.pixels.data()[i] + b.pixels.data()[i];

        const Image ra = relightOlat(cap, a);
        const Image rb = relightOlat(cap, b);
        const Image rsum = relightOlat(cap, sum);
        Image added(ra.height(), ra.width(), 3);
        for (size_t i = 0; i < added.size(); ++i)
            added.data()[i] = ra.data()[i] + rb.data()[i];
        CHECK(relNorm(added, rsum) <= 1e-5);
    }
}

TEST_CASE("homogeneity: scaling the env scales the relight") {
    const OlatCapture cap = testCapture(5);
    Rng rng(7);
    const EnvironmentMap env = makeProceduralEnv(12, rng, "e");
    EnvironmentMap scaled;
    scaled.id = "3e";
    scaled.pixels = Image(env.height(), env.width(), 3);
    for (size_t i = 0; i < scaled.pixels.size(); ++i)
        scaled.pixels.data()[i] = 3.0f * env.pixels.data()[i];

    const Image r1 = relightOlat(cap, env);
    const Image r3 = relightOlat(cap, scaled);
    Image tripled(r1.height(), r1.width(), 3);
    for (size_t i = 0; i < tripled.size(); ++i) tripled.data()[i] = 3.0f * r1.data()[i];
    CHECK(relNorm(tripled, r3) <= 1e-5);
}

TEST_CASE("frame dimension mismatch is rejected") {
    OlatCapture cap = testCapture(6, 16, 0.0);
    cap.frames[3] = Image(7, 7, 3);
    CHECK_THROWS_AS(relightOlat(cap, makeConstantEnv(8, 1.0)), DataError);
}
