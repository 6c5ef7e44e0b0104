#include <doctest.h>

#include <Eigen/Geometry>

#include "delight/core/errors.hpp"
#include "delight/core/rng.hpp"
#include "delight/core/sh.hpp"
#include "delight/data/align.hpp"

using namespace dlt;

TEST_CASE("landmarks already at template give the identity transform") {
    const auto tpl = canonicalTemplate(128);
    const Similarity2D t = fitSimilarity(tpl, tpl);
    CHECK(t.scale() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t.rotation() == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(t.tx == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    CHECK(t.ty == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
}

TEST_CASE("uniform 2x scaling recovers scale 0.5") {
    const auto tpl = canonicalTemplate(128);
    std::vector<Eigen::Vector2d> scaled;
    for (const auto& p : tpl) scaled.push_back(2.0 * p);
    const Similarity2D t = fitSimilarity(scaled, tpl);
    CHECK(t.scale() == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("random similarity round trips against the umeyama oracle") {
    Rng rng(13);
    const auto tpl = canonicalTemplate(128);
    for (int trial = 0; trial < 50; ++trial) {
        Similarity2D fwd;
        const double s = 0.3 + 2.0 * rng.uniform();
        const double th = rng.uniform(-kPi, kPi);
        fwd.ar = s * std::cos(th);
        fwd.ai = s * std::sin(th);
        fwd.tx = rng.uniform(-40.0, 40.0);
        fwd.ty = rng.uniform(-40.0, 40.0);

        std::vector<Eigen::Vector2d> moved;
        for (const auto& p : tpl) moved.push_back(fwd.apply(p));

        // recovered transform must invert the applied one
        const Similarity2D rec = fitSimilarity(moved, tpl);
        const Similarity2D inv = fwd.inverse();
        CHECK(rec.ar == doctest::Approx(inv.ar).epsilon(1e-6));
        CHECK(rec.ai == doctest::Approx(inv.ai).epsilon(1e-6));
        CHECK(rec.tx == doctest::Approx(inv.tx).epsilon(1e-6).scale(100.0));
        CHECK(rec.ty == doctest::Approx(inv.ty).epsilon(1e-6).scale(100.0));

        // independent oracle: Eigen's umeyama similarity fit
        Eigen::MatrixXd src(2, 5), dst(2, 5);
        for (int i = 0; i < 5; ++i) {
            src.col(i) = moved[i];
            dst.col(i) = tpl[i];
        }
        const Eigen::Matrix3d T = Eigen::umeyama(src, dst, true);
        CHECK(rec.ar == doctest::Approx(T(0, 0)).epsilon(1e-9));
        CHECK(rec.ai == doctest::Approx(T(1, 0)).epsilon(1e-9));
        CHECK(rec.tx == doctest::Approx(T(0, 2)).epsilon(1e-9).scale(100.0));
        CHECK(rec.ty == doctest::Approx(T(1, 2)).epsilon(1e-9).scale(100.0));
    }
}

TEST_CASE("collinear landmarks are rejected") {
    std::vector<Eigen::Vector2d> line{{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}};
    CHECK_THROWS_AS(fitSimilarity(line, canonicalTemplate(64)), DataError);
    std::vector<Eigen::Vector2d> two{{0, 0}, {1, 1}};
    std::vector<Eigen::Vector2d> twoTpl{{0, 0}, {2, 2}};
    CHECK_THROWS_AS(fitSimilarity(two, twoTpl), DataError);
}

TEST_CASE("warp followed by inverse warp is close on the interior") {
    Rng rng(5);
    Image img(64, 64, 1);
    // smooth image so bilinear resampling error stays tiny
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            img.at(y, x) = float(0.5 + 0.3 * std::sin(0.15 * x) * std::cos(0.11 * y));

    Similarity2D t;
    t.ar = 0.95 * std::cos(0.2);
    t.ai = 0.95 * std::sin(0.2);
    t.tx = 3.0;
    t.ty = -2.0;

    const Image warped = warpSimilarity(img, t, 64, 64);
    const Image back = warpSimilarity(warped, t.inverse(), 64, 64);
    for (int y = 16; y < 48; ++y)
        for (int x = 16; x < 48; ++x)
            CHECK(back.at(y, x) == doctest::Approx(img.at(y, x)).epsilon(0.02));
}

TEST_CASE("alignFace maps landmarks onto the template") {
    Rng rng(8);
    std::vector<Eigen::Vector2d> lm;
    Similarity2D fwd;
    fwd.ar = 1.4 * std::cos(-0.3);
    fwd.ai = 1.4 * std::sin(-0.3);
    fwd.tx = 10;
    fwd.ty = 20;
    for (const auto& p : canonicalTemplate(96)) lm.push_back(fwd.apply(p));

    Image img(160, 160, 3, 0.5f);
    const AlignedFace out = alignFace(img, lm, 96);
    CHECK(out.image.height() == 96);
    for (size_t i = 0; i < lm.size(); ++i) {
        const Eigen::Vector2d mapped = out.transform.apply(lm[i]);
        CHECK(mapped.x() == doctest::Approx(canonicalTemplate(96)[i].x()).epsilon(1e-6));
        CHECK(mapped.y() == doctest::Approx(canonicalTemplate(96)[i].y()).epsilon(1e-6));
    }
}
