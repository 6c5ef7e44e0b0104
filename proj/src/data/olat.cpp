#include "delight/data/olat.hpp"

#include <cmath>

#include "delight/core/errors.hpp"

namespace dlt {

void OlatCapture::validate() const {
    if (frames.size() != lightDirs.size() || frames.size() != solidAngles.size())
        throw DataError("olat capture: array lengths disagree");
    for (const auto& d : lightDirs)
        if (std::abs(d.norm() - 1.0) > 1e-6) throw DataError("olat capture: non-unit light dir");
    double sum = 0.0;
    for (double w : solidAngles) {
        if (w <= 0) throw DataError("olat capture: non-positive solid angle");
        sum += w;
    }
    if (sum < 4.0 * kPi * 0.95 || sum > 4.0 * kPi * 1.05)
        throw DataError("olat capture: solid angles do not cover the sphere");
    for (const auto& f : frames)
        for (size_t i = 0; i < f.size(); ++i)
            if (f.data()[i] < 0.0f) throw DataError("olat capture: negative frame value");
}

std::vector<Eigen::Vector3d> fibonacciSphere(int n) {
    std::vector<Eigen::Vector3d> dirs(n);
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / n;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * i;
        dirs[i] = Eigen::Vector3d(r * std::cos(phi), r * std::sin(phi), z);
    }
    return dirs;
}

OlatCapture captureOlat(const ScanAsset& asset, const Camera& cam, int nLights,
                        double frameBlurSigma, const ShadingParams& shading,
                        int voronoiGridHeight) {
    OlatCapture cap;
    cap.lightDirs = fibonacciSphere(nLights);

    // Voronoi areas by quadrature: every grid texel's solid angle goes to
    // its nearest rig light. The grid is reused at relight time.
    cap.gridHeight = voronoiGridHeight;
    cap.gridWidth = 2 * voronoiGridHeight;
    cap.cellOfGridTexel.assign(size_t(cap.gridHeight) * cap.gridWidth, 0);
    cap.solidAngles.assign(nLights, 0.0);
    for (int v = 0; v < cap.gridHeight; ++v) {
        const double dw = equirectTexelSolidAngle(v, cap.gridWidth, cap.gridHeight);
        for (int u = 0; u < cap.gridWidth; ++u) {
            const Eigen::Vector3d d = equirectDir(u, v, cap.gridWidth, cap.gridHeight);
            int best = 0;
            double bestDot = -2.0;
            for (int i = 0; i < nLights; ++i) {
                const double c = d.dot(cap.lightDirs[i]);
                if (c > bestDot) {
                    bestDot = c;
                    best = i;
                }
            }
            cap.cellOfGridTexel[size_t(v) * cap.gridWidth + u] = best;
            cap.solidAngles[best] += dw;
        }
    }

    const GBuffer gb = rasterize(asset.mesh, cam);
    bool any = false;
    for (int y = 0; y < gb.height && !any; ++y)
        for (int x = 0; x < gb.width; ++x)
            if (gb.covered(y, x)) { any = true; break; }
    if (!any) throw DataError("captureOlat: camera sees no part of the asset");

    cap.frames.reserve(nLights);
    for (int i = 0; i < nLights; ++i) {
        std::vector<DirectionalLight> single{{cap.lightDirs[i], Eigen::Vector3d::Ones()}};
        Image frame = shadeImage(gb, asset, cam, single, shading);
        if (frameBlurSigma > 0) {
            frame = gaussianBlur(frame, frameBlurSigma);
            for (size_t k = 0; k < frame.size(); ++k)
                frame.data()[k] = std::max(0.0f, frame.data()[k]);
        }
        cap.frames.push_back(std::move(frame));
    }

    cap.mask = bakeSkinMask(gb, asset);
    cap.landmarks = projectLandmarks(asset.mesh, cam);
    cap.albedoProxyScale = 1.0;  // uniform unit radiance integrates to albedo for a Lambertian surface
    cap.albedoProxy = relightOlat(cap, makeConstantEnv(8, 1.0, "uniform"));
    for (size_t k = 0; k < cap.albedoProxy.size(); ++k)
        cap.albedoProxy.data()[k] = float(cap.albedoProxy.data()[k] * cap.albedoProxyScale);
    return cap;
}

Image relightOlat(const OlatCapture& cap, const EnvironmentMap& env) {
    if (cap.frames.empty()) throw DataError("relightOlat: capture has no frames");
    const int h = cap.frames[0].height(), w = cap.frames[0].width();
    for (const auto& f : cap.frames)
        if (f.height() != h || f.width() != w || f.channels() != 3)
            throw DataError("relightOlat: dimension mismatch among frames");

    const int L = int(cap.frames.size());
    // mean env radiance over each light's Voronoi cell
    std::vector<Eigen::Vector3d> cellSum(L, Eigen::Vector3d::Zero());
    std::vector<double> cellArea(L, 0.0);
    for (int v = 0; v < cap.gridHeight; ++v) {
        const double dw = equirectTexelSolidAngle(v, cap.gridWidth, cap.gridHeight);
        for (int u = 0; u < cap.gridWidth; ++u) {
            const int cell = cap.cellOfGridTexel[size_t(v) * cap.gridWidth + u];
            cellSum[cell] += env.radiance(equirectDir(u, v, cap.gridWidth, cap.gridHeight)) * dw;
            cellArea[cell] += dw;
        }
    }

    std::vector<Eigen::Vector3d> weights(L);
    for (int i = 0; i < L; ++i) {
        const Eigen::Vector3d mean =
            cellArea[i] > 0 ? Eigen::Vector3d(cellSum[i] / cellArea[i]) : Eigen::Vector3d::Zero();
        weights[i] = mean * cap.solidAngles[i];
    }

    std::vector<double> acc(size_t(h) * w * 3, 0.0);
    for (int i = 0; i < L; ++i) {
        const float* src = cap.frames[i].data();
        for (size_t p = 0; p < size_t(h) * w; ++p)
            for (int ch = 0; ch < 3; ++ch) acc[p * 3 + ch] += weights[i][ch] * src[p * 3 + ch];
    }
    Image out(h, w, 3);
    for (size_t k = 0; k < out.size(); ++k) out.data()[k] = float(acc[k]);
    return out;
}

}  // namespace dlt
