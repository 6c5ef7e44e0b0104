#include "delight/recon/fusion.hpp"

#include <cmath>

#include "delight/core/errors.hpp"

namespace dlt {

double sceneScale(const TriMesh& mesh) {
    if (mesh.positions.empty()) return 1.0;
    Eigen::Vector3d lo = mesh.positions[0], hi = mesh.positions[0];
    for (const auto& p : mesh.positions) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return std::max(1e-12, (hi - lo).norm());
}

UVGeometry rasterizeUV(const TriMesh& mesh, int resolution) {
    UVGeometry g;
    g.resolution = resolution;
    g.position = Image(resolution, resolution, 3);
    g.normal = Image(resolution, resolution, 3);
    g.coverage = Image(resolution, resolution, 1, 0.0f);

    for (const auto& f : mesh.faces) {
        // texture-space triangle, pixel units
        Eigen::Vector2d t[3];
        for (int k = 0; k < 3; ++k) t[k] = mesh.uvs[f[k]] * double(resolution);
        const double area = (t[1].x() - t[0].x()) * (t[2].y() - t[0].y()) -
                            (t[2].x() - t[0].x()) * (t[1].y() - t[0].y());
        if (std::abs(area) < 1e-12) continue;
        const int x0 = std::max(0, int(std::floor(std::min({t[0].x(), t[1].x(), t[2].x()}))));
        const int x1 = std::min(resolution - 1,
                                int(std::ceil(std::max({t[0].x(), t[1].x(), t[2].x()}))));
        const int y0 = std::max(0, int(std::floor(std::min({t[0].y(), t[1].y(), t[2].y()}))));
        const int y1 = std::min(resolution - 1,
                                int(std::ceil(std::max({t[0].y(), t[1].y(), t[2].y()}))));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double px = x + 0.5, py = y + 0.5;
                double w0 = ((t[1].x() - px) * (t[2].y() - py) - (t[2].x() - px) * (t[1].y() - py)) / area;
                double w1 = ((t[2].x() - px) * (t[0].y() - py) - (t[0].x() - px) * (t[2].y() - py)) / area;
                double w2 = ((t[0].x() - px) * (t[1].y() - py) - (t[1].x() - px) * (t[0].y() - py)) / area;
                if (w0 < 0 || w1 < 0 || w2 < 0) continue;
                const Eigen::Vector3d pos = w0 * mesh.positions[f[0]] +
                                            w1 * mesh.positions[f[1]] + w2 * mesh.positions[f[2]];
                Eigen::Vector3d nrm = w0 * mesh.normals[f[0]] + w1 * mesh.normals[f[1]] +
                                      w2 * mesh.normals[f[2]];
                const double nl = nrm.norm();
                if (nl > 1e-12) nrm /= nl;
                g.coverage.at(y, x) = 1.0f;
                for (int ch = 0; ch < 3; ++ch) {
                    g.position.at(y, x, ch) = float(pos[ch]);
                    g.normal.at(y, x, ch) = float(nrm[ch]);
                }
            }
    }
    return g;
}

UVTexture fuseToUv(const std::vector<PerViewAlbedo>& albedos,
                   const std::vector<ReconView>& views, const TriMesh& mesh, int resolution,
                   const FusionParams& params) {
    if (albedos.empty() || albedos.size() != views.size())
        throw DataError("fuseToUv: need one albedo per view");

    const UVGeometry geo = rasterizeUV(mesh, resolution);
    const double depthEps = params.depthEpsilonScale * sceneScale(mesh);

    // per-view depth buffers for visibility
    std::vector<GBuffer> gbs;
    gbs.reserve(views.size());
    for (const auto& v : views) gbs.push_back(rasterize(mesh, v.camera));

    UVTexture tex;
    tex.pixels = Image(resolution, resolution, 3, 0.0f);
    tex.validity = Image(resolution, resolution, 1, 0.0f);

    long covered = 0;
    for (int ty = 0; ty < resolution; ++ty)
        for (int tx = 0; tx < resolution; ++tx) {
            if (geo.coverage.at(ty, tx) < 0.5f) continue;
            const Eigen::Vector3d p(geo.position.at(ty, tx, 0), geo.position.at(ty, tx, 1),
                                    geo.position.at(ty, tx, 2));
            const Eigen::Vector3d n(geo.normal.at(ty, tx, 0), geo.normal.at(ty, tx, 1),
                                    geo.normal.at(ty, tx, 2));
            double wsum = 0.0;
            Eigen::Vector3d acc = Eigen::Vector3d::Zero();
            for (size_t vi = 0; vi < views.size(); ++vi) {
                const Camera& cam = views[vi].camera;
                const Eigen::Vector3d proj = cam.project(p);
                if (proj.z() <= 0) continue;
                const int px = int(std::lround(proj.x() - 0.5));
                const int py = int(std::lround(proj.y() - 0.5));
                if (px < 0 || py < 0 || px >= cam.width || py >= cam.height) continue;
                // z-buffer visibility
                if (!gbs[vi].covered(py, px)) continue;
                if (proj.z() > gbs[vi].depth.at(py, px) + depthEps) continue;
                // reject samples touching invalid albedo pixels
                if (albedos[vi].validity.sample(float(proj.y() - 0.5), float(proj.x() - 0.5), 0) <
                    0.999f)
                    continue;
                const Eigen::Vector3d toCam = (cam.center() - p).normalized();
                const double c = n.dot(toCam);
                if (c <= 0) continue;
                const double w = std::pow(c, params.blendExponent);
                for (int ch = 0; ch < 3; ++ch)
                    acc[ch] += w * albedos[vi].albedo.sample(float(proj.y() - 0.5),
                                                             float(proj.x() - 0.5), ch);
                wsum += w;
            }
            if (wsum > 0) {
                ++covered;
                tex.validity.at(ty, tx) = 1.0f;
                for (int ch = 0; ch < 3; ++ch) tex.pixels.at(ty, tx, ch) = float(acc[ch] / wsum);
            }
        }
    if (covered == 0) throw DataError("fuseToUv: no texel covered by any view");

    fillInvalidTexels(tex);
    return tex;
}

void fillInvalidTexels(UVTexture& tex) {
    const int R = tex.resolution();
    std::vector<uint8_t> filled(size_t(R) * R);
    for (int y = 0; y < R; ++y)
        for (int x = 0; x < R; ++x) filled[size_t(y) * R + x] = tex.validity.at(y, x) > 0.5f;

    bool progress = true;
    while (progress) {
        progress = false;
        std::vector<uint8_t> nextFilled = filled;
        Image next = tex.pixels;
        for (int y = 0; y < R; ++y)
            for (int x = 0; x < R; ++x) {
                if (filled[size_t(y) * R + x]) continue;
                double acc[3] = {0, 0, 0};
                int cnt = 0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (!dy && !dx) continue;
                        const int ny = y + dy, nx = x + dx;
                        if (ny < 0 || nx < 0 || ny >= R || nx >= R) continue;
                        if (!filled[size_t(ny) * R + nx]) continue;
                        for (int ch = 0; ch < 3; ++ch) acc[ch] += tex.pixels.at(ny, nx, ch);
                        ++cnt;
                    }
                if (cnt > 0) {
                    for (int ch = 0; ch < 3; ++ch) next.at(y, x, ch) = float(acc[ch] / cnt);
                    nextFilled[size_t(y) * R + x] = 1;
                    progress = true;
                }
            }
        filled.swap(nextFilled);
        tex.pixels = std::move(next);
    }
}

}  // namespace dlt
