#include "delight/data/rasterizer.hpp"

#include <cmath>

#include "delight/core/errors.hpp"

namespace dlt {

GBuffer rasterize(const TriMesh& mesh, const Camera& cam) {
    GBuffer gb;
    gb.width = cam.width;
    gb.height = cam.height;
    gb.depth = Image(cam.height, cam.width, 1, 0.0f);
    gb.normal = Image(cam.height, cam.width, 3);
    gb.uv = Image(cam.height, cam.width, 2);
    gb.position = Image(cam.height, cam.width, 3);
    gb.coverage = Image(cam.height, cam.width, 1, 0.0f);
    gb.faceId.assign(size_t(cam.width) * cam.height, -1);

    std::vector<float> zbuf(size_t(cam.width) * cam.height, 1e30f);

    for (size_t fi = 0; fi < mesh.faces.size(); ++fi) {
        const auto& f = mesh.faces[fi];
        Eigen::Vector3d s[3];
        bool behind = false;
        for (int k = 0; k < 3; ++k) {
            s[k] = cam.project(mesh.positions[f[k]]);
            if (s[k].z() <= 1e-6) behind = true;
        }
        if (behind) continue;

        const double area = (s[1].x() - s[0].x()) * (s[2].y() - s[0].y()) -
                            (s[2].x() - s[0].x()) * (s[1].y() - s[0].y());
        if (std::abs(area) < 1e-12) continue;  // degenerate in screen space

        const int x0 = std::max(0, int(std::floor(std::min({s[0].x(), s[1].x(), s[2].x()}))));
        const int x1 = std::min(cam.width - 1, int(std::ceil(std::max({s[0].x(), s[1].x(), s[2].x()}))));
        const int y0 = std::max(0, int(std::floor(std::min({s[0].y(), s[1].y(), s[2].y()}))));
        const int y1 = std::min(cam.height - 1, int(std::ceil(std::max({s[0].y(), s[1].y(), s[2].y()}))));
        if (x0 > x1 || y0 > y1) continue;

        const double invZ[3] = {1.0 / s[0].z(), 1.0 / s[1].z(), 1.0 / s[2].z()};

        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double px = x + 0.5, py = y + 0.5;
                double w0 = (s[1].x() - px) * (s[2].y() - py) - (s[2].x() - px) * (s[1].y() - py);
                double w1 = (s[2].x() - px) * (s[0].y() - py) - (s[0].x() - px) * (s[2].y() - py);
                double w2 = (s[0].x() - px) * (s[1].y() - py) - (s[1].x() - px) * (s[0].y() - py);
                w0 /= area;
                w1 /= area;
                w2 /= area;
                if (w0 < 0 || w1 < 0 || w2 < 0) continue;

                // perspective-correct: interpolate attr/z and 1/z
                const double iz = w0 * invZ[0] + w1 * invZ[1] + w2 * invZ[2];
                const double z = 1.0 / iz;
                const size_t idx = size_t(y) * cam.width + x;
                if (z >= zbuf[idx]) continue;
                zbuf[idx] = float(z);

                const double c0 = w0 * invZ[0] * z, c1 = w1 * invZ[1] * z, c2 = w2 * invZ[2] * z;
                const Eigen::Vector3d pos = c0 * mesh.positions[f[0]] +
                                            c1 * mesh.positions[f[1]] + c2 * mesh.positions[f[2]];
                Eigen::Vector3d nrm = c0 * mesh.normals[f[0]] + c1 * mesh.normals[f[1]] +
                                      c2 * mesh.normals[f[2]];
                const double nl = nrm.norm();
                if (nl > 1e-12) nrm /= nl;
                const Eigen::Vector2d uv =
                    c0 * mesh.uvs[f[0]] + c1 * mesh.uvs[f[1]] + c2 * mesh.uvs[f[2]];

                gb.depth.at(y, x) = float(z);
                gb.coverage.at(y, x) = 1.0f;
                gb.faceId[idx] = int(fi);
                for (int ch = 0; ch < 3; ++ch) {
                    gb.normal.at(y, x, ch) = float(nrm[ch]);
                    gb.position.at(y, x, ch) = float(pos[ch]);
                }
                gb.uv.at(y, x, 0) = float(uv.x());
                gb.uv.at(y, x, 1) = float(uv.y());
            }
    }
    return gb;
}

std::vector<DirectionalLight> envToLights(const EnvironmentMap& env) {
    std::vector<DirectionalLight> lights;
    lights.reserve(size_t(env.height()) * env.width());
    for (int v = 0; v < env.height(); ++v) {
        const double dw = equirectTexelSolidAngle(v, env.width(), env.height());
        for (int u = 0; u < env.width(); ++u) {
            DirectionalLight l;
            l.dir = equirectDir(u, v, env.width(), env.height());
            l.weight = Eigen::Vector3d(env.pixels.at(v, u, 0), env.pixels.at(v, u, 1),
                                       env.pixels.at(v, u, 2)) * dw;
            lights.push_back(l);
        }
    }
    return lights;
}

static void texSample(const Image& tex, double u, double v, float* out, int channels) {
    const float x = float(u * (tex.width() - 1));
    const float y = float(v * (tex.height() - 1));
    for (int c = 0; c < channels; ++c) out[c] = tex.sample(y, x, c);
}

// per-face tangent from UV parametrization, for tangent-space normals
static Eigen::Vector3d faceTangent(const TriMesh& mesh, int fi) {
    const auto& f = mesh.faces[fi];
    const Eigen::Vector3d e1 = mesh.positions[f[1]] - mesh.positions[f[0]];
    const Eigen::Vector3d e2 = mesh.positions[f[2]] - mesh.positions[f[0]];
    const Eigen::Vector2d d1 = mesh.uvs[f[1]] - mesh.uvs[f[0]];
    const Eigen::Vector2d d2 = mesh.uvs[f[2]] - mesh.uvs[f[0]];
    const double det = d1.x() * d2.y() - d2.x() * d1.y();
    if (std::abs(det) < 1e-12) return e1.normalized();
    return ((e1 * d2.y() - e2 * d1.y()) / det).normalized();
}

Image shadeImage(const GBuffer& gb, const ScanAsset& asset, const Camera& cam,
                 const std::vector<DirectionalLight>& lights, const ShadingParams& params) {
    Image out(gb.height, gb.width, 3, 0.0f);
    const Eigen::Vector3d eye = cam.center();

    for (int y = 0; y < gb.height; ++y)
        for (int x = 0; x < gb.width; ++x) {
            if (!gb.covered(y, x)) continue;
            const size_t idx = size_t(y) * gb.width + x;
            const double u = gb.uv.at(y, x, 0), v = gb.uv.at(y, x, 1);

            float alb[3], spec[1], ntex[3];
            texSample(asset.albedoTex, u, v, alb, 3);
            texSample(asset.specTex, u, v, spec, 1);

            Eigen::Vector3d n(gb.normal.at(y, x, 0), gb.normal.at(y, x, 1), gb.normal.at(y, x, 2));
            if (params.useNormalMap) {
                texSample(asset.normalTex, u, v, ntex, 3);
                const Eigen::Vector3d tRaw = faceTangent(asset.mesh, gb.faceId[idx]);
                const Eigen::Vector3d t = (tRaw - n * n.dot(tRaw)).normalized();
                const Eigen::Vector3d b = n.cross(t);
                n = (t * ntex[0] + b * ntex[1] + n * ntex[2]).normalized();
            }

            const Eigen::Vector3d p(gb.position.at(y, x, 0), gb.position.at(y, x, 1),
                                    gb.position.at(y, x, 2));
            const Eigen::Vector3d viewDir = (eye - p).normalized();

            Eigen::Vector3d diffuse = Eigen::Vector3d::Zero();
            Eigen::Vector3d specular = Eigen::Vector3d::Zero();
            for (const auto& light : lights) {
                const double ndl = n.dot(light.dir);
                if (ndl > 0) diffuse += light.weight * ndl;
                const Eigen::Vector3d h = (light.dir + viewDir).normalized();
                const double ndh = n.dot(h);
                if (ndh > 0 && ndl > 0)
                    specular += light.weight * std::pow(ndh, params.specExponent);
            }

            for (int ch = 0; ch < 3; ++ch)
                out.at(y, x, ch) = float(alb[ch] / kPi * diffuse[ch] +
                                         params.specStrength * spec[0] * specular[ch]);
        }
    return out;
}

Image bakeAlbedo(const GBuffer& gb, const ScanAsset& asset) {
    Image out(gb.height, gb.width, 3, 0.0f);
    for (int y = 0; y < gb.height; ++y)
        for (int x = 0; x < gb.width; ++x) {
            if (!gb.covered(y, x)) continue;
            float alb[3];
            texSample(asset.albedoTex, gb.uv.at(y, x, 0), gb.uv.at(y, x, 1), alb, 3);
            for (int ch = 0; ch < 3; ++ch) out.at(y, x, ch) = alb[ch];
        }
    return out;
}

Image shadeWithSh(const GBuffer& gb, const ScanAsset& asset, const ShLighting& sh) {
    Image out(gb.height, gb.width, 3, 0.0f);
    for (int y = 0; y < gb.height; ++y)
        for (int x = 0; x < gb.width; ++x) {
            if (!gb.covered(y, x)) continue;
            float alb[3];
            texSample(asset.albedoTex, gb.uv.at(y, x, 0), gb.uv.at(y, x, 1), alb, 3);
            const Eigen::Vector3d n(gb.normal.at(y, x, 0), gb.normal.at(y, x, 1),
                                    gb.normal.at(y, x, 2));
            const Eigen::Vector3d e = sh.irradiance(n);
            for (int ch = 0; ch < 3; ++ch) out.at(y, x, ch) = float(alb[ch] * e[ch]);
        }
    return out;
}

Image bakeSkinMask(const GBuffer& gb, const ScanAsset& asset) {
    Image out(gb.height, gb.width, 1, 0.0f);
    for (int y = 0; y < gb.height; ++y)
        for (int x = 0; x < gb.width; ++x) {
            if (!gb.covered(y, x)) continue;
            float skin[1];
            texSample(asset.skinTex, gb.uv.at(y, x, 0), gb.uv.at(y, x, 1), skin, 1);
            out.at(y, x) = skin[0] >= 0.5f ? 1.0f : 0.0f;
        }
    return out;
}

RenderResult renderScan(const ScanAsset& asset, const EnvironmentMap& env, const Camera& cam,
                        const ShadingParams& params) {
    RenderResult res;
    res.gbuffer = rasterize(asset.mesh, cam);
    bool any = false;
    for (int y = 0; y < res.gbuffer.height && !any; ++y)
        for (int x = 0; x < res.gbuffer.width; ++x)
            if (res.gbuffer.covered(y, x)) {
                any = true;
                break;
            }
    if (!any) throw DataError("renderScan: camera sees no part of the asset (empty coverage)");

    const auto lights = envToLights(env);
    res.image = shadeImage(res.gbuffer, asset, cam, lights, params);
    res.albedoGt = bakeAlbedo(res.gbuffer, asset);
    res.mask = bakeSkinMask(res.gbuffer, asset);
    return res;
}

std::vector<Eigen::Vector2d> projectLandmarks(const TriMesh& mesh, const Camera& cam) {
    std::vector<Eigen::Vector2d> pts;
    for (int vi : mesh.landmarkVerts) {
        if (vi < 0) throw DataError("projectLandmarks: mesh has no landmark vertices");
        const Eigen::Vector3d s = cam.project(mesh.positions[vi]);
        if (s.z() <= 0) throw DataError("projectLandmarks: landmark behind camera");
        pts.emplace_back(s.x(), s.y());
    }
    return pts;
}

}  // namespace dlt
