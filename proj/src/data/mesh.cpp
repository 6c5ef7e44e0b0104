#include "delight/data/mesh.hpp"

#include <cmath>

#include "delight/core/errors.hpp"
#include "delight/core/sh.hpp"

namespace dlt {

void TriMesh::validate() const {
    if (positions.size() != normals.size() || positions.size() != uvs.size())
        throw DataError("mesh: attribute arrays disagree in length");
    for (const auto& f : faces)
        for (int i : f)
            if (i < 0 || size_t(i) >= positions.size()) throw DataError("mesh: face index out of range");
    for (const auto& n : normals)
        if (std::abs(n.norm() - 1.0) > 1e-4) throw DataError("mesh: non-unit normal");
    for (const auto& uv : uvs)
        if (uv.x() < -1e-9 || uv.x() > 1 + 1e-9 || uv.y() < -1e-9 || uv.y() > 1 + 1e-9)
            throw DataError("mesh: UV outside [0,1]^2");
}

void TriMesh::recomputeVertexNormals() {
    normals.assign(positions.size(), Eigen::Vector3d::Zero());
    for (const auto& f : faces) {
        const Eigen::Vector3d e1 = positions[f[1]] - positions[f[0]];
        const Eigen::Vector3d e2 = positions[f[2]] - positions[f[0]];
        const Eigen::Vector3d fn = e1.cross(e2);  // area-weighted
        for (int i : f) normals[i] += fn;
    }
    for (auto& n : normals) {
        const double len = n.norm();
        n = len > 1e-12 ? Eigen::Vector3d(n / len) : Eigen::Vector3d(0, 0, 1);
    }
}

void Camera::validate() const {
    const Eigen::Matrix3d rtr = rotation.transpose() * rotation;
    if ((rtr - Eigen::Matrix3d::Identity()).norm() > 1e-6 ||
        std::abs(rotation.determinant() - 1.0) > 1e-6)
        throw DataError("camera: rotation is not orthonormal");
    if (fx <= 0 || fy <= 0 || width <= 0 || height <= 0)
        throw DataError("camera: invalid intrinsics");
}

Camera Camera::lookAt(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                      const Eigen::Vector3d& up, double focalPx, int width, int height) {
    Camera cam;
    const Eigen::Vector3d fwd = (target - eye).normalized();     // camera +z
    const Eigen::Vector3d right = fwd.cross(up).normalized();    // camera +x
    const Eigen::Vector3d down = fwd.cross(right).normalized();  // camera +y (image y grows down)
    cam.rotation.row(0) = right;
    cam.rotation.row(1) = down;
    cam.rotation.row(2) = fwd;
    cam.translation = -cam.rotation * eye;
    cam.fx = cam.fy = focalPx;
    cam.cx = 0.5 * width;
    cam.cy = 0.5 * height;
    cam.width = width;
    cam.height = height;
    return cam;
}

void ScanAsset::validate() const {
    mesh.validate();
    if (albedoTex.channels() != 3 || specTex.channels() != 1 || normalTex.channels() != 3 ||
        skinTex.channels() != 1)
        throw DataError("scan asset: wrong texture channel counts");
    for (size_t i = 0; i < albedoTex.size(); ++i) {
        const float v = albedoTex.data()[i];
        if (v < 0.0f || v > 1.0f) throw DataError("scan asset: albedo outside [0,1]");
    }
}

// smooth random field: base + gaussian blobs
static Image randomSmoothTexture(int res, int channels, const std::vector<float>& base,
                                 double amplitude, int nBlobs, Rng& rng) {
    Image tex(res, res, channels);
    for (int y = 0; y < res; ++y)
        for (int x = 0; x < res; ++x)
            for (int c = 0; c < channels; ++c) tex.at(y, x, c) = base[c];
    for (int b = 0; b < nBlobs; ++b) {
        const double cx = rng.uniform() * res;
        const double cy = rng.uniform() * res;
        const double sigma = res * (0.08 + 0.15 * rng.uniform());
        std::vector<double> delta(channels);
        for (int c = 0; c < channels; ++c) delta[c] = amplitude * (rng.uniform() - 0.5);
        for (int y = 0; y < res; ++y)
            for (int x = 0; x < res; ++x) {
                const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                const double g = std::exp(-0.5 * d2 / (sigma * sigma));
                for (int c = 0; c < channels; ++c)
                    tex.at(y, x, c) = float(tex.at(y, x, c) + delta[c] * g);
            }
    }
    for (size_t i = 0; i < tex.size(); ++i)
        tex.data()[i] = std::clamp(tex.data()[i], 0.0f, 1.0f);
    return tex;
}

static void fillAssetTextures(ScanAsset& asset, int texRes, Rng& rng) {
    // skin-tone-ish base with random tint
    const float r = float(0.55 + 0.25 * rng.uniform());
    const float g = float(r * (0.68 + 0.12 * rng.uniform()));
    const float b = float(g * (0.72 + 0.12 * rng.uniform()));
    asset.albedoTex = randomSmoothTexture(texRes, 3, {r, g, b}, 0.35, 6, rng);
    asset.specTex = randomSmoothTexture(texRes, 1, {float(0.2 + 0.2 * rng.uniform())}, 0.2, 3, rng);

    asset.normalTex = Image(texRes, texRes, 3);
    Image perturb = randomSmoothTexture(texRes, 2, {0.5f, 0.5f}, 0.5, 4, rng);
    for (int y = 0; y < texRes; ++y)
        for (int x = 0; x < texRes; ++x) {
            Eigen::Vector3d n(0.3 * (perturb.at(y, x, 0) - 0.5), 0.3 * (perturb.at(y, x, 1) - 0.5),
                              1.0);
            n.normalize();
            asset.normalTex.at(y, x, 0) = float(n.x());
            asset.normalTex.at(y, x, 1) = float(n.y());
            asset.normalTex.at(y, x, 2) = float(n.z());
        }

    // skin = central ellipse of UV space
    asset.skinTex = Image(texRes, texRes, 1);
    for (int y = 0; y < texRes; ++y)
        for (int x = 0; x < texRes; ++x) {
            const double u = (x + 0.5) / texRes - 0.5;
            const double v = (y + 0.5) / texRes - 0.5;
            asset.skinTex.at(y, x) = (u * u / 0.17 + v * v / 0.20) < 1.0 ? 1.0f : 0.0f;
        }
}

ScanAsset makeProceduralFace(int gridN, int texRes, Rng& rng) {
    ScanAsset asset;
    TriMesh& m = asset.mesh;

    // random per-subject shape parameters
    const double domeH = 0.45 + 0.15 * rng.uniform();
    const double noseH = 0.10 + 0.08 * rng.uniform();
    const double eyeDepth = 0.05 + 0.04 * rng.uniform();
    const double cheek = 0.03 + 0.05 * rng.uniform();

    auto heightAt = [&](double u, double v) {
        // u right, v down in UV; face occupies [-1,1]^2 in x/z world
        const double x = 2.0 * u - 1.0;
        const double z = 1.0 - 2.0 * v;
        const double r2 = x * x + z * z;
        double h = domeH * std::exp(-0.9 * r2);
        h += noseH * std::exp(-((x * x) / 0.02 + (z + 0.05) * (z + 0.05) / 0.08));
        h -= eyeDepth * std::exp(-((x - 0.33) * (x - 0.33) + (z - 0.28) * (z - 0.28)) / 0.02);
        h -= eyeDepth * std::exp(-((x + 0.33) * (x + 0.33) + (z - 0.28) * (z - 0.28)) / 0.02);
        h += cheek * std::exp(-((std::abs(x) - 0.55) * (std::abs(x) - 0.55) +
                                (z + 0.25) * (z + 0.25)) / 0.05);
        return h;
    };

    m.positions.reserve(size_t(gridN) * gridN);
    for (int j = 0; j < gridN; ++j)
        for (int i = 0; i < gridN; ++i) {
            const double u = double(i) / (gridN - 1);
            const double v = double(j) / (gridN - 1);
            const double x = 2.0 * u - 1.0;
            const double z = 1.0 - 2.0 * v;
            m.positions.emplace_back(x, heightAt(u, v), z);
            m.uvs.emplace_back(u, v);
        }
    for (int j = 0; j + 1 < gridN; ++j)
        for (int i = 0; i + 1 < gridN; ++i) {
            const int a = j * gridN + i;
            const int b = j * gridN + i + 1;
            const int c = (j + 1) * gridN + i;
            const int d = (j + 1) * gridN + i + 1;
            m.faces.push_back({a, b, c});
            m.faces.push_back({b, d, c});
        }
    m.recomputeVertexNormals();

    auto vertAt = [&](double u, double v) {
        const int i = std::clamp(int(std::lround(u * (gridN - 1))), 0, gridN - 1);
        const int j = std::clamp(int(std::lround(v * (gridN - 1))), 0, gridN - 1);
        return j * gridN + i;
    };
    // u = 0 is world -x, which the frontal camera sees on the image RIGHT;
    // eyeL (image-left) is therefore the high-u vertex
    m.landmarkVerts = {vertAt(0.665, 0.36), vertAt(0.335, 0.36), vertAt(0.5, 0.525),
                       vertAt(0.60, 0.68), vertAt(0.40, 0.68)};

    fillAssetTextures(asset, texRes, rng);
    return asset;
}

ScanAsset makeTexturedSphere(int rings, int texRes, Rng& rng) {
    ScanAsset asset;
    TriMesh& m = asset.mesh;
    const int segs = 2 * rings;
    for (int j = 0; j <= rings; ++j)
        for (int i = 0; i <= segs; ++i) {
            const double v = double(j) / rings;
            const double u = double(i) / segs;
            const double theta = v * kPi;           // from +z pole
            const double phi = u * 2.0 * kPi - kPi / 2.0;  // u=0.5 faces +y
            const Eigen::Vector3d p(std::sin(theta) * std::cos(phi),
                                    std::sin(theta) * std::sin(phi), std::cos(theta));
            m.positions.push_back(p);
            m.normals.push_back(p);
            m.uvs.emplace_back(u, v);
        }
    const int stride = segs + 1;
    for (int j = 0; j < rings; ++j)
        for (int i = 0; i < segs; ++i) {
            const int a = j * stride + i;
            const int b = j * stride + i + 1;
            const int c = (j + 1) * stride + i;
            const int d = (j + 1) * stride + i + 1;
            if (j > 0) m.faces.push_back({a, b, c});
            if (j + 1 < rings) m.faces.push_back({b, d, c});
        }

    auto vertAt = [&](double u, double v) {
        const int i = std::clamp(int(std::lround(u * segs)), 0, segs);
        const int j = std::clamp(int(std::lround(v * rings)), 0, rings);
        return j * stride + i;
    };
    m.landmarkVerts = {vertAt(0.42, 0.42), vertAt(0.58, 0.42), vertAt(0.5, 0.52),
                       vertAt(0.44, 0.62), vertAt(0.56, 0.62)};

    fillAssetTextures(asset, texRes, rng);
    return asset;
}

Camera frontalCamera(int imageSize, double distance, double yawJitter, double pitchJitter) {
    // subject at origin facing +y, world up +z
    const Eigen::Vector3d base(0, distance, 0);
    const Eigen::AngleAxisd yaw(yawJitter, Eigen::Vector3d::UnitZ());
    const Eigen::AngleAxisd pitch(pitchJitter, Eigen::Vector3d::UnitX());
    const Eigen::Vector3d eye = yaw * (pitch * base);
    return Camera::lookAt(eye, Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ(),
                          1.1 * imageSize, imageSize, imageSize);
}

}  // namespace dlt
