#pragma once

#include <vector>

#include "delight/data/env_map.hpp"
#include "delight/data/mesh.hpp"

namespace dlt {

// Per-pixel geometry buffers from a z-buffer rasterization pass.
// Perspective-correct attribute interpolation; degenerate (zero screen
// area) triangles are skipped.
struct GBuffer {
    int width = 0, height = 0;
    Image depth;     // 1ch camera-space z, 0 where empty
    Image normal;    // 3ch world-space interpolated vertex normal (unit)
    Image uv;        // 2ch
    Image position;  // 3ch world-space
    Image coverage;  // 1ch {0,1}
    std::vector<int> faceId;  // -1 where empty

    bool covered(int y, int x) const { return coverage.at(y, x) > 0.5f; }
};

GBuffer rasterize(const TriMesh& mesh, const Camera& cam);

// Directional light: dir points from the surface toward the light,
// weight = radiance * solid angle of the emitting region.
struct DirectionalLight {
    Eigen::Vector3d dir;
    Eigen::Vector3d weight;
};

// One light per env texel; exact for the texel-quadrature lighting model.
std::vector<DirectionalLight> envToLights(const EnvironmentMap& env);

struct ShadingParams {
    double specExponent = 32.0;
    double specStrength = 1.0;  // global multiplier on spec_tex
    bool useNormalMap = true;
};

// Lambertian + Blinn-Phong under a directional light set.
Image shadeImage(const GBuffer& gb, const ScanAsset& asset, const Camera& cam,
                 const std::vector<DirectionalLight>& lights, const ShadingParams& params);

// Unlit rasterization of the asset's albedo texture.
Image bakeAlbedo(const GBuffer& gb, const ScanAsset& asset);

// Lambertian shading under band-limited lighting: albedo times the SH
// irradiance at the interpolated surface normal.
Image shadeWithSh(const GBuffer& gb, const ScanAsset& asset, const ShLighting& sh);

// coverage AND skin-region label
Image bakeSkinMask(const GBuffer& gb, const ScanAsset& asset);

struct RenderResult {
    Image image;
    Image albedoGt;
    Image mask;
    GBuffer gbuffer;
};

// Full scan rendering: shaded image, ground-truth albedo, skin mask.
// Throws DataError when nothing is covered.
RenderResult renderScan(const ScanAsset& asset, const EnvironmentMap& env, const Camera& cam,
                        const ShadingParams& params);

std::vector<Eigen::Vector2d> projectLandmarks(const TriMesh& mesh, const Camera& cam);

}  // namespace dlt
