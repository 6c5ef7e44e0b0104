#pragma once

#include <string>
#include <vector>

#include "delight/core/sh.hpp"
#include "delight/data/rasterizer.hpp"

namespace dlt {

// One calibrated capture view: raw linear image, camera, landmarks, skin mask.
struct ReconView {
    std::string id;
    Camera camera;
    Image image;
    Image skinMask;  // 1ch {0,1}, image resolution
    std::vector<Eigen::Vector2d> landmarks;
};

struct SceneBundle {
    TriMesh mesh;
    std::vector<ReconView> views;
};

// Disk layout: <dir>/mesh.obj (OBJ subset: v, vt, vn, f i/i/i),
// <dir>/cameras.txt (per-view records, see camera file docs in README),
// images and masks as .fimg next to them.
void writeSceneBundle(const std::string& dir, const SceneBundle& bundle);
SceneBundle readSceneBundle(const std::string& dir);

// OBJ subset: one shared index per vertex (f v/v/v form).
void writeObjMesh(const std::string& path, const TriMesh& mesh);
TriMesh readObjMesh(const std::string& path);

// Synthetic capture: cameras on an arc around a frontal asset. Lighting is
// either an environment map (full shading model) or a band-limited SH
// environment (pure Lambertian), which keeps the SH solver oracle exact.
struct SyntheticBundleConfig {
    int nViews = 16;
    int imageSize = 128;
    double arcDegrees = 70.0;  // total yaw sweep
    double distance = 3.2;
    double specStrength = 0.0;
    double specExponent = 24.0;
};

SceneBundle makeSyntheticBundleSh(const ScanAsset& asset, const ShLighting& sh,
                                  const SyntheticBundleConfig& cfg);
SceneBundle makeSyntheticBundleEnv(const ScanAsset& asset, const EnvironmentMap& env,
                                   const SyntheticBundleConfig& cfg);

}  // namespace dlt
