#pragma once

#include <vector>

#include "delight/data/rasterizer.hpp"

namespace dlt {

// One-light-at-a-time capture of a subject from a fixed camera: one frame
// per rig light plus the per-light solid angles needed to integrate
// arbitrary environments. The uniform-lighting albedo proxy is stored with
// the capture (it inherits the rig's specular baking and frame blur, which
// is the point of the OLAT source style).
struct OlatCapture {
    std::vector<Image> frames;
    std::vector<Eigen::Vector3d> lightDirs;   // unit, toward the light
    std::vector<double> solidAngles;          // steradians, sum ~ 4pi
    double albedoProxyScale = 1.0;
    Image albedoProxy;
    Image mask;
    std::vector<Eigen::Vector2d> landmarks;

    // Voronoi cell assignment on a fixed direction grid, used both to
    // integrate the per-light solid angles and to average env radiance
    // over each light's cell at relight time.
    int gridHeight = 0, gridWidth = 0;
    std::vector<int> cellOfGridTexel;

    void validate() const;
};

// Deterministic light rig: Fibonacci-spiral directions; solid angles are
// the spherical Voronoi cell areas integrated on an equirect grid.
std::vector<Eigen::Vector3d> fibonacciSphere(int n);

OlatCapture captureOlat(const ScanAsset& asset, const Camera& cam, int nLights,
                        double frameBlurSigma, const ShadingParams& shading,
                        int voronoiGridHeight = 64);

// Linear OLAT relighting: out = sum_i w_i * frames[i] with
// w_i = (mean env radiance over light i's cell) * solidAngles[i].
Image relightOlat(const OlatCapture& cap, const EnvironmentMap& env);

}  // namespace dlt
