#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "delight/core/image.hpp"
#include "delight/core/rng.hpp"

namespace dlt {

// Indexed triangle mesh with one shared index per vertex; positions,
// normals and UVs are parallel arrays. UVs in [0,1]^2, normals unit.
struct TriMesh {
    std::vector<Eigen::Vector3d> positions;
    std::vector<Eigen::Vector3d> normals;
    std::vector<Eigen::Vector2d> uvs;
    std::vector<std::array<int, 3>> faces;

    // five labeled vertices: eyeL, eyeR, nose, mouthL, mouthR
    std::array<int, 5> landmarkVerts = {-1, -1, -1, -1, -1};

    void validate() const;
    void recomputeVertexNormals();
};

// Pinhole camera, world-to-camera convention: x_cam = R x_world + t,
// camera looks along +z in its own frame.
struct Camera {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    int width = 0, height = 0;

    static Camera lookAt(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                         const Eigen::Vector3d& up, double focalPx, int width, int height);

    Eigen::Vector3d toCameraFrame(const Eigen::Vector3d& p) const {
        return rotation * p + translation;
    }
    // returns (px, py, depth); depth <= 0 means behind the camera
    Eigen::Vector3d project(const Eigen::Vector3d& world) const {
        const Eigen::Vector3d pc = toCameraFrame(world);
        if (pc.z() <= 0) return {0, 0, pc.z()};
        return {fx * pc.x() / pc.z() + cx, fy * pc.y() / pc.z() + cy, pc.z()};
    }
    Eigen::Vector3d center() const { return -rotation.transpose() * translation; }
    void validate() const;
};

// Scan asset: mesh plus UV reflectance maps. skin_tex labels the region
// treated as facial skin when building masks.
struct ScanAsset {
    TriMesh mesh;
    Image albedoTex;  // RGB, [0,1]
    Image specTex;    // 1ch specular albedo
    Image normalTex;  // 3ch tangent-space, components in [-1,1], +z is flat
    Image skinTex;    // 1ch {0,1}

    void validate() const;
};

// Procedural desk-scale subjects. The height-field "face" bulges toward
// +y with eye sockets and a nose ridge; the sphere variant exercises
// curvature-heavy shading. Textures are smooth random fields.
ScanAsset makeProceduralFace(int gridN, int texRes, Rng& rng);
ScanAsset makeTexturedSphere(int rings, int texRes, Rng& rng);

// Frontal camera for an asset centered at the origin and facing +y.
Camera frontalCamera(int imageSize, double distance, double yawJitter, double pitchJitter);

}  // namespace dlt
