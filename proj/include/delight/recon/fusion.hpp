#pragma once

#include "delight/recon/scene.hpp"

namespace dlt {

// UV texture with an explicit validity mask; texels without view coverage
// are flagged, then filled by nearest-valid diffusion so downstream
// consumers never read uninitialized values.
struct UVTexture {
    Image pixels;    // R x R x 3
    Image validity;  // R x R x 1, {0,1}

    int resolution() const { return pixels.height(); }
};

// Per-texel surface attributes from rasterizing the mesh in UV space.
struct UVGeometry {
    int resolution = 0;
    Image position;  // 3ch world
    Image normal;    // 3ch world unit
    Image coverage;  // 1ch {0,1}
};

UVGeometry rasterizeUV(const TriMesh& mesh, int resolution);

struct FusionParams {
    double blendExponent = 2.0;     // w = max(0, n.v)^gamma
    double depthEpsilonScale = 1e-3;  // visibility epsilon, relative to scene scale
};

struct PerViewAlbedo {
    Image albedo;    // camera frame, linear
    Image validity;  // 1ch {0,1}
};

// Projects every covered texel into every view, depth-tests against the
// view's z-buffer, and blends visible samples by view-angle cosine weight.
UVTexture fuseToUv(const std::vector<PerViewAlbedo>& albedos,
                   const std::vector<ReconView>& views, const TriMesh& mesh, int resolution,
                   const FusionParams& params = {});

// Iterative 8-neighbour averaging fill of invalid texels (validity mask is
// left untouched; it records original coverage).
void fillInvalidTexels(UVTexture& tex);

double sceneScale(const TriMesh& mesh);

}  // namespace dlt
