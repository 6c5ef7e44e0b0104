#pragma once

#include <functional>

#include "delight/data/align.hpp"
#include "delight/nn/unet.hpp"
#include "delight/recon/refine.hpp"

namespace dlt {

// Maps an aligned, masked face crop to an aligned albedo crop. The network
// route is the production delighter; tests substitute ground-truth albedo
// here to isolate geometry/fusion/solver correctness.
using ViewDelighter = std::function<Image(const Image& alignedImage, const Image& alignedMask)>;

ViewDelighter networkDelighter(const nn::DelightModel& base, const nn::EnhancerModel* enhancer);

struct DelightViewsResult {
    std::vector<PerViewAlbedo> albedos;  // original camera frames
    std::vector<ReconView> usedViews;    // views that survived alignment
    std::vector<std::string> warnings;
};

// Per view: landmark alignment -> mask -> delight -> inverse warp. Views
// whose landmarks cannot be aligned are dropped with a warning; fewer than
// 3 surviving views is an error.
DelightViewsResult delightViews(const std::vector<ReconView>& views, const ViewDelighter& delighter,
                                int alignedSize);

// Sharpness-ranked frame selection with a minimum temporal spacing of
// total/(2V) frames. Returns indices in ascending frame order.
std::vector<int> selectFrames(const std::vector<Image>& frames, int V);

struct ReconstructionConfig {
    int textureResolution = 1024;
    int alignedSize = 128;  // delighting crop resolution (model image size)
    FusionParams fusion;
    RefineConfig refine;
};

struct ReconstructionResult {
    UVTexture fusedTexture;
    UVTexture finalTexture;
    ShFitResult shFit;
    std::vector<std::string> warnings;
};

// Full prior-grounded pipeline: delight views, fuse to UV, fit global SH
// lighting, refine the texture against the raw views.
ReconstructionResult reconstruct(const SceneBundle& bundle, const ViewDelighter& delighter,
                                 const ReconstructionConfig& cfg);

}  // namespace dlt
