#include "delight/recon/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "delight/core/errors.hpp"

namespace dlt {

ViewDelighter networkDelighter(const nn::DelightModel& base, const nn::EnhancerModel* enhancer) {
    return [&base, enhancer](const Image& alignedImage, const Image& alignedMask) {
        Image albedo = base.predict(alignedImage, alignedMask, nn::Source::rendered);
        if (enhancer) {
            const Image refined = enhancer->enhance(alignedImage, albedo);
            albedo = resizeBilinear(refined, alignedImage.height(), alignedImage.width());
        }
        return albedo;
    };
}

DelightViewsResult delightViews(const std::vector<ReconView>& views, const ViewDelighter& delighter,
                                int alignedSize) {
    DelightViewsResult out;
    for (const auto& view : views) {
        Similarity2D toCanon;
        try {
            toCanon = fitSimilarity(view.landmarks, canonicalTemplate(alignedSize));
        } catch (const DataError& e) {
            out.warnings.push_back("view '" + view.id + "' dropped: " + e.what());
            continue;
        }

        const Image alignedImage = warpSimilarity(view.image, toCanon, alignedSize, alignedSize);
        const Image alignedMask =
            warpSimilarity(view.skinMask, toCanon, alignedSize, alignedSize, true);

        const Image alignedAlbedo = delighter(alignedImage, alignedMask);

        PerViewAlbedo pv;
        const Similarity2D back = toCanon.inverse();
        pv.albedo = warpSimilarity(alignedAlbedo, back, view.image.height(), view.image.width());
        // validity: inside the skin mask both before and after the round trip
        Image maskBack =
            warpSimilarity(alignedMask, back, view.image.height(), view.image.width(), true);
        pv.validity = Image(view.image.height(), view.image.width(), 1, 0.0f);
        for (int y = 0; y < pv.validity.height(); ++y)
            for (int x = 0; x < pv.validity.width(); ++x)
                pv.validity.at(y, x) =
                    (maskBack.at(y, x) > 0.5f && view.skinMask.at(y, x) > 0.5f) ? 1.0f : 0.0f;

        out.albedos.push_back(std::move(pv));
        out.usedViews.push_back(view);
    }
    // small bundles are allowed as-is; the error is about alignment
    // failures eating into a larger set
    const size_t minimum = std::min<size_t>(3, views.size());
    if (out.usedViews.size() < minimum || out.usedViews.empty())
        throw DataError("delightViews: only " + std::to_string(out.usedViews.size()) +
                        " of " + std::to_string(views.size()) + " views survived alignment");
    return out;
}

std::vector<int> selectFrames(const std::vector<Image>& frames, int V) {
    const int n = int(frames.size());
    if (V <= 0) throw DataError("selectFrames: V must be positive");
    if (n < V) throw DataError("selectFrames: fewer frames than requested (" + std::to_string(n) +
                               " < " + std::to_string(V) + ")");

    std::vector<std::pair<double, int>> ranked(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) ranked[size_t(i)] = {laplacianVariance(frames[size_t(i)]), i};
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;  // deterministic tie break
    });

    const double spacing = double(n) / (2.0 * V);
    std::vector<int> picked;
    for (const auto& [sharpness, idx] : ranked) {
        if (int(picked.size()) == V) break;
        bool ok = true;
        for (int p : picked)
            if (std::abs(p - idx) < spacing) {
                ok = false;
                break;
            }
        if (ok) picked.push_back(idx);
    }
    // a maximal spacing-separated set always reaches V = n/(2*spacing)
    std::sort(picked.begin(), picked.end());
    return picked;
}

ReconstructionResult reconstruct(const SceneBundle& bundle, const ViewDelighter& delighter,
                                 const ReconstructionConfig& cfg) {
    ReconstructionResult res;
    DelightViewsResult dv = delightViews(bundle.views, delighter, cfg.alignedSize);
    res.warnings = dv.warnings;

    res.fusedTexture =
        fuseToUv(dv.albedos, dv.usedViews, bundle.mesh, cfg.textureResolution, cfg.fusion);
    res.shFit = fitShLighting(dv.usedViews, res.fusedTexture, bundle.mesh);

    const RefineResult refined =
        refineAlbedo(res.fusedTexture, res.shFit.lighting, dv.usedViews, bundle.mesh, cfg.refine);
    res.finalTexture = refined.texture;
    return res;
}

}  // namespace dlt
