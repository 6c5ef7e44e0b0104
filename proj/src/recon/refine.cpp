#include "delight/recon/refine.hpp"

#include <cmath>

#include "delight/core/errors.hpp"

namespace dlt {

namespace {

inline size_t texelIndex(int y, int x, int ch, int R) {
    return (size_t(y) * R + x) * 3 + size_t(ch);
}

}  // namespace

RefineProblem::RefineProblem(const UVTexture& fused, const ShLighting& lighting,
                             const std::vector<ReconView>& views, const TriMesh& mesh,
                             const RefineConfig& cfg)
    : res_(fused.resolution()), cfg_(cfg) {
    anchor_.resize(Eigen::Index(fused.pixels.size()));
    for (size_t i = 0; i < fused.pixels.size(); ++i)
        anchor_[Eigen::Index(i)] = fused.pixels.data()[i];

    const int R = res_;
    for (const auto& view : views) {
        const GBuffer gb = rasterize(mesh, view.camera);
        for (int y = 0; y < gb.height; ++y)
            for (int x = 0; x < gb.width; ++x) {
                if (!gb.covered(y, x)) continue;
                if (!view.skinMask.empty() && view.skinMask.at(y, x) < 0.5f) continue;
                const double u = gb.uv.at(y, x, 0) * (R - 1);
                const double v = gb.uv.at(y, x, 1) * (R - 1);
                const int x0 = std::clamp(int(u), 0, R - 1);
                const int y0 = std::clamp(int(v), 0, R - 1);
                const int x1 = std::min(x0 + 1, R - 1);
                const int y1 = std::min(y0 + 1, R - 1);
                // only pixels whose four texels all carry fused data
                if (fused.validity.at(y0, x0) < 0.5f || fused.validity.at(y0, x1) < 0.5f ||
                    fused.validity.at(y1, x0) < 0.5f || fused.validity.at(y1, x1) < 0.5f)
                    continue;

                Observation ob;
                const double fx = u - x0, fy = v - y0;
                ob.texel[0] = int(texelIndex(y0, x0, 0, R) / 3);
                ob.texel[1] = int(texelIndex(y0, x1, 0, R) / 3);
                ob.texel[2] = int(texelIndex(y1, x0, 0, R) / 3);
                ob.texel[3] = int(texelIndex(y1, x1, 0, R) / 3);
                ob.weight[0] = (1 - fx) * (1 - fy);
                ob.weight[1] = fx * (1 - fy);
                ob.weight[2] = (1 - fx) * fy;
                ob.weight[3] = fx * fy;
                const Eigen::Vector3d n(gb.normal.at(y, x, 0), gb.normal.at(y, x, 1),
                                        gb.normal.at(y, x, 2));
                const Eigen::Vector3d e = lighting.irradiance(n);
                for (int ch = 0; ch < 3; ++ch) {
                    ob.shade[ch] = e[ch];
                    ob.raw[ch] = view.image.at(y, x, ch);
                }
                obs_.push_back(ob);
            }
    }
    if (obs_.empty()) throw DataError("refineAlbedo: no observed pixels");
}

Eigen::ArrayXd RefineProblem::initial() const { return anchor_; }

double RefineProblem::objective(const Eigen::ArrayXd& t) const {
    const int R = res_;
    const double invObs = 1.0 / double(obs_.size());
    double data = 0.0;
    for (const auto& ob : obs_)
        for (int ch = 0; ch < 3; ++ch) {
            double albedo = 0.0;
            for (int k = 0; k < 4; ++k) albedo += ob.weight[k] * t[ob.texel[k] * 3 + ch];
            const double r = albedo * ob.shade[ch] - ob.raw[ch];
            data += r * r;
        }
    data *= invObs;

    const double prox = cfg_.proximityWeight * (t - anchor_).square().mean();

    double tv = 0.0;
    const double eps2 = cfg_.tvEpsilon * cfg_.tvEpsilon;
    for (int ch = 0; ch < 3; ++ch) {
        for (int y = 0; y < R; ++y)
            for (int x = 0; x + 1 < R; ++x) {
                const double d = t[texelIndex(y, x + 1, ch, R)] - t[texelIndex(y, x, ch, R)];
                tv += std::sqrt(d * d + eps2);
            }
        for (int y = 0; y + 1 < R; ++y)
            for (int x = 0; x < R; ++x) {
                const double d = t[texelIndex(y + 1, x, ch, R)] - t[texelIndex(y, x, ch, R)];
                tv += std::sqrt(d * d + eps2);
            }
    }
    tv *= cfg_.tvWeight / double(R * R);

    return data + prox + tv;
}

void RefineProblem::gradient(const Eigen::ArrayXd& t, Eigen::ArrayXd& grad) const {
    const int R = res_;
    grad.resize(t.size());
    grad.setZero();

    const double invObs = 1.0 / double(obs_.size());
    for (const auto& ob : obs_)
        for (int ch = 0; ch < 3; ++ch) {
            double albedo = 0.0;
            for (int k = 0; k < 4; ++k) albedo += ob.weight[k] * t[ob.texel[k] * 3 + ch];
            const double r = albedo * ob.shade[ch] - ob.raw[ch];
            const double g = 2.0 * invObs * r * ob.shade[ch];
            for (int k = 0; k < 4; ++k) grad[ob.texel[k] * 3 + ch] += g * ob.weight[k];
        }

    grad += cfg_.proximityWeight * 2.0 * (t - anchor_) / double(t.size());

    const double eps2 = cfg_.tvEpsilon * cfg_.tvEpsilon;
    const double tvs = cfg_.tvWeight / double(R * R);
    for (int ch = 0; ch < 3; ++ch) {
        for (int y = 0; y < R; ++y)
            for (int x = 0; x + 1 < R; ++x) {
                const size_t a = texelIndex(y, x, ch, R), b = texelIndex(y, x + 1, ch, R);
                const double d = t[b] - t[a];
                const double g = tvs * d / std::sqrt(d * d + eps2);
                grad[b] += g;
                grad[a] -= g;
            }
        for (int y = 0; y + 1 < R; ++y)
            for (int x = 0; x < R; ++x) {
                const size_t a = texelIndex(y, x, ch, R), b = texelIndex(y + 1, x, ch, R);
                const double d = t[b] - t[a];
                const double g = tvs * d / std::sqrt(d * d + eps2);
                grad[b] += g;
                grad[a] -= g;
            }
    }
}

RefineResult refineAlbedo(const UVTexture& fused, const ShLighting& lighting,
                          const std::vector<ReconView>& views, const TriMesh& mesh,
                          const RefineConfig& cfg) {
    RefineProblem problem(fused, lighting, views, mesh, cfg);
    Eigen::ArrayXd t = problem.initial();
    Eigen::ArrayXd grad;

    RefineResult res;
    res.initialObjective = problem.objective(t);
    double current = res.initialObjective;
    double step = cfg.initialStep;

    double lastCheckpoint = current;
    int risingCheckpoints = 0;

    for (int it = 0; it < cfg.maxIterations; ++it) {
        problem.gradient(t, grad);
        const double gnorm = std::sqrt(grad.square().sum());
        if (gnorm < 1e-14) break;

        if (cfg.lineSearch) {
            bool accepted = false;
            for (int h = 0; h < 24; ++h) {
                Eigen::ArrayXd cand = t - step * grad;
                const double candObj = problem.objective(cand);
                if (candObj <= current) {
                    t.swap(cand);
                    current = candObj;
                    step *= 1.2;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) break;  // no descent direction at representable step sizes
        } else {
            t -= step * grad;
            current = problem.objective(t);
        }
        res.iterations = it + 1;

        if ((it + 1) % cfg.checkpointInterval == 0) {
            if (current > lastCheckpoint) {
                if (++risingCheckpoints >= 3)
                    throw NumericalError(
                        "refineAlbedo: diverging (objective rose at 3 consecutive checkpoints; "
                        "objective " + std::to_string(current) + " after " +
                        std::to_string(it + 1) + " iterations, step " + std::to_string(step) + ")");
            } else {
                risingCheckpoints = 0;
            }
            lastCheckpoint = current;
        }
    }

    res.finalObjective = current;
    res.texture.pixels = Image(problem.resolution(), problem.resolution(), 3);
    for (size_t i = 0; i < res.texture.pixels.size(); ++i)
        res.texture.pixels.data()[i] = float(std::max(0.0, t[Eigen::Index(i)]));
    res.texture.validity = fused.validity;
    return res;
}

}  // namespace dlt
