#pragma once

#include "delight/recon/sh_fit.hpp"

namespace dlt {

struct RefineConfig {
    double proximityWeight = 0.5;   // mu1: pull toward the fused texture
    double tvWeight = 0.02;         // mu2: Charbonnier total variation
    double tvEpsilon = 1e-3;
    int maxIterations = 60;
    double initialStep = 0.5;
    bool lineSearch = true;         // backtracking; accepted steps never increase the objective
    int checkpointInterval = 5;     // divergence probe spacing when lineSearch is off
};

struct RefineResult {
    UVTexture texture;
    double initialObjective = 0.0;
    double finalObjective = 0.0;
    int iterations = 0;
};

// Data term + proximity + smoothness, minimized by gradient descent on the
// texture. Observations are re-rendered with the fitted SH lighting and
// compared against the raw views. Substitutes a learned patch prior with a
// plain regularized optimization. Aborts (NumericalError) if the objective
// rises at 3 consecutive checkpoints.
RefineResult refineAlbedo(const UVTexture& fused, const ShLighting& lighting,
                          const std::vector<ReconView>& views, const TriMesh& mesh,
                          const RefineConfig& cfg);

// Exposed for gradient verification: the refinement objective and its
// analytic gradient as plain functions of the flattened texture.
class RefineProblem {
  public:
    RefineProblem(const UVTexture& fused, const ShLighting& lighting,
                  const std::vector<ReconView>& views, const TriMesh& mesh,
                  const RefineConfig& cfg);

    int resolution() const { return res_; }
    double objective(const Eigen::ArrayXd& texture) const;
    void gradient(const Eigen::ArrayXd& texture, Eigen::ArrayXd& grad) const;
    Eigen::ArrayXd initial() const;

  private:
    struct Observation {
        int texel[4];      // bilinear corner texel indices (flattened, RGB-major)
        double weight[4];  // bilinear weights
        double shade[3];   // per-channel SH irradiance at the pixel's normal
        double raw[3];
    };
    std::vector<Observation> obs_;
    Eigen::ArrayXd anchor_;  // fused texture values
    int res_ = 0;
    RefineConfig cfg_;
};

}  // namespace dlt
