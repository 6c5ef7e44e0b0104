#pragma once

#include "delight/core/config.hpp"
#include "delight/nn/vit.hpp"

namespace dlt::nn {

struct UnetConfig {
    int workingRes = 768;   // inputs are interpolated here before inference
    int levels = 4;         // resolutions: res, res/2, ..., res/2^(levels-1)
    int baseChannels = 16;
    int inChannels = 6;     // I concatenated with the predicted albedo
    uint64_t initSeed = 1;

    void validate() const;
    Config toConfig() const;
    static UnetConfig fromConfig(const Config& c);
};

// Stochastic degradation applied to rendered-source ground-truth albedo:
// Gaussian blur followed by additive Gaussian noise, clamped at zero.
struct DegradationSpec {
    double noiseSigmaMax = 0.05;
    double blurSigmaMax = 3.0;
};
struct DegradationDraw {
    double blurSigma = 0.0;
    double noiseSigma = 0.0;
};
Image degrade(const Image& albedo, const DegradationSpec& spec, Rng& rng,
              DegradationDraw* draw = nullptr);

// Skip-connected encoder-decoder that restores fine detail the token
// bottleneck discards. Final conv is zero-initialized, so the untrained
// network outputs its (constant) bias map.
class EnhancerModel {
  public:
    explicit EnhancerModel(const UnetConfig& cfg);

    const UnetConfig& config() const { return cfg_; }

    // (6, R, R) -> (3, R, R), R = workingRes
    Tensor forwardTensor(const Tensor& x) const;

    // Resizes both inputs to the working resolution, concatenates, runs the
    // network. Output is at working resolution.
    Image enhance(const Image& image, const Image& predictedAlbedo) const;

    Tensor forwardPair(const Image& image, const Image& predictedAlbedo) const;

    std::vector<NamedParam>& params() { return params_; }
    const std::vector<NamedParam>& params() const { return params_; }
    Tensor& param(const std::string& name);
    const Tensor& param(const std::string& name) const;

  private:
    UnetConfig cfg_;
    std::vector<NamedParam> params_;
};

}  // namespace dlt::nn
