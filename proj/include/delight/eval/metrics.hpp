#pragma once

#include <optional>
#include <string>
#include <vector>

#include "delight/core/image.hpp"

namespace dlt {

// Channel-wise affine alignment gt ~= scale * pred + bias (6 parameters),
// fitted per image over the mask before quantitative metrics.
struct ColorTransform {
    double scale[3] = {1, 1, 1};
    double bias[3] = {0, 0, 0};
    bool degenerate = false;  // constant channel fallback (scale 1, bias = mean diff)
    bool negativeScale = false;
};

ColorTransform fitColorTransform(const Image& pred, const Image& gt, const Image& mask);
Image applyColorTransform(const Image& img, const ColorTransform& t);

// 10*log10(peak^2 / masked MSE); +inf when the images agree exactly on the
// mask (tables cap it at 99 dB).
double psnrMasked(const Image& a, const Image& b, const Image& mask, double peak = 1.0);
inline constexpr double kPsnrCap = 99.0;

// Windowed SSIM (11x11, Gaussian sigma 1.5, standard constants), averaged
// over windows fully inside the mask.
double ssimMasked(const Image& a, const Image& b, const Image& mask, double peak = 1.0);

// Optional perceptual scorer: an external executable invoked per pair as
//   <scorer> <pred.fimg> <gt.fimg> <mask.fimg>
// which must print one number on stdout. Pretrained metrics stay out of
// this codebase; the hook keeps them pluggable.
struct PerceptualScorer {
    std::string command;
    std::optional<double> score(const Image& pred, const Image& gt, const Image& mask) const;
};

struct MetricRecord {
    std::string method, subject;
    double psnr = 0.0;  // capped
    bool psnrInfinite = false;
    double ssim = 0.0;
    std::optional<double> perceptual;
    double maskCoverage = 0.0;
};

struct EvalSummary {
    std::string method;
    double meanPsnr = 0.0, meanSsim = 0.0;
    std::optional<double> meanPerceptual;
    int count = 0;
};

struct EvalInputs {
    std::string method;
    std::vector<Image> predictions;
    std::vector<Image> groundTruths;
    std::vector<Image> masks;
    std::vector<std::string> subjects;  // optional; indices otherwise
};

struct EvalReport {
    std::vector<MetricRecord> records;
    EvalSummary summary;
};

// Per image: fit the color transform, apply it, compute masked metrics.
// Alignment affects the numbers only; callers render grids from unaligned
// predictions.
EvalReport evaluateMethod(const EvalInputs& inputs, const PerceptualScorer* scorer = nullptr);

void writeMetricTable(const std::string& path, const std::vector<EvalReport>& reports);

}  // namespace dlt
