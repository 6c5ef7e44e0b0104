#include "delight/eval/metrics.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "delight/core/errors.hpp"
#include "delight/core/image_io.hpp"

namespace dlt {

ColorTransform fitColorTransform(const Image& pred, const Image& gt, const Image& mask) {
    if (!pred.sameShape(gt)) throw DataError("fitColorTransform: shape mismatch");
    ColorTransform t;
    for (int ch = 0; ch < 3; ++ch) {
        double sp = 0, sg = 0, spp = 0, spg = 0;
        long n = 0;
        for (int y = 0; y < pred.height(); ++y)
            for (int x = 0; x < pred.width(); ++x) {
                if (mask.at(y, x) <= 0.5f) continue;
                const double p = pred.at(y, x, ch), g = gt.at(y, x, ch);
                sp += p;
                sg += g;
                spp += p * p;
                spg += p * g;
                ++n;
            }
        if (n == 0) throw DataError("fitColorTransform: empty mask");
        const double var = spp - sp * sp / n;
        if (var <= 1e-12 * std::max(1.0, spp)) {
            // constant channel: scale undefined, fall back to a pure bias
            t.degenerate = true;
            t.scale[ch] = 1.0;
            t.bias[ch] = (sg - sp) / n;
        } else {
            t.scale[ch] = (spg - sp * sg / n) / var;
            t.bias[ch] = (sg - t.scale[ch] * sp) / n;
        }
        if (t.scale[ch] < 0) t.negativeScale = true;
    }
    return t;
}

Image applyColorTransform(const Image& img, const ColorTransform& t) {
    Image out(img.height(), img.width(), img.channels());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int ch = 0; ch < img.channels(); ++ch)
                out.at(y, x, ch) = float(t.scale[ch] * img.at(y, x, ch) + t.bias[ch]);
    return out;
}

double psnrMasked(const Image& a, const Image& b, const Image& mask, double peak) {
    const double mse = maskedMse(a, b, mask);  // throws on empty mask
    if (mse <= 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

namespace {

std::vector<double> gaussianWindow11(double sigma = 1.5) {
    std::vector<double> k(11);
    double sum = 0;
    for (int i = 0; i < 11; ++i) {
        const double d = i - 5;
        k[size_t(i)] = std::exp(-0.5 * d * d / (sigma * sigma));
        sum += k[size_t(i)];
    }
    for (auto& v : k) v /= sum;
    return k;
}

}  // namespace

double ssimMasked(const Image& a, const Image& b, const Image& mask, double peak) {
    if (!a.sameShape(b)) throw DataError("ssimMasked: shape mismatch");
    const Image ga = toGray(a), gb = toGray(b);
    const auto w = gaussianWindow11();
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);

    double acc = 0.0;
    long windows = 0;
    for (int y = 5; y + 5 < ga.height(); ++y)
        for (int x = 5; x + 5 < ga.width(); ++x) {
            bool inside = true;
            for (int dy = -5; dy <= 5 && inside; ++dy)
                for (int dx = -5; dx <= 5; ++dx)
                    if (mask.at(y + dy, x + dx) <= 0.5f) {
                        inside = false;
                        break;
                    }
            if (!inside) continue;

            double ma = 0, mb = 0;
            for (int dy = -5; dy <= 5; ++dy)
                for (int dx = -5; dx <= 5; ++dx) {
                    const double ww = w[size_t(dy + 5)] * w[size_t(dx + 5)];
                    ma += ww * ga.at(y + dy, x + dx);
                    mb += ww * gb.at(y + dy, x + dx);
                }
            double va = 0, vb = 0, cov = 0;
            for (int dy = -5; dy <= 5; ++dy)
                for (int dx = -5; dx <= 5; ++dx) {
                    const double ww = w[size_t(dy + 5)] * w[size_t(dx + 5)];
                    const double da = ga.at(y + dy, x + dx) - ma;
                    const double db = gb.at(y + dy, x + dx) - mb;
                    va += ww * da * da;
                    vb += ww * db * db;
                    cov += ww * da * db;
                }
            acc += ((2 * ma * mb + c1) * (2 * cov + c2)) /
                   ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++windows;
        }
    if (windows == 0) throw DataError("ssimMasked: no window fits inside the mask");
    return acc / double(windows);
}

std::optional<double> PerceptualScorer::score(const Image& pred, const Image& gt,
                                              const Image& mask) const {
    if (command.empty()) return std::nullopt;
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "dlt_scorer";
    fs::create_directories(dir);
    const std::string p = (dir / "pred.fimg").string();
    const std::string g = (dir / "gt.fimg").string();
    const std::string m = (dir / "mask.fimg").string();
    writeFimg(p, pred);
    writeFimg(g, gt);
    writeFimg(m, mask);

    const std::string cmd = command + " " + p + " " + g + " " + m;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return std::nullopt;
    char buf[128] = {0};
    const bool got = fgets(buf, sizeof(buf), pipe) != nullptr;
    const int rc = pclose(pipe);
    if (!got || rc != 0) return std::nullopt;
    try {
        return std::stod(buf);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

EvalReport evaluateMethod(const EvalInputs& inputs, const PerceptualScorer* scorer) {
    const size_t n = inputs.predictions.size();
    if (inputs.groundTruths.size() != n || inputs.masks.size() != n)
        throw DataError("evaluateMethod: prediction/ground-truth/mask list lengths differ");
    if (n == 0) throw DataError("evaluateMethod: empty input lists");

    EvalReport report;
    double sumPsnr = 0, sumSsim = 0, sumPerc = 0;
    int percCount = 0;
    for (size_t i = 0; i < n; ++i) {
        const Image& pred = inputs.predictions[i];
        const Image& gt = inputs.groundTruths[i];
        const Image& mask = inputs.masks[i];

        const ColorTransform t = fitColorTransform(pred, gt, mask);
        const Image aligned = applyColorTransform(pred, t);

        MetricRecord rec;
        rec.method = inputs.method;
        rec.subject = i < inputs.subjects.size() ? inputs.subjects[i] : std::to_string(i);
        const double rawPsnr = psnrMasked(aligned, gt, mask);
        rec.psnrInfinite = std::isinf(rawPsnr);
        rec.psnr = std::min(rawPsnr, kPsnrCap);
        rec.ssim = ssimMasked(aligned, gt, mask);

        long inMask = 0;
        for (int y = 0; y < mask.height(); ++y)
            for (int x = 0; x < mask.width(); ++x)
                if (mask.at(y, x) > 0.5f) ++inMask;
        rec.maskCoverage = double(inMask) / double(mask.height() * mask.width());

        if (scorer) {
            rec.perceptual = scorer->score(aligned, gt, mask);
            if (rec.perceptual) {
                sumPerc += *rec.perceptual;
                ++percCount;
            }
        }

        sumPsnr += rec.psnr;
        sumSsim += rec.ssim;
        report.records.push_back(std::move(rec));
    }

    report.summary.method = inputs.method;
    report.summary.count = int(n);
    report.summary.meanPsnr = sumPsnr / double(n);
    report.summary.meanSsim = sumSsim / double(n);
    if (percCount > 0) report.summary.meanPerceptual = sumPerc / double(percCount);
    return report;
}

void writeMetricTable(const std::string& path, const std::vector<EvalReport>& reports) {
    std::ofstream f(path);
    if (!f) throw DataError("writeMetricTable: cannot open " + path);
    f << "# metrics computed in linear space, peak 1.0; PSNR capped at 99 dB\n";
    f << "# method subject psnr ssim perceptual mask_coverage\n";
    char line[256];
    for (const auto& r : reports) {
        for (const auto& rec : r.records) {
            std::snprintf(line, sizeof(line), "%s %s %.4f %.6f %s %.4f\n", rec.method.c_str(),
                          rec.subject.c_str(), rec.psnr, rec.ssim,
                          rec.perceptual ? std::to_string(*rec.perceptual).c_str() : "-",
                          rec.maskCoverage);
            f << line;
        }
        std::snprintf(line, sizeof(line), "mean %s %.4f %.6f %s -\n", r.summary.method.c_str(),
                      r.summary.meanPsnr, r.summary.meanSsim,
                      r.summary.meanPerceptual ? std::to_string(*r.summary.meanPerceptual).c_str()
                                               : "-");
        f << line;
    }
}

}  // namespace dlt
