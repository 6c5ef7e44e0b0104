#include "delight/data/env_map.hpp"

#include <cmath>

#include "delight/core/errors.hpp"

namespace dlt {

void EnvironmentMap::validate() const {
    if (pixels.empty()) throw DataError("environment map '" + id + "': empty");
    if (pixels.width() != 2 * pixels.height())
        throw DataError("environment map '" + id + "': width must be 2*height");
    if (pixels.channels() != 3)
        throw DataError("environment map '" + id + "': expected 3 channels");
    for (size_t i = 0; i < pixels.size(); ++i) {
        const float v = pixels.data()[i];
        if (!std::isfinite(v) || v < 0.0f)
            throw DataError("environment map '" + id + "': non-finite or negative radiance");
    }
}

Eigen::Vector3d EnvironmentMap::radiance(const Eigen::Vector3d& dir) const {
    double u, v;
    dirToEquirect(dir, width(), height(), &u, &v);
    // wrap azimuth, clamp polar
    double uw = std::fmod(u, double(width()));
    if (uw < 0) uw += width();
    Eigen::Vector3d out;
    const int u0 = int(std::floor(uw));
    const int u1 = (u0 + 1) % width();
    const double fu = uw - u0;
    const double vc = std::clamp(v, 0.0, double(height() - 1));
    const int v0 = int(vc);
    const int v1 = std::min(v0 + 1, height() - 1);
    const double fv = vc - v0;
    for (int ch = 0; ch < 3; ++ch) {
        const double a = (1 - fu) * pixels.at(v0, u0, ch) + fu * pixels.at(v0, u1, ch);
        const double b = (1 - fu) * pixels.at(v1, u0, ch) + fu * pixels.at(v1, u1, ch);
        out[ch] = (1 - fv) * a + fv * b;
    }
    return out;
}

double EnvironmentMap::totalEnergy() const {
    double e = 0.0;
    for (int v = 0; v < height(); ++v) {
        const double dw = equirectTexelSolidAngle(v, width(), height());
        for (int u = 0; u < width(); ++u)
            for (int ch = 0; ch < 3; ++ch) {
                const double x = pixels.at(v, u, ch);
                e += x * x * dw;
            }
    }
    return e;
}

Eigen::Matrix<double, 9, 3> projectToSh9(const EnvironmentMap& env) {
    Eigen::Matrix<double, 9, 3> c = Eigen::Matrix<double, 9, 3>::Zero();
    for (int v = 0; v < env.height(); ++v) {
        const double dw = equirectTexelSolidAngle(v, env.width(), env.height());
        for (int u = 0; u < env.width(); ++u) {
            const auto b = shBasis9(equirectDir(u, v, env.width(), env.height()));
            for (int k = 0; k < 9; ++k)
                for (int ch = 0; ch < 3; ++ch)
                    c(k, ch) += env.pixels.at(v, u, ch) * b[k] * dw;
        }
    }
    return c;
}

double classifyHdriFrequency(const EnvironmentMap& env) {
    env.validate();
    const double total = env.totalEnergy();
    if (total <= 0.0) throw DataError("empty environment");
    const auto c = projectToSh9(env);
    // Parseval: the band-limited part carries sum_k c_k^2 of the L2 energy.
    const double banded = c.array().square().sum();
    return std::clamp(1.0 - banded / total, 0.0, 1.0);
}

EnvironmentMap rotateEnv(const EnvironmentMap& env, double yaw) {
    if (!std::isfinite(yaw)) throw DataError("rotateEnv: non-finite yaw");
    const int h = env.height(), w = env.width();
    const double shift = yaw / (2.0 * kPi) * double(w);
    EnvironmentMap out;
    out.id = env.id;
    out.pixels = Image(h, w, 3);
    for (int u = 0; u < w; ++u) {
        // destination column u reads from source column u - shift
        double src = std::fmod(double(u) - shift, double(w));
        if (src < 0) src += w;
        const int u0 = int(std::floor(src)) % w;
        const int u1 = (u0 + 1) % w;
        const double f = src - std::floor(src);
        for (int v = 0; v < h; ++v)
            for (int ch = 0; ch < 3; ++ch)
                out.pixels.at(v, u, ch) = float((1.0 - f) * env.pixels.at(v, u0, ch) +
                                                f * env.pixels.at(v, u1, ch));
    }
    return out;
}

size_t sampleHdriIndex(const std::vector<double>& scores, double beta, Rng& rng) {
    if (scores.empty()) throw DataError("sampleHdriIndex: empty pool");
    std::vector<double> weights(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) weights[i] = 1.0 + beta * scores[i];
    return rng.weightedIndex(weights);
}

EnvironmentMap makeConstantEnv(int height, double value, const std::string& id) {
    EnvironmentMap env;
    env.id = id;
    env.pixels = Image(height, 2 * height, 3, float(value));
    return env;
}

EnvironmentMap makeProceduralEnv(int height, Rng& rng, const std::string& id) {
    const int w = 2 * height;
    EnvironmentMap env;
    env.id = id;
    env.pixels = Image(height, w, 3);

    // smooth base: a few random spherical gradients
    Eigen::Vector3d axes[3];
    Eigen::Vector3d gains;
    for (int i = 0; i < 3; ++i) {
        Eigen::Vector3d a(rng.normal(), rng.normal(), rng.normal());
        axes[i] = a.normalized();
        gains[i] = 0.1 + 0.5 * rng.uniform();
    }
    const double base = 0.05 + 0.3 * rng.uniform();
    for (int v = 0; v < height; ++v)
        for (int u = 0; u < w; ++u) {
            const Eigen::Vector3d d = equirectDir(u, v, w, height);
            for (int ch = 0; ch < 3; ++ch) {
                const double g = gains[ch] * (0.5 + 0.5 * axes[ch].dot(d));
                env.pixels.at(v, u, ch) = float(base + g);
            }
        }

    // Compact emitters push energy outside the order-2 band. Their width
    // scales with resolution so the same angular content is adequately
    // sampled at any env height (keeps resampling artifacts small).
    const int nLights = int(rng.below(5));
    const double sigma = std::max(1.0, height / 20.0) * (0.8 + 0.6 * rng.uniform());
    const int radius = int(std::ceil(3.0 * sigma));
    for (int i = 0; i < nLights; ++i) {
        const int cu = int(rng.below(uint64_t(w)));
        const int cv = int(rng.below(uint64_t(height)));
        const double intensity = 4.0 + 24.0 * rng.uniform();
        const Eigen::Vector3d tint(0.7 + 0.3 * rng.uniform(), 0.7 + 0.3 * rng.uniform(),
                                   0.7 + 0.3 * rng.uniform());
        for (int dv = -radius; dv <= radius; ++dv)
            for (int du = -radius; du <= radius; ++du) {
                const int vv = std::clamp(cv + dv, 0, height - 1);
                const int uu = ((cu + du) % w + w) % w;
                const double fall = std::exp(-0.5 * (du * du + dv * dv) / (sigma * sigma));
                for (int ch = 0; ch < 3; ++ch)
                    env.pixels.at(vv, uu, ch) += float(intensity * tint[ch] * fall);
            }
    }
    return env;
}

}  // namespace dlt
