#include "delight/nn/unet.hpp"

#include <cmath>

#include "delight/core/errors.hpp"

namespace dlt::nn {

void UnetConfig::validate() const {
    if (levels < 2) throw ConfigError("unet: need at least 2 levels");
    if (workingRes % (1 << (levels - 1)))
        throw ConfigError("unet: working resolution not divisible by 2^(levels-1)");
    if (inChannels < 1 || baseChannels < 1) throw ConfigError("unet: bad channel counts");
}

Config UnetConfig::toConfig() const {
    Config c;
    c.set("working_res", std::to_string(workingRes));
    c.set("levels", std::to_string(levels));
    c.set("base_channels", std::to_string(baseChannels));
    c.set("in_channels", std::to_string(inChannels));
    c.set("init_seed", std::to_string(initSeed));
    return c;
}

UnetConfig UnetConfig::fromConfig(const Config& c) {
    UnetConfig u;
    u.workingRes = int(c.getInt("working_res", u.workingRes));
    u.levels = int(c.getInt("levels", u.levels));
    u.baseChannels = int(c.getInt("base_channels", u.baseChannels));
    u.inChannels = int(c.getInt("in_channels", u.inChannels));
    u.initSeed = uint64_t(c.getInt("init_seed", int64_t(u.initSeed)));
    u.validate();
    return u;
}

Image degrade(const Image& albedo, const DegradationSpec& spec, Rng& rng,
              DegradationDraw* draw) {
    if (spec.noiseSigmaMax < 0 || spec.blurSigmaMax < 0)
        throw ConfigError("degrade: negative sigma range");
    DegradationDraw d;
    d.blurSigma = rng.uniform(0.0, spec.blurSigmaMax);
    d.noiseSigma = rng.uniform(0.0, spec.noiseSigmaMax);
    if (draw) *draw = d;

    Image out = d.blurSigma > 1e-9 ? gaussianBlur(albedo, d.blurSigma) : albedo;
    if (d.noiseSigma > 1e-12) {
        for (size_t i = 0; i < out.size(); ++i)
            out.data()[i] = float(out.data()[i] + d.noiseSigma * rng.normal());
    }
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] = std::max(0.0f, out.data()[i]);
    return out;
}

EnhancerModel::EnhancerModel(const UnetConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    Rng rng = substream(cfg_.initSeed, "unet-init");

    auto addConv = [&](const std::string& name, int inC, int outC, bool zeroInit) {
        const double he = zeroInit ? 0.0 : std::sqrt(2.0 / double(9 * inC));
        Tensor w = zeroInit ? Tensor::zeros({outC, inC * 9})
                            : Tensor::randn({outC, inC * 9}, he, rng);
        Tensor b = Tensor::zeros({outC});
        w.setRequiresGrad(true);
        b.setRequiresGrad(true);
        params_.push_back({name + ".w", w});
        params_.push_back({name + ".b", b});
    };

    int ch = cfg_.inChannels;
    for (int i = 0; i < cfg_.levels; ++i) {
        const int outC = cfg_.baseChannels << i;
        addConv("enc" + std::to_string(i), ch, outC, false);
        ch = outC;
    }
    for (int i = cfg_.levels - 2; i >= 0; --i) {
        const int skipC = cfg_.baseChannels << i;
        const int upC = cfg_.baseChannels << (i + 1);
        addConv("dec" + std::to_string(i), upC + skipC, skipC, false);
    }
    addConv("out", cfg_.baseChannels, 3, true);  // zero-init head
}

Tensor& EnhancerModel::param(const std::string& name) {
    for (auto& p : params_)
        if (p.name == name) return p.tensor;
    throw NumericalError("no such parameter: " + name);
}

const Tensor& EnhancerModel::param(const std::string& name) const {
    for (const auto& p : params_)
        if (p.name == name) return p.tensor;
    throw NumericalError("no such parameter: " + name);
}

Tensor EnhancerModel::forwardTensor(const Tensor& x) const {
    if (x.ndim() != 3 || x.dim(0) != cfg_.inChannels || x.dim(1) != cfg_.workingRes ||
        x.dim(2) != cfg_.workingRes)
        throw DataError("enhancer: input shape mismatch");

    std::vector<Tensor> skips;
    Tensor h = x;
    for (int i = 0; i < cfg_.levels; ++i) {
        if (i > 0) h = avgPool2x(h);
        h = relu(conv2d(h, param("enc" + std::to_string(i) + ".w"),
                        param("enc" + std::to_string(i) + ".b"), 3, 3));
        skips.push_back(h);
    }
    for (int i = cfg_.levels - 2; i >= 0; --i) {
        h = upsample2xNearest(h);
        h = concatChannels(h, skips[size_t(i)]);
        h = relu(conv2d(h, param("dec" + std::to_string(i) + ".w"),
                        param("dec" + std::to_string(i) + ".b"), 3, 3));
    }
    h = conv2d(h, param("out.w"), param("out.b"), 3, 3);
    return clampMin0(h);
}

Tensor EnhancerModel::forwardPair(const Image& image, const Image& predictedAlbedo) const {
    if (image.channels() != 3 || predictedAlbedo.channels() != 3)
        throw DataError("enhancer: expected 3-channel inputs");
    if (image.height() != predictedAlbedo.height() || image.width() != predictedAlbedo.width())
        throw DataError("enhancer: image/albedo resolution mismatch");

    const int R = cfg_.workingRes;
    const Image imgR = (image.height() == R && image.width() == R)
                           ? image
                           : resizeBilinear(image, R, R);
    const Image albR = (predictedAlbedo.height() == R && predictedAlbedo.width() == R)
                           ? predictedAlbedo
                           : resizeBilinear(predictedAlbedo, R, R);
    return forwardTensor(concatChannels(imageToTensor(imgR), imageToTensor(albR)));
}

Image EnhancerModel::enhance(const Image& image, const Image& predictedAlbedo) const {
    NoGradGuard ng;
    return tensorToImage(forwardPair(image, predictedAlbedo));
}

}  // namespace dlt::nn
