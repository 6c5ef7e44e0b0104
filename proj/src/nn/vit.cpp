#include "delight/nn/vit.hpp"

#include <cmath>

#include "delight/core/errors.hpp"

namespace dlt::nn {

Source parseSource(const std::string& s) {
    if (s == "olat") return Source::olat;
    if (s == "rendered") return Source::rendered;
    throw DataError("unknown source tag: " + s);
}

const char* sourceName(Source s) { return s == Source::olat ? "olat" : "rendered"; }

void VitConfig::validate() const {
    if (imageSize % patchSize) throw ConfigError("vit: image size not divisible by patch size");
    if ((patchSize & (patchSize - 1)) != 0) throw ConfigError("vit: patch size must be a power of two");
    if (embedDim % heads) throw ConfigError("vit: embed dim not divisible by heads");
    if (tokenCount < 0) throw ConfigError("vit: negative token count");
}

Config VitConfig::toConfig() const {
    Config c;
    c.set("image_size", std::to_string(imageSize));
    c.set("patch_size", std::to_string(patchSize));
    c.set("embed_dim", std::to_string(embedDim));
    c.set("depth", std::to_string(depth));
    c.set("heads", std::to_string(heads));
    c.set("token_count", std::to_string(tokenCount));
    c.set("init_seed", std::to_string(initSeed));
    return c;
}

VitConfig VitConfig::fromConfig(const Config& c) {
    VitConfig v;
    v.imageSize = int(c.getInt("image_size", v.imageSize));
    v.patchSize = int(c.getInt("patch_size", v.patchSize));
    v.embedDim = int(c.getInt("embed_dim", v.embedDim));
    v.depth = int(c.getInt("depth", v.depth));
    v.heads = int(c.getInt("heads", v.heads));
    v.tokenCount = int(c.getInt("token_count", v.tokenCount));
    v.initSeed = uint64_t(c.getInt("init_seed", int64_t(v.initSeed)));
    v.validate();
    return v;
}

DelightModel::DelightModel(const VitConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    Rng rng = substream(cfg_.initSeed, "init");
    const int C = cfg_.embedDim;
    const int P = cfg_.patchSize;
    const int N = cfg_.numPatches();

    auto addParam = [&](const std::string& name, Tensor t, ParamGroup g) -> Tensor& {
        t.setRequiresGrad(true);
        params_.push_back({name, t});
        groups_.push_back(g);
        return params_.back().tensor;
    };

    addParam("patch_proj.w", Tensor::randn({3 * P * P, C}, 0.02, rng), ParamGroup::encoder);
    addParam("patch_proj.b", Tensor::zeros({C}), ParamGroup::encoder);
    addParam("pos_embed", Tensor::randn({N, C}, 0.02, rng), ParamGroup::encoder);

    if (cfg_.tokenCount > 0) {
        addParam("tokens.olat", Tensor::randn({cfg_.tokenCount, C}, 0.02, rng), ParamGroup::tokens);
        addParam("tokens.rendered", Tensor::randn({cfg_.tokenCount, C}, 0.02, rng),
                 ParamGroup::tokens);
    }

    for (int i = 0; i < cfg_.depth; ++i) {
        const std::string p = "enc" + std::to_string(i) + ".";
        addParam(p + "ln1.g", Tensor::full({C}, 1.0), ParamGroup::encoder);
        addParam(p + "ln1.b", Tensor::zeros({C}), ParamGroup::encoder);
        addParam(p + "attn.wqkv", Tensor::randn({C, 3 * C}, 0.02, rng), ParamGroup::encoder);
        addParam(p + "attn.bqkv", Tensor::zeros({3 * C}), ParamGroup::encoder);
        addParam(p + "attn.wproj", Tensor::randn({C, C}, 0.02, rng), ParamGroup::encoder);
        addParam(p + "attn.bproj", Tensor::zeros({C}), ParamGroup::encoder);
        addParam(p + "ln2.g", Tensor::full({C}, 1.0), ParamGroup::encoder);
        addParam(p + "ln2.b", Tensor::zeros({C}), ParamGroup::encoder);
        addParam(p + "mlp.w1", Tensor::randn({C, 4 * C}, 0.02, rng), ParamGroup::encoder);
        addParam(p + "mlp.b1", Tensor::zeros({4 * C}), ParamGroup::encoder);
        addParam(p + "mlp.w2", Tensor::randn({4 * C, C}, 0.02, rng), ParamGroup::encoder);
        addParam(p + "mlp.b2", Tensor::zeros({C}), ParamGroup::encoder);
    }
    addParam("enc.final_ln.g", Tensor::full({C}, 1.0), ParamGroup::encoder);
    addParam("enc.final_ln.b", Tensor::zeros({C}), ParamGroup::encoder);

    // decoder: one (upsample, conv3x3, relu) stage per factor-of-two, then
    // a 3-channel output conv
    int stages = 0;
    for (int p = P; p > 1; p /= 2) ++stages;
    int chIn = C;
    for (int i = 0; i < stages; ++i) {
        const int chOut = std::max(16, chIn / 2);
        const double he = std::sqrt(2.0 / double(9 * chIn));
        addParam("dec" + std::to_string(i) + ".w", Tensor::randn({chOut, chIn * 9}, he, rng),
                 ParamGroup::decoder);
        addParam("dec" + std::to_string(i) + ".b", Tensor::zeros({chOut}), ParamGroup::decoder);
        chIn = chOut;
    }
    const double he = std::sqrt(2.0 / double(9 * chIn));
    addParam("dec.out.w", Tensor::randn({3, chIn * 9}, he, rng), ParamGroup::decoder);
    addParam("dec.out.b", Tensor::zeros({3}), ParamGroup::decoder);
}

Tensor& DelightModel::param(const std::string& name) {
    for (auto& p : params_)
        if (p.name == name) return p.tensor;
    throw NumericalError("no such parameter: " + name);
}

const Tensor& DelightModel::param(const std::string& name) const {
    for (const auto& p : params_)
        if (p.name == name) return p.tensor;
    throw NumericalError("no such parameter: " + name);
}

std::vector<Tensor> DelightModel::groupParams(ParamGroup g) const {
    std::vector<Tensor> out;
    for (size_t i = 0; i < params_.size(); ++i)
        if (groups_[i] == g) out.push_back(params_[i].tensor);
    return out;
}

size_t DelightModel::parameterCount() const {
    size_t n = 0;
    for (const auto& p : params_) n += p.tensor.numel();
    return n;
}

size_t DelightModel::tokenBankParameterCount() const {
    size_t n = 0;
    for (size_t i = 0; i < params_.size(); ++i)
        if (groups_[i] == ParamGroup::tokens) n += params_[i].tensor.numel();
    return n;
}

Tensor DelightModel::tokenize(const Image& image, const Image& mask) const {
    if (image.height() != cfg_.imageSize || image.width() != cfg_.imageSize)
        throw DataError("tokenize: image resolution does not match the model");
    if (image.height() % cfg_.patchSize)
        throw DataError("tokenize: resolution not divisible by patch size");
    if (mask.height() != image.height() || mask.width() != image.width())
        throw DataError("tokenize: mask resolution mismatch");

    Image masked(image.height(), image.width(), 3);
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x) {
            const float m = mask.at(y, x);
            for (int c = 0; c < 3; ++c) masked.at(y, x, c) = image.at(y, x, c) * m;
        }

    const Tensor x = imageToTensor(masked);
    const Tensor patches = patchify(x, cfg_.patchSize);  // [N, 3P^2]
    Tensor tokens = matmul(patches, params_[0].tensor);  // patch_proj.w
    tokens = addRowVector(tokens, params_[1].tensor);    // patch_proj.b
    return add(tokens, param("pos_embed"));
}

Tensor DelightModel::attention(const Tensor& x, int layer) const {
    const std::string p = "enc" + std::to_string(layer) + ".";
    const int C = cfg_.embedDim;
    const int dh = C / cfg_.heads;

    Tensor qkv = addRowVector(matmul(x, param(p + "attn.wqkv")), param(p + "attn.bqkv"));
    const Tensor q = sliceCols(qkv, 0, C);
    const Tensor k = sliceCols(qkv, C, 2 * C);
    const Tensor v = sliceCols(qkv, 2 * C, 3 * C);

    std::vector<Tensor> headsOut;
    for (int h = 0; h < cfg_.heads; ++h) {
        const Tensor qh = sliceCols(q, h * dh, (h + 1) * dh);
        const Tensor kh = sliceCols(k, h * dh, (h + 1) * dh);
        const Tensor vh = sliceCols(v, h * dh, (h + 1) * dh);
        Tensor scores = scale(matmul(qh, kh, false, true), 1.0 / std::sqrt(double(dh)));
        headsOut.push_back(matmul(softmaxRows(scores), vh));
    }
    Tensor merged = concatColsMany(headsOut);
    return addRowVector(matmul(merged, param(p + "attn.wproj")), param(p + "attn.bproj"));
}

Tensor DelightModel::mlp(const Tensor& x, int layer) const {
    const std::string p = "enc" + std::to_string(layer) + ".";
    Tensor h = addRowVector(matmul(x, param(p + "mlp.w1")), param(p + "mlp.b1"));
    h = gelu(h);
    return addRowVector(matmul(h, param(p + "mlp.w2")), param(p + "mlp.b2"));
}

Tensor DelightModel::encode(const Tensor& seq, std::optional<Source> source) const {
    Tensor x = seq;
    if (cfg_.tokenCount > 0) {
        if (!source) throw DataError("encode: source tag required when token banks are enabled");
        const char* bank = *source == Source::olat ? "tokens.olat" : "tokens.rendered";
        x = concatRows(x, param(bank));
    }
    for (int i = 0; i < cfg_.depth; ++i) {
        const std::string p = "enc" + std::to_string(i) + ".";
        Tensor normed = layerNormRows(x, param(p + "ln1.g"), param(p + "ln1.b"));
        x = add(x, attention(normed, i));
        normed = layerNormRows(x, param(p + "ln2.g"), param(p + "ln2.b"));
        x = add(x, mlp(normed, i));
    }
    return layerNormRows(x, param("enc.final_ln.g"), param("enc.final_ln.b"));
}

Tensor DelightModel::decode(const Tensor& imageTokens) const {
    const int N = cfg_.numPatches();
    if (imageTokens.dim(0) != N)
        throw DataError("decode: expected exactly " + std::to_string(N) + " tokens, got " +
                        std::to_string(imageTokens.dim(0)));
    Tensor x = unpatchifyToGrid(imageTokens, cfg_.gridSize(), cfg_.gridSize());
    int stages = 0;
    for (int p = cfg_.patchSize; p > 1; p /= 2) ++stages;
    for (int i = 0; i < stages; ++i) {
        x = upsample2xNearest(x);
        x = relu(conv2d(x, param("dec" + std::to_string(i) + ".w"),
                        param("dec" + std::to_string(i) + ".b"), 3, 3));
    }
    x = conv2d(x, param("dec.out.w"), param("dec.out.b"), 3, 3);
    return clampMin0(x);
}

Tensor DelightModel::forward(const Image& image, const Image& mask, Source source) const {
    Tensor seq = tokenize(image, mask);
    Tensor encoded = encode(seq, source);
    Tensor imageTokens =
        cfg_.tokenCount > 0 ? sliceRows(encoded, 0, cfg_.numPatches()) : encoded;
    return decode(imageTokens);
}

Image DelightModel::predict(const Image& image, const Image& mask, Source source) const {
    NoGradGuard ng;
    return tensorToImage(forward(image, mask, source));
}

}  // namespace dlt::nn
