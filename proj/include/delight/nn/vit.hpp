#pragma once

#include <optional>
#include <string>
#include <vector>

#include "delight/core/config.hpp"
#include "delight/nn/image_ops.hpp"

namespace dlt::nn {

enum class Source { olat, rendered };
Source parseSource(const std::string& s);
const char* sourceName(Source s);

struct NamedParam {
    std::string name;
    Tensor tensor;
};

// groups map onto per-group learning rates
enum class ParamGroup { encoder, tokens, decoder };

struct VitConfig {
    int imageSize = 512;
    int patchSize = 16;
    int embedDim = 192;
    int depth = 6;
    int heads = 3;
    int tokenCount = 4;  // source-aware tokens per bank; 0 removes the banks
    uint64_t initSeed = 1;

    int gridSize() const { return imageSize / patchSize; }
    int numPatches() const { return gridSize() * gridSize(); }
    void validate() const;

    Config toConfig() const;
    static VitConfig fromConfig(const Config& c);
};

// Base delighting network: patch tokenizer -> ViT encoder conditioned on
// source-aware tokens -> token drop -> convolutional upsampling decoder.
class DelightModel {
  public:
    explicit DelightModel(const VitConfig& cfg);

    const VitConfig& config() const { return cfg_; }

    // Linear projection of non-overlapping patches of (image .* mask),
    // plus positional embedding.
    Tensor tokenize(const Image& image, const Image& mask) const;

    // Appends the bank for `source` (when K > 0), runs the encoder; output
    // has N + K rows. Source-aware tokens carry no positional embedding.
    Tensor encode(const Tensor& seq, std::optional<Source> source) const;

    // Consumes exactly N image tokens (callers drop the trailing K first).
    Tensor decode(const Tensor& imageTokens) const;

    Tensor forward(const Image& image, const Image& mask, Source source) const;

    // Inference convenience: no-grad forward to an Image. Default source is
    // `rendered`, the physically-correct bank.
    Image predict(const Image& image, const Image& mask,
                  Source source = Source::rendered) const;

    std::vector<NamedParam>& params() { return params_; }
    const std::vector<NamedParam>& params() const { return params_; }
    std::vector<Tensor> groupParams(ParamGroup g) const;
    size_t parameterCount() const;
    size_t tokenBankParameterCount() const;

    Tensor& param(const std::string& name);
    const Tensor& param(const std::string& name) const;

  private:
    Tensor attention(const Tensor& x, int layer) const;
    Tensor mlp(const Tensor& x, int layer) const;

    VitConfig cfg_;
    std::vector<NamedParam> params_;
    std::vector<ParamGroup> groups_;  // parallel to params_
};

}  // namespace dlt::nn
