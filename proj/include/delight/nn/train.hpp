#pragma once

#include <string>
#include <vector>

#include "delight/data/engine.hpp"
#include "delight/nn/checkpoint.hpp"
#include "delight/nn/loss.hpp"
#include "delight/nn/optim.hpp"
#include "delight/nn/unet.hpp"

namespace dlt::nn {

enum class Regime { mixed_dlm, mixed_no_dlm, olat_only, rendered_only, finetune };
Regime parseRegime(const std::string& s);
const char* regimeName(Regime r);

struct LoadedPair {
    Image image, albedo, mask;
    bool isOlat = false;
};
std::vector<LoadedPair> loadPairs(const std::string& manifestPath);

struct TrainLogEntry {
    int step = 0;
    Regime regime = Regime::mixed_dlm;
    Source source = Source::rendered;
    double lossTotal = 0, lossL1 = 0, lossPerc = 0;
};
// append-only text log: step regime source loss_total loss_l1 loss_perc
void writeTrainLog(const std::string& path, const std::vector<TrainLogEntry>& log);

struct TrainBaseConfig {
    VitConfig model;
    Regime regime = Regime::mixed_dlm;
    uint64_t seed = 0;
    int steps = 200;
    int phase2Steps = 0;   // finetune regime only
    int batchSize = 1;
    double lrEncoder = 1e-5;
    double lrDecoder = 1e-4;
    double lrTokens = 1e-4;
    double pOlat = 0.5;    // per-item source probability in mixed regimes
    double gradClipNorm = 1.0;  // global-norm clip; <= 0 disables
    LossWeights loss;
};

// Gradient-descent training over loaded pairs; deterministic given the
// seed. Throws DataError on regime/dataset mismatch (e.g. olat_only with
// no OLAT pairs).
DelightModel trainBase(const std::vector<LoadedPair>& pairs, const TrainBaseConfig& cfg,
                       std::vector<TrainLogEntry>* log = nullptr);

// Mean masked L1 of model predictions (under `tokenSource` conditioning)
// against each pair's stored albedo.
double evalMaskedL1(const DelightModel& model, const std::vector<LoadedPair>& pairs,
                    Source tokenSource);

struct TrainEnhancerConfig {
    UnetConfig model;
    uint64_t seed = 0;
    int steps = 200;
    int batchSize = 1;
    double lr = 1e-4;  // single rate for the whole UNet
    double gradClipNorm = 1.0;
    DegradationSpec degradation;
    LossWeights loss;
};

// Rendered-source pairs only; an olat-tagged pair in the feed is an error.
EnhancerModel trainEnhancer(const std::vector<LoadedPair>& pairs, const TrainEnhancerConfig& cfg,
                            std::vector<TrainLogEntry>* log = nullptr);

}  // namespace dlt::nn
