#include "delight/nn/train.hpp"

#include <filesystem>
#include <fstream>

#include "delight/core/errors.hpp"
#include "delight/core/image_io.hpp"

namespace dlt::nn {

namespace fs = std::filesystem;

Regime parseRegime(const std::string& s) {
    if (s == "mixed_dlm") return Regime::mixed_dlm;
    if (s == "mixed_no_dlm") return Regime::mixed_no_dlm;
    if (s == "olat_only") return Regime::olat_only;
    if (s == "rendered_only") return Regime::rendered_only;
    if (s == "finetune") return Regime::finetune;
    throw ConfigError("unknown training regime: " + s);
}

const char* regimeName(Regime r) {
    switch (r) {
        case Regime::mixed_dlm: return "mixed_dlm";
        case Regime::mixed_no_dlm: return "mixed_no_dlm";
        case Regime::olat_only: return "olat_only";
        case Regime::rendered_only: return "rendered_only";
        case Regime::finetune: return "finetune";
    }
    return "?";
}

std::vector<LoadedPair> loadPairs(const std::string& manifestPath) {
    const auto records = readManifest(manifestPath);
    const fs::path dir = fs::path(manifestPath).parent_path();
    std::vector<LoadedPair> pairs;
    pairs.reserve(records.size());
    for (const auto& r : records) {
        LoadedPair p;
        p.image = readFimg((dir / r.imagePath).string());
        p.albedo = readFimg((dir / r.albedoPath).string());
        p.mask = readFimg((dir / r.maskPath).string());
        p.isOlat = r.source == "olat";
        pairs.push_back(std::move(p));
    }
    return pairs;
}

void writeTrainLog(const std::string& path, const std::vector<TrainLogEntry>& log) {
    std::ofstream f(path, std::ios::app);
    if (!f) throw DataError("writeTrainLog: cannot open " + path);
    for (const auto& e : log) {
        char line[256];
        std::snprintf(line, sizeof(line),
                      "step=%d regime=%s source=%s loss_total=%.8f loss_l1=%.8f loss_perc=%.8f\n",
                      e.step, regimeName(e.regime), sourceName(e.source), e.lossTotal, e.lossL1,
                      e.lossPerc);
        f << line;
    }
}

namespace {

struct SplitPools {
    std::vector<size_t> olat, rendered;
};

SplitPools splitBySource(const std::vector<LoadedPair>& pairs) {
    SplitPools s;
    for (size_t i = 0; i < pairs.size(); ++i)
        (pairs[i].isOlat ? s.olat : s.rendered).push_back(i);
    return s;
}

void checkRegimePools(Regime regime, const SplitPools& pools) {
    const bool needOlat = regime != Regime::rendered_only;
    const bool needRendered = regime != Regime::olat_only;
    if (needOlat && pools.olat.empty())
        throw DataError(std::string("regime ") + regimeName(regime) + ": no OLAT pairs in dataset");
    if (needRendered && pools.rendered.empty())
        throw DataError(std::string("regime ") + regimeName(regime) +
                        ": no rendered pairs in dataset");
}

// one optimisation phase; sources fixed or sampled per item
void runPhase(DelightModel& model, Adam& opt, const std::vector<LoadedPair>& pairs,
              const SplitPools& pools, const TrainBaseConfig& cfg, Regime phaseRegime,
              int stepBegin, int stepCount, Rng& rng, std::vector<TrainLogEntry>* log) {
    for (int s = 0; s < stepCount; ++s) {
        opt.zeroGrad();
        double lossTotal = 0, lossL1 = 0, lossPerc = 0;
        Source lastSource = Source::rendered;
        for (int b = 0; b < cfg.batchSize; ++b) {
            Source src;
            switch (phaseRegime) {
                case Regime::olat_only: src = Source::olat; break;
                case Regime::rendered_only: src = Source::rendered; break;
                default: src = rng.uniform() < cfg.pOlat ? Source::olat : Source::rendered;
            }
            lastSource = src;
            const auto& pool = src == Source::olat ? pools.olat : pools.rendered;
            const auto& pair = pairs[pool[rng.below(pool.size())]];

            Tensor pred = model.forward(pair.image, pair.mask, src);
            LossTerms terms = delightLoss(pred, pair.albedo, pair.mask, cfg.loss);
            Tensor scaled = scale(terms.total, 1.0 / cfg.batchSize);
            scaled.backward();
            lossTotal += terms.total.item() / cfg.batchSize;
            lossL1 += terms.l1.item() / cfg.batchSize;
            lossPerc += terms.perc.item() / cfg.batchSize;
        }
        opt.clipGradNorm(cfg.gradClipNorm);
        opt.step();
        if (log)
            log->push_back({stepBegin + s, cfg.regime, lastSource, lossTotal, lossL1, lossPerc});
    }
}

}  // namespace

DelightModel trainBase(const std::vector<LoadedPair>& pairs, const TrainBaseConfig& cfg,
                       std::vector<TrainLogEntry>* log) {
    if (pairs.empty()) throw DataError("trainBase: empty dataset");

    VitConfig mc = cfg.model;
    if (cfg.regime != Regime::mixed_dlm) mc.tokenCount = 0;  // banks exist only with DLM
    if (cfg.regime == Regime::mixed_dlm && mc.tokenCount <= 0)
        throw ConfigError("mixed_dlm regime requires token_count > 0");

    DelightModel model(mc);
    const SplitPools pools = splitBySource(pairs);
    checkRegimePools(cfg.regime, pools);

    std::vector<OptGroup> groups;
    groups.push_back({model.groupParams(ParamGroup::encoder), cfg.lrEncoder});
    groups.push_back({model.groupParams(ParamGroup::decoder), cfg.lrDecoder});
    if (mc.tokenCount > 0) groups.push_back({model.groupParams(ParamGroup::tokens), cfg.lrTokens});
    Adam opt(std::move(groups));

    Rng rng = substream(cfg.seed, "train");
    if (cfg.regime == Regime::finetune) {
        runPhase(model, opt, pairs, pools, cfg, Regime::olat_only, 0, cfg.steps, rng, log);
        runPhase(model, opt, pairs, pools, cfg, Regime::rendered_only, cfg.steps,
                 cfg.phase2Steps, rng, log);
    } else {
        runPhase(model, opt, pairs, pools, cfg, cfg.regime, 0, cfg.steps, rng, log);
    }
    return model;
}

double evalMaskedL1(const DelightModel& model, const std::vector<LoadedPair>& pairs,
                    Source tokenSource) {
    if (pairs.empty()) throw DataError("evalMaskedL1: no pairs");
    double acc = 0.0;
    for (const auto& p : pairs) {
        const Image pred = model.predict(p.image, p.mask, tokenSource);
        acc += maskedMeanAbsDiff(pred, p.albedo, p.mask);
    }
    return acc / double(pairs.size());
}

EnhancerModel trainEnhancer(const std::vector<LoadedPair>& pairs, const TrainEnhancerConfig& cfg,
                            std::vector<TrainLogEntry>* log) {
    if (pairs.empty()) throw DataError("trainEnhancer: empty dataset");
    for (const auto& p : pairs)
        if (p.isOlat)
            throw DataError("trainEnhancer: olat-tagged pair in the feed (rendered-only training)");

    EnhancerModel model(cfg.model);
    std::vector<Tensor> allParams;
    for (auto& p : model.params()) allParams.push_back(p.tensor);
    Adam opt({OptGroup{std::move(allParams), cfg.lr}});

    const int R = cfg.model.workingRes;
    Rng rng = substream(cfg.seed, "train-enhancer");
    for (int s = 0; s < cfg.steps; ++s) {
        opt.zeroGrad();
        double lossTotal = 0, lossL1 = 0, lossPerc = 0;
        for (int b = 0; b < cfg.batchSize; ++b) {
            const auto& pair = pairs[rng.below(pairs.size())];
            Rng degradeRng = substream(cfg.seed, "degrade", uint64_t(s) * 1000 + uint64_t(b));
            const Image degraded = degrade(pair.albedo, cfg.degradation, degradeRng);

            // resize everything to the working resolution
            const Image img = resizeBilinear(pair.image, R, R);
            const Image deg = resizeBilinear(degraded, R, R);
            Image target = resizeBilinear(pair.albedo, R, R);
            Image mask(R, R, 1);
            {
                const Image m = resizeBilinear(pair.mask, R, R);
                for (int y = 0; y < R; ++y)
                    for (int x = 0; x < R; ++x) mask.at(y, x) = m.at(y, x) >= 0.5f ? 1.f : 0.f;
            }

            Tensor pred = model.forwardPair(img, deg);
            LossTerms terms = delightLoss(pred, target, mask, cfg.loss);
            Tensor scaled = scale(terms.total, 1.0 / cfg.batchSize);
            scaled.backward();
            lossTotal += terms.total.item() / cfg.batchSize;
            lossL1 += terms.l1.item() / cfg.batchSize;
            lossPerc += terms.perc.item() / cfg.batchSize;
        }
        opt.clipGradNorm(cfg.gradClipNorm);
        opt.step();
        if (log)
            log->push_back({s, Regime::rendered_only, Source::rendered, lossTotal, lossL1,
                            lossPerc});
    }
    return model;
}

}  // namespace dlt::nn
