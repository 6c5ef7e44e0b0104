#include "delight/data/engine.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "delight/core/errors.hpp"
#include "delight/core/image_io.hpp"

namespace dlt {

namespace fs = std::filesystem;
using nlohmann::json;

EngineConfig EngineConfig::fromConfig(const Config& cfg) {
    EngineConfig e;
    e.seed = uint64_t(cfg.getInt("seed", 0));
    e.nOlat = int(cfg.getInt("n_olat", e.nOlat));
    e.nRendered = int(cfg.getInt("n_rendered", e.nRendered));
    e.resolution = int(cfg.getInt("resolution", e.resolution));
    e.renderSize = int(cfg.getInt("render_size", e.renderSize));
    e.envHeight = int(cfg.getInt("env_height", e.envHeight));
    e.nEnvs = int(cfg.getInt("n_envs", e.nEnvs));
    e.trainEnvBegin = int(cfg.getInt("env_train_begin", e.trainEnvBegin));
    e.trainEnvEnd = int(cfg.getInt("env_train_end", e.trainEnvEnd));
    e.evalEnvBegin = int(cfg.getInt("env_eval_begin", e.evalEnvBegin));
    e.evalEnvEnd = int(cfg.getInt("env_eval_end", e.evalEnvEnd));
    e.beta = cfg.getDouble("beta", e.beta);
    e.nAssets = int(cfg.getInt("n_assets", e.nAssets));
    e.assetGridN = int(cfg.getInt("asset_grid_n", e.assetGridN));
    e.assetTexRes = int(cfg.getInt("asset_tex_res", e.assetTexRes));
    e.olatLights = int(cfg.getInt("olat_lights", e.olatLights));
    e.olatBlurSigma = cfg.getDouble("olat_blur_sigma", e.olatBlurSigma);
    e.specStrength = cfg.getDouble("spec_strength", e.specStrength);
    e.specExponent = cfg.getDouble("spec_exponent", e.specExponent);
    e.sphereAssets = cfg.getBool("sphere_assets", e.sphereAssets);
    e.outDir = cfg.getString("out_dir", e.outDir);
    e.validate();
    return e;
}

Config EngineConfig::toConfig() const {
    Config c;
    c.set("seed", std::to_string(seed));
    c.set("n_olat", std::to_string(nOlat));
    c.set("n_rendered", std::to_string(nRendered));
    c.set("resolution", std::to_string(resolution));
    c.set("render_size", std::to_string(renderSize));
    c.set("env_height", std::to_string(envHeight));
    c.set("n_envs", std::to_string(nEnvs));
    c.set("env_train_begin", std::to_string(trainEnvBegin));
    c.set("env_train_end", std::to_string(trainEnvEnd));
    c.set("env_eval_begin", std::to_string(evalEnvBegin));
    c.set("env_eval_end", std::to_string(evalEnvEnd));
    c.set("beta", std::to_string(beta));
    c.set("n_assets", std::to_string(nAssets));
    c.set("asset_grid_n", std::to_string(assetGridN));
    c.set("asset_tex_res", std::to_string(assetTexRes));
    c.set("olat_lights", std::to_string(olatLights));
    c.set("olat_blur_sigma", std::to_string(olatBlurSigma));
    c.set("spec_strength", std::to_string(specStrength));
    c.set("spec_exponent", std::to_string(specExponent));
    c.set("sphere_assets", sphereAssets ? "true" : "false");
    c.set("out_dir", outDir);
    return c;
}

void EngineConfig::validate() const {
    if (nOlat < 0 || nRendered < 0) throw ConfigError("pair counts must be nonnegative");
    if (trainEnvBegin < 0 || trainEnvEnd > nEnvs || evalEnvBegin < 0 || evalEnvEnd > nEnvs)
        throw ConfigError("env split out of pool range");
    if (trainEnvBegin >= trainEnvEnd) throw ConfigError("empty train env split");
    // disjointness of train/eval HDRI splits
    const int lo = std::max(trainEnvBegin, evalEnvBegin);
    const int hi = std::min(trainEnvEnd, evalEnvEnd);
    if (lo < hi)
        throw DataError("train/eval HDRI splits overlap on env indices [" + std::to_string(lo) +
                        ", " + std::to_string(hi) + ")");
}

DataEngine::DataEngine(const EngineConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    envs_.reserve(cfg_.nEnvs);
    scores_.reserve(cfg_.nEnvs);
    char idbuf[32];
    for (int i = 0; i < cfg_.nEnvs; ++i) {
        Rng rng = substream(cfg_.seed, "env", uint64_t(i));
        std::snprintf(idbuf, sizeof(idbuf), "env%03d", i);
        envs_.push_back(makeProceduralEnv(cfg_.envHeight, rng, idbuf));
        scores_.push_back(classifyHdriFrequency(envs_.back()));
    }
    assets_.resize(cfg_.nAssets);
    olatCaps_.resize(cfg_.nAssets);
}

const ScanAsset& DataEngine::asset(int index) {
    if (index < 0 || index >= cfg_.nAssets) throw DataError("asset index out of range");
    if (!assets_[index]) {
        Rng rng = substream(cfg_.seed, "asset", uint64_t(index));
        assets_[index] = (cfg_.sphereAssets && index % 2 == 1)
                             ? makeTexturedSphere(cfg_.assetGridN, cfg_.assetTexRes, rng)
                             : makeProceduralFace(cfg_.assetGridN, cfg_.assetTexRes, rng);
    }
    return *assets_[index];
}

Camera DataEngine::assetCamera(int index) const {
    Rng rng = substream(cfg_.seed, "asset-cam", uint64_t(index));
    const double yawJ = rng.uniform(-0.12, 0.12);
    const double pitchJ = rng.uniform(-0.08, 0.08);
    return frontalCamera(cfg_.renderSize, 3.2, yawJ, pitchJ);
}

const OlatCapture& DataEngine::olatCapture(int index) {
    if (index < 0 || index >= cfg_.nAssets) throw DataError("asset index out of range");
    if (!olatCaps_[index]) {
        ShadingParams shading;
        shading.specExponent = cfg_.specExponent;
        shading.specStrength = cfg_.specStrength;
        olatCaps_[index] = captureOlat(asset(index), assetCamera(index), cfg_.olatLights,
                                       cfg_.olatBlurSigma, shading);
    }
    return *olatCaps_[index];
}

std::vector<int> DataEngine::trainEnvIndices() const {
    std::vector<int> idx;
    for (int i = cfg_.trainEnvBegin; i < cfg_.trainEnvEnd; ++i) idx.push_back(i);
    return idx;
}

std::vector<int> DataEngine::evalEnvIndices() const {
    std::vector<int> idx;
    for (int i = cfg_.evalEnvBegin; i < cfg_.evalEnvEnd; ++i) idx.push_back(i);
    return idx;
}

DataEngine::Pair DataEngine::makePair(int index) {
    return makePairFromSplit(index, trainEnvIndices(), "pair");
}

DataEngine::Pair DataEngine::makeEvalPair(int index) {
    const auto split = evalEnvIndices();
    if (split.empty()) throw DataError("eval env split is empty");
    return makePairFromSplit(index, split, "eval-pair");
}

DataEngine::Pair DataEngine::makePairFromSplit(int index, const std::vector<int>& split,
                                               const char* streamName) {
    Pair pair;
    pair.record.index = index;
    pair.record.seed = substreamSeed(cfg_.seed, streamName, uint64_t(index));
    Rng rng(pair.record.seed);

    const bool isOlat = index < cfg_.nOlat;
    pair.record.source = isOlat ? "olat" : "rendered";

    const int assetIdx = int(rng.below(uint64_t(cfg_.nAssets)));

    std::vector<double> splitScores(split.size());
    for (size_t i = 0; i < split.size(); ++i) splitScores[i] = scores_[split[i]];
    const int envIdx = split[sampleHdriIndex(splitScores, cfg_.beta, rng)];
    pair.record.hdriId = envs_[envIdx].id;
    pair.record.yaw = rng.uniform(0.0, 2.0 * kPi);
    const EnvironmentMap env = rotateEnv(envs_[envIdx], pair.record.yaw);

    Image rawImage, rawAlbedo, rawMask;
    std::vector<Eigen::Vector2d> landmarks;
    if (isOlat) {
        const OlatCapture& cap = olatCapture(assetIdx);
        rawImage = relightOlat(cap, env);
        rawAlbedo = cap.albedoProxy;
        rawMask = cap.mask;
        landmarks = cap.landmarks;
    } else {
        ShadingParams shading;
        shading.specExponent = cfg_.specExponent;
        shading.specStrength = cfg_.specStrength;
        const RenderResult rr = renderScan(asset(assetIdx), env, assetCamera(assetIdx), shading);
        rawImage = rr.image;
        rawAlbedo = rr.albedoGt;
        rawMask = rr.mask;
        landmarks = projectLandmarks(asset(assetIdx).mesh, assetCamera(assetIdx));
    }

    const Similarity2D toCanon = fitSimilarity(landmarks, canonicalTemplate(cfg_.resolution));
    pair.image = warpSimilarity(rawImage, toCanon, cfg_.resolution, cfg_.resolution);
    pair.albedo = warpSimilarity(rawAlbedo, toCanon, cfg_.resolution, cfg_.resolution);
    pair.mask = warpSimilarity(rawMask, toCanon, cfg_.resolution, cfg_.resolution, true);
    return pair;
}

std::vector<PairRecord> DataEngine::generate() {
    if (cfg_.outDir.empty()) throw ConfigError("generate: out_dir not set");
    fs::create_directories(cfg_.outDir);
    std::vector<PairRecord> records;
    const int total = cfg_.nOlat + cfg_.nRendered;
    char name[64];
    for (int i = 0; i < total; ++i) {
        Pair p = makePair(i);
        std::snprintf(name, sizeof(name), "pair%05d", i);
        p.record.imagePath = std::string(name) + "_image.fimg";
        p.record.albedoPath = std::string(name) + "_albedo.fimg";
        p.record.maskPath = std::string(name) + "_mask.fimg";
        writeFimg(cfg_.outDir + "/" + p.record.imagePath, p.image);
        writeFimg(cfg_.outDir + "/" + p.record.albedoPath, p.albedo);
        writeFimg(cfg_.outDir + "/" + p.record.maskPath, p.mask);
        records.push_back(p.record);
    }
    writeManifest(cfg_.outDir + "/manifest.jsonl", records);
    return records;
}

void writeManifest(const std::string& path, const std::vector<PairRecord>& records) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("writeManifest: cannot open " + path);
    for (const auto& r : records) {
        json j;
        j["index"] = r.index;
        j["source"] = r.source;
        j["hdri_id"] = r.hdriId;
        j["yaw"] = r.yaw;
        j["seed"] = r.seed;
        j["paths"] = {{"image", r.imagePath}, {"albedo", r.albedoPath}, {"mask", r.maskPath}};
        f << j.dump() << "\n";
    }
}

std::vector<PairRecord> readManifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("readManifest: cannot open " + path);
    std::vector<PairRecord> records;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw DataError("readManifest: malformed JSON line in " + path);
        PairRecord r;
        r.index = j.at("index").get<int>();
        r.source = j.at("source").get<std::string>();
        r.hdriId = j.at("hdri_id").get<std::string>();
        r.yaw = j.at("yaw").get<double>();
        r.seed = j.at("seed").get<uint64_t>();
        r.imagePath = j.at("paths").at("image").get<std::string>();
        r.albedoPath = j.at("paths").at("albedo").get<std::string>();
        r.maskPath = j.at("paths").at("mask").get<std::string>();
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace dlt
