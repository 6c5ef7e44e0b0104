#pragma once

#include <optional>
#include <string>
#include <vector>

#include "delight/core/config.hpp"
#include "delight/data/align.hpp"
#include "delight/data/olat.hpp"

namespace dlt {

struct EngineConfig {
    uint64_t seed = 0;
    int nOlat = 4;
    int nRendered = 4;
    int resolution = 128;        // aligned output size
    int renderSize = 128;        // camera raster size
    int envHeight = 16;          // equirect env height (width = 2x)
    int nEnvs = 16;              // procedural HDRI pool size
    int trainEnvBegin = 0, trainEnvEnd = 12;  // [begin, end)
    int evalEnvBegin = 12, evalEnvEnd = 16;
    double beta = 4.0;           // high-frequency oversampling strength
    int nAssets = 4;
    int assetGridN = 48;
    int assetTexRes = 128;
    int olatLights = 64;
    double olatBlurSigma = 1.5;  // OLAT frame misalignment blur
    double specStrength = 0.35;
    double specExponent = 24.0;
    bool sphereAssets = false;   // mix in sphere subjects on odd asset indices
    std::string outDir;

    static EngineConfig fromConfig(const Config& cfg);
    Config toConfig() const;
    void validate() const;
};

struct PairRecord {
    int index = 0;
    std::string source;  // "olat" | "rendered"
    std::string hdriId;
    double yaw = 0.0;
    uint64_t seed = 0;
    std::string imagePath, albedoPath, maskPath;
};

// Shared pools and caches for a generation run; exposed so tests and the
// reconstruction demo can reuse the same deterministic assets.
class DataEngine {
  public:
    explicit DataEngine(const EngineConfig& cfg);

    const EngineConfig& config() const { return cfg_; }
    const std::vector<EnvironmentMap>& envPool() const { return envs_; }
    const std::vector<double>& envScores() const { return scores_; }
    const ScanAsset& asset(int index);
    const OlatCapture& olatCapture(int index);
    Camera assetCamera(int index) const;

    std::vector<int> trainEnvIndices() const;
    std::vector<int> evalEnvIndices() const;

    struct Pair {
        Image image, albedo, mask;
        PairRecord record;
    };
    // Fully determined by (config, index); no cross-pair state.
    Pair makePair(int index);
    Pair makeEvalPair(int index);  // same recipe, eval env split

    // Writes all pairs plus manifest.jsonl under cfg.outDir; returns records.
    std::vector<PairRecord> generate();

  private:
    Pair makePairFromSplit(int index, const std::vector<int>& split, const char* streamName);

    EngineConfig cfg_;
    std::vector<EnvironmentMap> envs_;
    std::vector<double> scores_;
    std::vector<std::optional<ScanAsset>> assets_;
    std::vector<std::optional<OlatCapture>> olatCaps_;
};

void writeManifest(const std::string& path, const std::vector<PairRecord>& records);
std::vector<PairRecord> readManifest(const std::string& path);

}  // namespace dlt
