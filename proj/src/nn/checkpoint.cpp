#include "delight/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "delight/core/errors.hpp"

namespace dlt::nn {

namespace {

constexpr char kMagic[4] = {'D', 'L', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void writeU32(std::ofstream& f, uint32_t v) {
    f.write(reinterpret_cast<const char*>(&v), 4);
}
uint32_t readU32(std::ifstream& f) {
    uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 4);
    return v;
}

}  // namespace

void saveCheckpoint(const std::string& path, const Config& meta,
                    const std::vector<NamedParam>& params) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("saveCheckpoint: cannot open " + path);
    f.write(kMagic, 4);
    writeU32(f, kVersion);

    const std::string metaText = meta.serialize();
    writeU32(f, uint32_t(metaText.size()));
    f.write(metaText.data(), std::streamsize(metaText.size()));

    writeU32(f, uint32_t(params.size()));
    for (const auto& p : params) {
        writeU32(f, uint32_t(p.name.size()));
        f.write(p.name.data(), std::streamsize(p.name.size()));
        writeU32(f, uint32_t(p.tensor.shape().size()));
        for (int d : p.tensor.shape()) {
            const int32_t dd = d;
            f.write(reinterpret_cast<const char*>(&dd), 4);
        }
        std::vector<float> data(p.tensor.numel());
        for (size_t i = 0; i < data.size(); ++i) data[i] = float(p.tensor.value()[Eigen::Index(i)]);
        f.write(reinterpret_cast<const char*>(data.data()),
                std::streamsize(data.size() * sizeof(float)));
    }
    if (!f) throw DataError("saveCheckpoint: write failed for " + path);
}

Checkpoint loadCheckpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("loadCheckpoint: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("loadCheckpoint: bad magic in " + path);
    const uint32_t version = readU32(f);
    if (version != kVersion) throw DataError("loadCheckpoint: unsupported version");

    Checkpoint ckpt;
    const uint32_t metaLen = readU32(f);
    std::string metaText(metaLen, '\0');
    f.read(metaText.data(), metaLen);
    ckpt.meta = Config::fromString(metaText);

    const uint32_t count = readU32(f);
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t nameLen = readU32(f);
        std::string name(nameLen, '\0');
        f.read(name.data(), nameLen);
        const uint32_t ndim = readU32(f);
        CheckpointBlob blob;
        size_t numel = 1;
        for (uint32_t d = 0; d < ndim; ++d) {
            int32_t dim = 0;
            f.read(reinterpret_cast<char*>(&dim), 4);
            blob.shape.push_back(dim);
            numel *= size_t(dim);
        }
        blob.data.resize(numel);
        f.read(reinterpret_cast<char*>(blob.data.data()),
               std::streamsize(numel * sizeof(float)));
        if (!f) throw DataError("loadCheckpoint: truncated blob in " + path);
        ckpt.blobs.emplace(std::move(name), std::move(blob));
    }
    return ckpt;
}

void restoreParams(const Checkpoint& ckpt, std::vector<NamedParam>& params) {
    for (auto& p : params) {
        auto it = ckpt.blobs.find(p.name);
        if (it == ckpt.blobs.end())
            throw DataError("restoreParams: checkpoint missing parameter " + p.name);
        if (it->second.shape != p.tensor.shape())
            throw DataError("restoreParams: shape mismatch for " + p.name);
        for (size_t i = 0; i < it->second.data.size(); ++i)
            p.tensor.value()[Eigen::Index(i)] = double(it->second.data[i]);
    }
}

}  // namespace dlt::nn
