#pragma once

#include <map>
#include <string>
#include <vector>

#include "delight/core/config.hpp"
#include "delight/nn/vit.hpp"

namespace dlt::nn {

// Checkpoint container (.ckpt):
//   magic "DLCK", u32 version
//   u32 metaLen, meta (key=value config echo, sorted keys)
//   u32 blobCount, then per blob:
//     u32 nameLen, name; u32 ndim, i32 dims[ndim]; f32 data (little endian)
// Parameters are stored float32; training state is not persisted.

struct CheckpointBlob {
    std::vector<int> shape;
    std::vector<float> data;
};

struct Checkpoint {
    Config meta;
    std::map<std::string, CheckpointBlob> blobs;
};

void saveCheckpoint(const std::string& path, const Config& meta,
                    const std::vector<NamedParam>& params);
Checkpoint loadCheckpoint(const std::string& path);

// Copies blob values into matching named parameters; throws DataError on a
// missing name or shape mismatch.
void restoreParams(const Checkpoint& ckpt, std::vector<NamedParam>& params);

}  // namespace dlt::nn
