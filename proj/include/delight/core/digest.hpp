#pragma once

#include <cstdint>
#include <string>

namespace dlt {

// Content digests for run manifests: FNV-1a over raw bytes, printed as
// 16 hex chars. Not cryptographic; used only to detect input/output drift
// between runs.
uint64_t digestBytes(const void* data, size_t n, uint64_t seed = 0xcbf29ce484222325ULL);
std::string digestFile(const std::string& path);
std::string digestToHex(uint64_t d);

}  // namespace dlt
