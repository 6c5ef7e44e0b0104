#pragma once

#include <string>
#include <vector>

#include "delight/core/config.hpp"

namespace dlt::cli {

// Subcommand entry points. Each consumes a fully resolved Config (file
// values with flag overrides applied), rejects unknown keys, runs, and
// writes a run_manifest.json next to its outputs. Exceptions map to exit
// codes in runCli: ConfigError=2, DataError=3, NumericalError=4.
void cmdGenerate(const Config& cfg);
void cmdTrainBase(const Config& cfg);
void cmdTrainDetail(const Config& cfg);
void cmdDelight(const Config& cfg);
void cmdReconstruct(const Config& cfg);
void cmdEvaluate(const Config& cfg);
void cmdReport(const Config& cfg);

int runCli(int argc, const char* const* argv);

// Resolves out_dir against $FACEDELIGHT_OUT_ROOT when the path is relative.
std::string resolveOutDir(const Config& cfg);

}  // namespace dlt::cli
