#include "delight/cli/commands.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "delight/core/digest.hpp"
#include "delight/core/errors.hpp"
#include "delight/core/image_io.hpp"
#include "delight/data/engine.hpp"
#include "delight/eval/metrics.hpp"
#include "delight/eval/report.hpp"
#include "delight/nn/train.hpp"
#include "delight/recon/pipeline.hpp"

namespace dlt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCodeVersion = "facedelight 0.1.0";

std::string resolvePath(const Config& cfg, const std::string& key) {
    std::string p = cfg.requireString(key);
    return p;
}

json digestDir(const fs::path& dir) {
    json out = json::object();
    if (!fs::exists(dir)) return out;
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename() != "run_manifest.json")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out[fs::relative(f, dir).string()] = digestFile(f.string());
    return out;
}

class RunManifestWriter {
  public:
    RunManifestWriter(std::string command, const Config& cfg, std::string outDir)
        : command_(std::move(command)), outDir_(std::move(outDir)),
          start_(std::chrono::steady_clock::now()) {
        manifest_["command"] = command_;
        manifest_["code_version"] = kCodeVersion;
        json cfgEcho = json::object();
        for (const auto& [k, v] : cfg.values()) cfgEcho[k] = v;
        manifest_["config"] = cfgEcho;
    }

    void addInputDigest(const std::string& name, const std::string& path) {
        if (fs::is_directory(path)) manifest_["input_digests"][name] = digestDir(path);
        else if (fs::exists(path)) manifest_["input_digests"][name] = digestFile(path);
    }

    void finish() {
        manifest_["output_digests"] = digestDir(outDir_);
        const auto elapsed = std::chrono::steady_clock::now() - start_;
        manifest_["wall_time_s"] =
            std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count() / 1000.0;
        fs::create_directories(outDir_);
        std::ofstream f(fs::path(outDir_) / "run_manifest.json");
        f << manifest_.dump(2) << "\n";
    }

  private:
    std::string command_, outDir_;
    json manifest_;
    std::chrono::steady_clock::time_point start_;
};

const std::set<std::string> kEngineKeys = {
    "seed",          "n_olat",          "n_rendered",     "resolution",    "render_size",
    "env_height",    "n_envs",          "env_train_begin", "env_train_end", "env_eval_begin",
    "env_eval_end",  "beta",            "n_assets",       "asset_grid_n",  "asset_tex_res",
    "olat_lights",   "olat_blur_sigma", "spec_strength",  "spec_exponent", "sphere_assets",
    "out_dir"};

const std::set<std::string> kVitKeys = {"image_size", "patch_size", "embed_dim",
                                        "depth",      "heads",      "token_count"};

nn::VitConfig vitFromCli(const Config& cfg, uint64_t seed) {
    nn::VitConfig v;
    v.imageSize = int(cfg.getInt("image_size", 512));
    v.patchSize = int(cfg.getInt("patch_size", 16));
    v.embedDim = int(cfg.getInt("embed_dim", 192));
    v.depth = int(cfg.getInt("depth", 6));
    v.heads = int(cfg.getInt("heads", 3));
    v.tokenCount = int(cfg.getInt("token_count", 4));
    v.initSeed = substreamSeed(seed, "init");
    v.validate();
    return v;
}

nn::DelightModel loadBaseModel(const std::string& path) {
    const nn::Checkpoint ckpt = nn::loadCheckpoint(path);
    if (ckpt.meta.getString("kind", "") != "base")
        throw DataError("checkpoint is not a base delighting model: " + path);
    nn::DelightModel model(nn::VitConfig::fromConfig(ckpt.meta));
    nn::restoreParams(ckpt, model.params());
    return model;
}

nn::EnhancerModel loadEnhancerModel(const std::string& path) {
    const nn::Checkpoint ckpt = nn::loadCheckpoint(path);
    if (ckpt.meta.getString("kind", "") != "detail")
        throw DataError("checkpoint is not a detail enhancer: " + path);
    nn::EnhancerModel model(nn::UnetConfig::fromConfig(ckpt.meta));
    nn::restoreParams(ckpt, model.params());
    return model;
}

}  // namespace

std::string resolveOutDir(const Config& cfg) {
    std::string out = cfg.requireString("out_dir");
    const char* root = std::getenv("FACEDELIGHT_OUT_ROOT");
    if (root && *root && fs::path(out).is_relative()) out = (fs::path(root) / out).string();
    return out;
}

void cmdGenerate(const Config& cfg) {
    auto keys = kEngineKeys;
    keys.insert("write_previews");
    cfg.rejectUnknownKeys(keys);

    EngineConfig ecfg = EngineConfig::fromConfig(cfg);
    ecfg.outDir = resolveOutDir(cfg);
    RunManifestWriter manifest("generate", cfg, ecfg.outDir);

    DataEngine engine(ecfg);
    const auto records = engine.generate();

    if (cfg.getBool("write_previews", false)) {
        const fs::path dir = fs::path(ecfg.outDir) / "previews";
        fs::create_directories(dir);
        for (const auto& r : records) {
            const Image img = readFimg(ecfg.outDir + "/" + r.imagePath);
            const Image alb = readFimg(ecfg.outDir + "/" + r.albedoPath);
            const Image mask = readFimg(ecfg.outDir + "/" + r.maskPath);
            Image mask3(mask.height(), mask.width(), 3);
            for (int y = 0; y < mask.height(); ++y)
                for (int x = 0; x < mask.width(); ++x)
                    for (int c = 0; c < 3; ++c) mask3.at(y, x, c) = mask.at(y, x);
            char name[32];
            std::snprintf(name, sizeof(name), "pair%05d.ppm", r.index);
            writePreviewPpm((dir / name).string(), hstack({img, alb, mask3}));
        }
    }
    manifest.finish();
    std::cout << "generated " << records.size() << " pairs in " << ecfg.outDir << "\n";
}

void cmdTrainBase(const Config& cfg) {
    std::set<std::string> keys = {"manifest",   "regime",     "steps",      "phase2_steps",
                                  "batch_size", "lr_encoder", "lr_decoder", "lr_tokens",
                                  "p_olat",     "lambda_l1",  "lambda_perc", "seed",
                                  "out_dir"};
    keys.insert(kVitKeys.begin(), kVitKeys.end());
    cfg.rejectUnknownKeys(keys);

    const std::string outDir = resolveOutDir(cfg);
    RunManifestWriter manifest("train-base", cfg, outDir);
    const std::string manifestPath = resolvePath(cfg, "manifest");
    manifest.addInputDigest("dataset", fs::path(manifestPath).parent_path().string());

    nn::TrainBaseConfig tcfg;
    tcfg.seed = uint64_t(cfg.getInt("seed", 0));
    tcfg.model = vitFromCli(cfg, tcfg.seed);
    tcfg.regime = nn::parseRegime(cfg.getString("regime", "mixed_dlm"));
    tcfg.steps = int(cfg.getInt("steps", 200));
    tcfg.phase2Steps = int(cfg.getInt("phase2_steps", 0));
    tcfg.batchSize = int(cfg.getInt("batch_size", 1));
    tcfg.lrEncoder = cfg.getDouble("lr_encoder", 1e-5);
    tcfg.lrDecoder = cfg.getDouble("lr_decoder", 1e-4);
    tcfg.lrTokens = cfg.getDouble("lr_tokens", 1e-4);
    tcfg.pOlat = cfg.getDouble("p_olat", 0.5);
    tcfg.loss.l1 = cfg.getDouble("lambda_l1", 1.0);
    tcfg.loss.perc = cfg.getDouble("lambda_perc", 0.5);

    const auto pairs = nn::loadPairs(manifestPath);
    std::vector<nn::TrainLogEntry> log;
    nn::DelightModel model = nn::trainBase(pairs, tcfg, &log);

    fs::create_directories(outDir);
    Config meta = model.config().toConfig();
    meta.set("kind", "base");
    meta.set("regime", nn::regimeName(tcfg.regime));
    nn::saveCheckpoint(outDir + "/base.ckpt", meta, model.params());
    nn::writeTrainLog(outDir + "/train_log.txt", log);
    manifest.finish();
    std::cout << "trained base model (" << nn::regimeName(tcfg.regime) << ", " << log.size()
              << " steps) -> " << outDir << "/base.ckpt\n";
}

void cmdTrainDetail(const Config& cfg) {
    std::set<std::string> keys = {"manifest",  "steps",         "batch_size",    "lr",
                                  "lambda_l1", "lambda_perc",   "noise_sigma_max",
                                  "blur_sigma_max", "seed",     "working_res",   "levels",
                                  "base_channels", "out_dir",   "filter_rendered"};
    cfg.rejectUnknownKeys(keys);

    const std::string outDir = resolveOutDir(cfg);
    RunManifestWriter manifest("train-detail", cfg, outDir);
    const std::string manifestPath = resolvePath(cfg, "manifest");
    manifest.addInputDigest("dataset", fs::path(manifestPath).parent_path().string());

    nn::TrainEnhancerConfig tcfg;
    tcfg.seed = uint64_t(cfg.getInt("seed", 0));
    tcfg.model.workingRes = int(cfg.getInt("working_res", 768));
    tcfg.model.levels = int(cfg.getInt("levels", 4));
    tcfg.model.baseChannels = int(cfg.getInt("base_channels", 16));
    tcfg.model.initSeed = substreamSeed(tcfg.seed, "init");
    tcfg.model.validate();
    tcfg.steps = int(cfg.getInt("steps", 200));
    tcfg.batchSize = int(cfg.getInt("batch_size", 1));
    tcfg.lr = cfg.getDouble("lr", 1e-4);
    tcfg.degradation.noiseSigmaMax = cfg.getDouble("noise_sigma_max", 0.05);
    tcfg.degradation.blurSigmaMax = cfg.getDouble("blur_sigma_max", 3.0);
    tcfg.loss.l1 = cfg.getDouble("lambda_l1", 1.0);
    tcfg.loss.perc = cfg.getDouble("lambda_perc", 0.5);

    auto pairs = nn::loadPairs(manifestPath);
    if (cfg.getBool("filter_rendered", false))
        std::erase_if(pairs, [](const nn::LoadedPair& p) { return p.isOlat; });
    // rendered-source training is the contract; the trainer enforces it
    std::vector<nn::TrainLogEntry> log;
    nn::EnhancerModel model = nn::trainEnhancer(pairs, tcfg, &log);

    fs::create_directories(outDir);
    Config meta = model.config().toConfig();
    meta.set("kind", "detail");
    nn::saveCheckpoint(outDir + "/detail.ckpt", meta, model.params());
    nn::writeTrainLog(outDir + "/train_log.txt", log);
    manifest.finish();
    std::cout << "trained detail enhancer (" << log.size() << " steps) -> " << outDir
              << "/detail.ckpt\n";
}

void cmdDelight(const Config& cfg) {
    cfg.rejectUnknownKeys({"manifest", "checkpoint", "enhancer_checkpoint", "source", "out_dir",
                           "write_previews"});
    const std::string outDir = resolveOutDir(cfg);
    RunManifestWriter manifest("delight", cfg, outDir);
    const std::string ckptPath = resolvePath(cfg, "checkpoint");
    if (!fs::exists(ckptPath)) throw DataError("checkpoint not found: " + ckptPath);
    manifest.addInputDigest("checkpoint", ckptPath);
    const std::string manifestPath = resolvePath(cfg, "manifest");
    manifest.addInputDigest("dataset", fs::path(manifestPath).parent_path().string());

    const nn::DelightModel model = loadBaseModel(ckptPath);
    std::optional<nn::EnhancerModel> enhancer;
    if (cfg.has("enhancer_checkpoint")) {
        manifest.addInputDigest("enhancer", cfg.requireString("enhancer_checkpoint"));
        enhancer.emplace(loadEnhancerModel(cfg.requireString("enhancer_checkpoint")));
    }
    const nn::Source source = nn::parseSource(cfg.getString("source", "rendered"));

    const auto pairs = nn::loadPairs(manifestPath);
    fs::create_directories(outDir);
    char name[32];
    for (size_t i = 0; i < pairs.size(); ++i) {
        Image albedo = model.predict(pairs[i].image, pairs[i].mask, source);
        if (enhancer) {
            const Image refined = enhancer->enhance(pairs[i].image, albedo);
            albedo = resizeBilinear(refined, pairs[i].image.height(), pairs[i].image.width());
        }
        std::snprintf(name, sizeof(name), "pred%05zu.fimg", i);
        writeFimg(outDir + "/" + name, albedo);
        if (cfg.getBool("write_previews", false)) {
            std::snprintf(name, sizeof(name), "pred%05zu.ppm", i);
            writePreviewPpm(outDir + "/" + name, albedo);
        }
    }
    manifest.finish();
    std::cout << "delighted " << pairs.size() << " images (source=" << nn::sourceName(source)
              << ") -> " << outDir << "\n";
}

void cmdReconstruct(const Config& cfg) {
    cfg.rejectUnknownKeys({"bundle", "checkpoint", "enhancer_checkpoint", "texture_resolution",
                           "aligned_size", "blend_exponent", "mu_proximity", "mu_tv",
                           "refine_iterations", "out_dir", "write_previews"});
    const std::string outDir = resolveOutDir(cfg);
    RunManifestWriter manifest("reconstruct", cfg, outDir);
    const std::string bundleDir = resolvePath(cfg, "bundle");
    manifest.addInputDigest("bundle", bundleDir);

    const SceneBundle bundle = readSceneBundle(bundleDir);

    ReconstructionConfig rcfg;
    rcfg.textureResolution = int(cfg.getInt("texture_resolution", 1024));
    rcfg.alignedSize = int(cfg.getInt("aligned_size", 128));
    rcfg.fusion.blendExponent = cfg.getDouble("blend_exponent", 2.0);
    rcfg.refine.proximityWeight = cfg.getDouble("mu_proximity", 0.5);
    rcfg.refine.tvWeight = cfg.getDouble("mu_tv", 0.02);
    rcfg.refine.maxIterations = int(cfg.getInt("refine_iterations", 60));

    ViewDelighter delighter;
    std::optional<nn::DelightModel> model;
    std::optional<nn::EnhancerModel> enhancer;
    if (cfg.has("checkpoint")) {
        manifest.addInputDigest("checkpoint", cfg.requireString("checkpoint"));
        model.emplace(loadBaseModel(cfg.requireString("checkpoint")));
        rcfg.alignedSize = model->config().imageSize;
        if (cfg.has("enhancer_checkpoint")) {
            manifest.addInputDigest("enhancer", cfg.requireString("enhancer_checkpoint"));
            enhancer.emplace(loadEnhancerModel(cfg.requireString("enhancer_checkpoint")));
        }
        delighter = networkDelighter(*model, enhancer ? &*enhancer : nullptr);
    } else {
        // diagnostics mode: pass raw views through; isolates geometry,
        // fusion and lighting from network quality
        delighter = [](const Image& img, const Image&) { return img; };
    }

    const ReconstructionResult result = reconstruct(bundle, delighter, rcfg);

    fs::create_directories(outDir);
    writeFimg(outDir + "/albedo_fused.fimg", result.fusedTexture.pixels);
    writeFimg(outDir + "/albedo_validity.fimg", result.fusedTexture.validity);
    writeFimg(outDir + "/albedo_final.fimg", result.finalTexture.pixels);
    writeShCoefficients(outDir + "/sh_lighting.txt", result.shFit.lighting);
    {
        std::ofstream rep(outDir + "/report.txt");
        rep << "views_used " << bundle.views.size() - result.warnings.size() << "/"
            << bundle.views.size() << "\n";
        rep << "sh_observations " << result.shFit.observations << "\n";
        rep << "sh_rms_residual " << result.shFit.rmsResidual << "\n";
        rep << "sh_orthogonality " << result.shFit.orthogonality << "\n";
        for (const auto& w : result.warnings) rep << "warning " << w << "\n";
    }
    if (cfg.getBool("write_previews", false)) {
        writePreviewPpm(outDir + "/albedo_fused.ppm", result.fusedTexture.pixels);
        writePreviewPpm(outDir + "/albedo_final.ppm", result.finalTexture.pixels);
    }
    manifest.finish();
    std::cout << "reconstructed " << rcfg.textureResolution << "x" << rcfg.textureResolution
              << " albedo from " << bundle.views.size() << " views -> " << outDir << "\n";
}

void cmdEvaluate(const Config& cfg) {
    cfg.rejectUnknownKeys(
        {"dataset", "predictions", "method", "out_dir", "scorer", "write_grids"});
    const std::string outDir = resolveOutDir(cfg);
    RunManifestWriter manifest("evaluate", cfg, outDir);
    const std::string datasetManifest = resolvePath(cfg, "dataset");
    const std::string predDir = resolvePath(cfg, "predictions");
    manifest.addInputDigest("dataset", fs::path(datasetManifest).parent_path().string());
    manifest.addInputDigest("predictions", predDir);

    const auto pairs = nn::loadPairs(datasetManifest);
    EvalInputs inputs;
    inputs.method = cfg.getString("method", "facedelight");
    char name[32];
    for (size_t i = 0; i < pairs.size(); ++i) {
        std::snprintf(name, sizeof(name), "pred%05zu.fimg", i);
        const std::string path = predDir + "/" + name;
        if (!fs::exists(path)) throw DataError("missing prediction file: " + path);
        inputs.predictions.push_back(readFimg(path));
        inputs.groundTruths.push_back(pairs[i].albedo);
        inputs.masks.push_back(pairs[i].mask);
        inputs.subjects.push_back(std::to_string(i));
    }

    PerceptualScorer scorer{cfg.getString("scorer", "")};
    const EvalReport report =
        evaluateMethod(inputs, scorer.command.empty() ? nullptr : &scorer);

    fs::create_directories(outDir);
    writeMetricTable(outDir + "/metrics.txt", {report});
    if (cfg.getBool("write_grids", true)) {
        const fs::path grids = fs::path(outDir) / "grids";
        fs::create_directories(grids);
        for (size_t i = 0; i < inputs.predictions.size(); ++i) {
            const ColorTransform t =
                fitColorTransform(inputs.predictions[i], inputs.groundTruths[i], inputs.masks[i]);
            std::snprintf(name, sizeof(name), "grid%05zu.ppm", i);
            writeComparisonGrid((grids / name).string(), pairs[i].image, inputs.predictions[i],
                                applyColorTransform(inputs.predictions[i], t),
                                inputs.groundTruths[i]);
        }
    }
    manifest.finish();
    std::cout << "evaluated " << inputs.predictions.size() << " images: mean PSNR "
              << report.summary.meanPsnr << " dB, mean SSIM " << report.summary.meanSsim << "\n";
}

void cmdReport(const Config& cfg) {
    cfg.rejectUnknownKeys({"dataset", "out_dir", "max_pairs"});
    const std::string outDir = resolveOutDir(cfg);
    RunManifestWriter manifest("report", cfg, outDir);
    const std::string datasetManifest = resolvePath(cfg, "dataset");
    manifest.addInputDigest("dataset", fs::path(datasetManifest).parent_path().string());

    const auto records = readManifest(datasetManifest);
    const auto pairs = nn::loadPairs(datasetManifest);
    const size_t n = std::min<size_t>(pairs.size(), size_t(cfg.getInt("max_pairs", 16)));
    fs::create_directories(outDir);
    char name[48];
    for (size_t i = 0; i < n; ++i) {
        Image mask3(pairs[i].mask.height(), pairs[i].mask.width(), 3);
        for (int y = 0; y < mask3.height(); ++y)
            for (int x = 0; x < mask3.width(); ++x)
                for (int c = 0; c < 3; ++c) mask3.at(y, x, c) = pairs[i].mask.at(y, x);
        std::snprintf(name, sizeof(name), "pair%05d_%s.ppm", records[i].index,
                      records[i].source.c_str());
        writePreviewPpm(outDir + "/" + name, hstack({pairs[i].image, pairs[i].albedo, mask3}));
    }
    manifest.finish();
    std::cout << "wrote " << n << " dataset preview strips -> " << outDir << "\n";
}

int runCli(int argc, const char* const* argv) {
    CLI::App app{"facedelight: facial delighting prior and appearance capture at desk scale"};
    app.require_subcommand(1);

    struct SubSpec {
        std::string name, help;
        void (*fn)(const Config&);
    };
    const std::vector<SubSpec> subs = {
        {"generate", "synthesize a training dataset (OLAT + rendered pairs)", cmdGenerate},
        {"train-base", "train the base delighting network", cmdTrainBase},
        {"train-detail", "train the detail enhancement network", cmdTrainDetail},
        {"delight", "predict albedo for dataset images", cmdDelight},
        {"reconstruct", "multi-view albedo + SH lighting from a scene bundle", cmdReconstruct},
        {"evaluate", "masked metrics with color alignment", cmdEvaluate},
        {"report", "dataset preview strips", cmdReport},
    };

    struct SubState {
        std::string configPath;
        std::vector<std::string> sets;
        void (*fn)(const Config&) = nullptr;
    };
    std::vector<std::shared_ptr<SubState>> states;

    for (const auto& spec : subs) {
        auto* sub = app.add_subcommand(spec.name, spec.help);
        auto state = std::make_shared<SubState>();
        state->fn = spec.fn;
        sub->add_option("--config", state->configPath, "key=value config file");
        sub->add_option("--set", state->sets, "override: key=value (flags win over the file)");
        sub->callback([state] {
            Config cfg = state->configPath.empty() ? Config() : Config::fromFile(state->configPath);
            for (const auto& kv : state->sets) {
                const size_t eq = kv.find('=');
                if (eq == std::string::npos)
                    throw ConfigError("--set expects key=value, got: " + kv);
                cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
            }
            state->fn(cfg);
        });
        states.push_back(state);
    }

    try {
        app.parse(argc, argv);
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: kind=config msg=\"" << e.what() << "\"\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: kind=config msg=\"" << e.what() << "\"\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "error: kind=data msg=\"" << e.what() << "\"\n";
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "error: kind=numerical msg=\"" << e.what() << "\"\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: kind=internal msg=\"" << e.what() << "\"\n";
        return 1;
    }
}

}  // namespace dlt::cli
