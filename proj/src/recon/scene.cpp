#include "delight/recon/scene.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "delight/core/errors.hpp"
#include "delight/core/image_io.hpp"

namespace dlt {

namespace fs = std::filesystem;

void writeObjMesh(const std::string& path, const TriMesh& mesh) {
    std::ofstream f(path);
    if (!f) throw DataError("writeObjMesh: cannot open " + path);
    f.precision(9);
    for (const auto& p : mesh.positions) f << "v " << p.x() << " " << p.y() << " " << p.z() << "\n";
    for (const auto& t : mesh.uvs) f << "vt " << t.x() << " " << t.y() << "\n";
    for (const auto& n : mesh.normals) f << "vn " << n.x() << " " << n.y() << " " << n.z() << "\n";
    for (const auto& face : mesh.faces)
        f << "f " << face[0] + 1 << "/" << face[0] + 1 << "/" << face[0] + 1 << " "
          << face[1] + 1 << "/" << face[1] + 1 << "/" << face[1] + 1 << " "
          << face[2] + 1 << "/" << face[2] + 1 << "/" << face[2] + 1 << "\n";
}

TriMesh readObjMesh(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("readObjMesh: cannot open " + path);
    TriMesh mesh;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "v") {
            double x, y, z;
            ss >> x >> y >> z;
            mesh.positions.emplace_back(x, y, z);
        } else if (tag == "vt") {
            double u, v;
            ss >> u >> v;
            mesh.uvs.emplace_back(u, v);
        } else if (tag == "vn") {
            double x, y, z;
            ss >> x >> y >> z;
            mesh.normals.emplace_back(x, y, z);
        } else if (tag == "f") {
            std::array<int, 3> face{};
            for (int k = 0; k < 3; ++k) {
                std::string vert;
                ss >> vert;
                // accept i, i/j, i/j/k but require the shared-index form
                const int idx = std::atoi(vert.c_str());
                if (idx <= 0)
                    throw DataError("readObjMesh: bad face index, line " + std::to_string(lineno));
                face[size_t(k)] = idx - 1;
            }
            mesh.faces.push_back(face);
        }
    }
    if (mesh.normals.size() != mesh.positions.size()) mesh.recomputeVertexNormals();
    if (mesh.uvs.size() != mesh.positions.size())
        throw DataError("readObjMesh: per-vertex UVs required (one vt per v)");
    return mesh;
}

void writeSceneBundle(const std::string& dir, const SceneBundle& bundle) {
    fs::create_directories(dir);
    writeObjMesh(dir + "/mesh.obj", bundle.mesh);
    std::ofstream f(dir + "/cameras.txt");
    if (!f) throw DataError("writeSceneBundle: cannot open cameras.txt");
    f.precision(12);
    for (const auto& v : bundle.views) {
        const std::string img = v.id + "_image.fimg";
        const std::string mask = v.id + "_mask.fimg";
        writeFimg(dir + "/" + img, v.image);
        writeFimg(dir + "/" + mask, v.skinMask);
        f << "view " << v.id << "\n";
        f << "image " << img << "\n";
        f << "mask " << mask << "\n";
        f << "intrinsics " << v.camera.fx << " " << v.camera.fy << " " << v.camera.cx << " "
          << v.camera.cy << " " << v.camera.width << " " << v.camera.height << "\n";
        f << "rotation";
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) f << " " << v.camera.rotation(r, c);
        f << "\n";
        f << "translation " << v.camera.translation.x() << " " << v.camera.translation.y() << " "
          << v.camera.translation.z() << "\n";
        f << "landmarks";
        for (const auto& lm : v.landmarks) f << " " << lm.x() << " " << lm.y();
        f << "\n";
        f << "end\n";
    }
}

SceneBundle readSceneBundle(const std::string& dir) {
    SceneBundle bundle;
    bundle.mesh = readObjMesh(dir + "/mesh.obj");

    std::ifstream f(dir + "/cameras.txt");
    if (!f) throw DataError("readSceneBundle: cannot open " + dir + "/cameras.txt");
    std::string line;
    ReconView view;
    bool open = false;
    auto fail = [&](const std::string& what) {
        throw DataError("readSceneBundle: " + what + " (view '" + view.id + "')");
    };
    while (std::getline(f, line)) {
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag.empty() || tag[0] == '#') continue;
        if (tag == "view") {
            view = ReconView{};
            ss >> view.id;
            open = true;
        } else if (tag == "image") {
            std::string p;
            ss >> p;
            view.image = readFimg(dir + "/" + p);
        } else if (tag == "mask") {
            std::string p;
            ss >> p;
            view.skinMask = readFimg(dir + "/" + p);
        } else if (tag == "intrinsics") {
            ss >> view.camera.fx >> view.camera.fy >> view.camera.cx >> view.camera.cy >>
                view.camera.width >> view.camera.height;
            if (!ss) fail("malformed intrinsics");
        } else if (tag == "rotation") {
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) ss >> view.camera.rotation(r, c);
            if (!ss) fail("malformed rotation");
        } else if (tag == "translation") {
            ss >> view.camera.translation.x() >> view.camera.translation.y() >>
                view.camera.translation.z();
            if (!ss) fail("malformed translation");
        } else if (tag == "landmarks") {
            double x, y;
            while (ss >> x >> y) view.landmarks.emplace_back(x, y);
        } else if (tag == "end") {
            if (!open) fail("end without view");
            try {
                view.camera.validate();
            } catch (const DataError& e) {
                fail(e.what());
            }
            if (view.image.empty()) fail("missing image");
            bundle.views.push_back(std::move(view));
            open = false;
        }
    }
    return bundle;
}

static SceneBundle makeBundleCommon(
    const ScanAsset& asset, const SyntheticBundleConfig& cfg,
    const std::function<Image(const GBuffer&, const Camera&)>& shadeFn) {
    SceneBundle bundle;
    bundle.mesh = asset.mesh;
    const double arc = cfg.arcDegrees * kPi / 180.0;
    for (int i = 0; i < cfg.nViews; ++i) {
        const double t = cfg.nViews == 1 ? 0.5 : double(i) / (cfg.nViews - 1);
        const double yaw = (t - 0.5) * arc;
        const double pitch = 0.12 * std::sin(3.0 * kPi * t);  // mild vertical wobble
        ReconView v;
        char id[16];
        std::snprintf(id, sizeof(id), "view%03d", i);
        v.id = id;
        v.camera = frontalCamera(cfg.imageSize, cfg.distance, yaw, pitch);
        const GBuffer gb = rasterize(asset.mesh, v.camera);
        v.image = shadeFn(gb, v.camera);
        v.skinMask = bakeSkinMask(gb, asset);
        v.landmarks = projectLandmarks(asset.mesh, v.camera);
        bundle.views.push_back(std::move(v));
    }
    return bundle;
}

SceneBundle makeSyntheticBundleSh(const ScanAsset& asset, const ShLighting& sh,
                                  const SyntheticBundleConfig& cfg) {
    return makeBundleCommon(
        asset, cfg, [&](const GBuffer& gb, const Camera&) { return shadeWithSh(gb, asset, sh); });
}

SceneBundle makeSyntheticBundleEnv(const ScanAsset& asset, const EnvironmentMap& env,
                                   const SyntheticBundleConfig& cfg) {
    const auto lights = envToLights(env);
    ShadingParams params;
    params.specStrength = cfg.specStrength;
    params.specExponent = cfg.specExponent;
    return makeBundleCommon(asset, cfg, [&](const GBuffer& gb, const Camera& cam) {
        return shadeImage(gb, asset, cam, lights, params);
    });
}

}  // namespace dlt
