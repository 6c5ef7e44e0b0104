#include "delight/recon/sh_fit.hpp"

#include <fstream>

#include <Eigen/Dense>

#include "delight/core/errors.hpp"

namespace dlt {

ShFitResult fitShLighting(const std::vector<ReconView>& views, const UVTexture& albedo,
                          const TriMesh& mesh) {
    if (views.empty()) throw DataError("fitShLighting: no views");

    // accumulate normal equations per channel
    Eigen::Matrix<double, 9, 9> ata[3];
    Eigen::Matrix<double, 9, 1> atb[3];
    for (int ch = 0; ch < 3; ++ch) {
        ata[ch].setZero();
        atb[ch].setZero();
    }
    double btb[3] = {0, 0, 0};
    long nObs = 0;
    const int R = albedo.resolution();

    for (const auto& view : views) {
        const GBuffer gb = rasterize(mesh, view.camera);
        for (int y = 0; y < gb.height; ++y)
            for (int x = 0; x < gb.width; ++x) {
                if (!gb.covered(y, x)) continue;
                if (!view.skinMask.empty() && view.skinMask.at(y, x) < 0.5f) continue;
                const double u = gb.uv.at(y, x, 0), v = gb.uv.at(y, x, 1);
                const float tx = float(u * (R - 1)), ty = float(v * (R - 1));
                if (albedo.validity.sample(ty, tx, 0) < 0.999f) continue;

                const Eigen::Vector3d n(gb.normal.at(y, x, 0), gb.normal.at(y, x, 1),
                                        gb.normal.at(y, x, 2));
                const auto basis = irradianceBasis9(n);
                Eigen::Matrix<double, 9, 1> bvec;
                for (int k = 0; k < 9; ++k) bvec[k] = basis[k];

                ++nObs;
                for (int ch = 0; ch < 3; ++ch) {
                    const double a = albedo.pixels.sample(ty, tx, ch);
                    const double obs = view.image.at(y, x, ch);
                    const Eigen::Matrix<double, 9, 1> row = a * bvec;
                    ata[ch].noalias() += row * row.transpose();
                    atb[ch].noalias() += row * obs;
                    btb[ch] += obs * obs;
                }
            }
    }
    if (nObs < 9) throw DataError("fitShLighting: too few observed pixels");

    ShFitResult res;
    res.observations = nObs;
    double rssSum = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 9, 9>> eig(ata[ch]);
        const double emax = eig.eigenvalues().maxCoeff();
        const double emin = eig.eigenvalues().minCoeff();
        if (emax <= 0 || emin < 1e-12 * emax)
            throw NumericalError(
                "fitShLighting: rank-deficient normal distribution (channel " +
                std::to_string(ch) +
                "); the scene's normals do not span the order-2 basis (e.g. planar scene)");
        const Eigen::Matrix<double, 9, 1> c = eig.eigenvectors() *
            ((eig.eigenvectors().transpose() * atb[ch]).array() /
             eig.eigenvalues().array()).matrix();
        res.lighting.coeffs.col(ch) = c;

        // residual sum of squares without revisiting pixels:
        // |b - Ac|^2 = b'b - 2 c'A'b + c'A'Ac
        const double rss =
            std::max(0.0, btb[ch] - 2.0 * c.dot(atb[ch]) + c.dot(ata[ch] * c));
        rssSum += rss;
        // A^T (b - A c) vanishes at the LS optimum; normalize by the scale
        // of the normal-equations right-hand side
        const Eigen::Matrix<double, 9, 1> atr = atb[ch] - ata[ch] * c;
        res.orthogonality = std::max(
            res.orthogonality, atr.cwiseAbs().maxCoeff() / (atb[ch].cwiseAbs().maxCoeff() + 1e-300));
    }
    res.rmsResidual = std::sqrt(rssSum / double(3 * nObs));
    return res;
}

void writeShCoefficients(const std::string& path, const ShLighting& sh) {
    std::ofstream f(path);
    if (!f) throw DataError("writeShCoefficients: cannot open " + path);
    f.precision(12);
    for (int k = 0; k < 9; ++k)
        f << sh.coeffs(k, 0) << " " << sh.coeffs(k, 1) << " " << sh.coeffs(k, 2) << "\n";
}

ShLighting readShCoefficients(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("readShCoefficients: cannot open " + path);
    ShLighting sh;
    for (int k = 0; k < 9; ++k)
        for (int ch = 0; ch < 3; ++ch)
            if (!(f >> sh.coeffs(k, ch)))
                throw DataError("readShCoefficients: expected 27 numbers in " + path);
    return sh;
}

}  // namespace dlt
