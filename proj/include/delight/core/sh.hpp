#pragma once

#include <array>
#include <cmath>

#include <Eigen/Core>

namespace dlt {

inline constexpr double kPi = 3.14159265358979323846;

// Real spherical harmonics up to order 2, evaluated on a unit direction.
// Index order: (l,m) = (0,0), (1,-1), (1,0), (1,1), (2,-2), (2,-1), (2,0),
// (2,1), (2,2).
inline std::array<double, 9> shBasis9(const Eigen::Vector3d& d) {
    const double x = d.x(), y = d.y(), z = d.z();
    return {
        0.28209479177387814,
        0.4886025119029199 * y,
        0.4886025119029199 * z,
        0.4886025119029199 * x,
        1.0925484305920792 * x * y,
        1.0925484305920792 * y * z,
        0.31539156525252005 * (3.0 * z * z - 1.0),
        1.0925484305920792 * x * z,
        0.5462742152960396 * (x * x - y * y),
    };
}

// Basis for irradiance at a surface normal: the SH basis scaled by the
// clamped-cosine kernel coefficients (pi, 2pi/3, pi/4 per band). With env
// radiance projected to coefficients c, irradiance E(n) = sum_k c_k * B_k(n).
inline std::array<double, 9> irradianceBasis9(const Eigen::Vector3d& n) {
    auto b = shBasis9(n);
    const double a0 = kPi, a1 = 2.0 * kPi / 3.0, a2 = kPi / 4.0;
    b[0] *= a0;
    b[1] *= a1;
    b[2] *= a1;
    b[3] *= a1;
    for (int k = 4; k < 9; ++k) b[k] *= a2;
    return b;
}

// 27 coefficients of an order-2 lighting environment, 9 per color channel.
struct ShLighting {
    Eigen::Matrix<double, 9, 3> coeffs = Eigen::Matrix<double, 9, 3>::Zero();

    // Irradiance at normal n for one channel (clamped at zero: radiance
    // reaching a surface cannot be negative even if the band-limited fit
    // rings below zero).
    Eigen::Vector3d irradiance(const Eigen::Vector3d& n) const {
        const auto b = irradianceBasis9(n);
        Eigen::Vector3d e = Eigen::Vector3d::Zero();
        for (int k = 0; k < 9; ++k)
            for (int ch = 0; ch < 3; ++ch) e[ch] += coeffs(k, ch) * b[k];
        return e;
    }
};

// Equirectangular mapping. Row v in [0,H) covers polar angle theta in
// [v*pi/H, (v+1)*pi/H] measured from +z; column u covers azimuth phi.
// Directions use z-up: (sin t cos p, sin t sin p, cos t).
inline Eigen::Vector3d equirectDir(double u, double v, int width, int height) {
    const double phi = 2.0 * kPi * (u + 0.5) / double(width);
    const double theta = kPi * (v + 0.5) / double(height);
    const double st = std::sin(theta);
    return {st * std::cos(phi), st * std::sin(phi), std::cos(theta)};
}

// Exact solid angle of the texel at row v: dphi * (cos t0 - cos t1).
inline double equirectTexelSolidAngle(int v, int width, int height) {
    const double t0 = kPi * double(v) / double(height);
    const double t1 = kPi * double(v + 1) / double(height);
    return (2.0 * kPi / double(width)) * (std::cos(t0) - std::cos(t1));
}

// Inverse mapping: unit direction to continuous equirect (u, v).
inline void dirToEquirect(const Eigen::Vector3d& d, int width, int height, double* u, double* v) {
    double phi = std::atan2(d.y(), d.x());
    if (phi < 0) phi += 2.0 * kPi;
    const double theta = std::acos(std::clamp(d.z(), -1.0, 1.0));
    *u = phi / (2.0 * kPi) * double(width) - 0.5;
    *v = theta / kPi * double(height) - 0.5;
}

}  // namespace dlt
