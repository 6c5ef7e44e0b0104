#pragma once

#include <string>
#include <vector>

#include "delight/core/image.hpp"
#include "delight/core/rng.hpp"
#include "delight/core/sh.hpp"

namespace dlt {

// Equirectangular HDR radiance map, W = 2H, linear nonnegative values.
struct EnvironmentMap {
    Image pixels;  // H x 2H x 3
    std::string id;

    int height() const { return pixels.height(); }
    int width() const { return pixels.width(); }

    void validate() const;

    // Radiance along a unit direction (bilinear in the equirect domain).
    Eigen::Vector3d radiance(const Eigen::Vector3d& dir) const;

    double totalEnergy() const;  // integral of |L|^2 over the sphere, summed over channels
};

// Fraction of the map's L2 energy outside the order-2 SH subspace,
// clamped to [0,1]. Projection uses solid-angle quadrature over texels.
double classifyHdriFrequency(const EnvironmentMap& env);

// Order-2 SH projection of the radiance map, 9 coefficients per channel.
Eigen::Matrix<double, 9, 3> projectToSh9(const EnvironmentMap& env);

// Horizontal cyclic shift by yaw (radians), linear interpolation between
// source columns. Energy is preserved up to interpolation error.
EnvironmentMap rotateEnv(const EnvironmentMap& env, double yaw);

// Member index drawn with probability proportional to 1 + beta * score.
size_t sampleHdriIndex(const std::vector<double>& scores, double beta, Rng& rng);

// Procedural HDRI pool: smooth low-frequency gradients plus a random
// number of compact bright emitters, so frequency scores spread over the
// full range the sampler cares about.
EnvironmentMap makeProceduralEnv(int height, Rng& rng, const std::string& id);

EnvironmentMap makeConstantEnv(int height, double value, const std::string& id = "const");

}  // namespace dlt
