#pragma once

#include "delight/recon/fusion.hpp"

namespace dlt {

struct ShFitResult {
    ShLighting lighting;
    double rmsResidual = 0.0;
    // max |A^T r| / (|A|_F |r|_2 + tiny), per channel worst case; the
    // normal-equations orthogonality certificate of the LS solution
    double orthogonality = 0.0;
    long observations = 0;
};

// Linear least squares for a global order-2 SH lighting:
//   raw_pixel[ch] ~= albedo[ch](uv) * sum_k c_k[ch] * B_k(normal)
// over all pixels observed by any view (coverage, skin mask, valid
// texture). Channels solve independently. Throws NumericalError when the
// normal matrix is rank deficient (e.g. a planar scene).
ShFitResult fitShLighting(const std::vector<ReconView>& views, const UVTexture& albedo,
                          const TriMesh& mesh);

// 27 numbers: 9 rows x 3 channels, text.
void writeShCoefficients(const std::string& path, const ShLighting& sh);
ShLighting readShCoefficients(const std::string& path);

}  // namespace dlt
