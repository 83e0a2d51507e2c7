#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specflow/linalg.hpp"

namespace specflow {

inline constexpr const char* kBasisFormat = "specflow-pca-v1";

// PCA manifold with whitening. basis rows are the top-k eigen-trajectories
// of the sample covariance; scales are the per-component standard
// deviations, so projections of the fitting population are near-isotropic.
struct SpectralBasis {
  int k = 0;
  int D = 0;
  Vector mean;    // D
  Matrix basis;   // k x D, orthonormal rows
  Vector scales;  // k, sqrt(eigenvalue), strictly positive
  Vector evr;     // k, eigenvalue / total variance, descending
};

// Covariance uses 1/(N-1). Throws when the k-th eigenvalue falls at or
// below 1e-12: whitening against a degenerate direction would silently
// distort every downstream likelihood.
SpectralBasis fit_basis(const std::vector<Vector>& flat, int k);

Vector project(const SpectralBasis& b, const Vector& x);      // W^-1 B (x-mu)
Vector reconstruct(const SpectralBasis& b, const Vector& z);  // mu + B^T W z

// One reconstruction per offset with z = fixed except z[component] = offset.
std::vector<Vector> traverse(const SpectralBasis& b, int component,
                             const std::vector<double>& offsets,
                             const Vector& fixed);

std::string serialize_basis(const SpectralBasis& b);
void save_basis(const SpectralBasis& b, const std::string& path);
SpectralBasis load_basis(const std::string& path);

// Stable identity of a fitted basis: hash of its canonical serialization.
// Checkpoints store it; scoring refuses a basis whose hash differs.
uint64_t basis_hash(const SpectralBasis& b);

}  // namespace specflow
