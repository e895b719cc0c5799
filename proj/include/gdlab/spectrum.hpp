#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "gdlab/matrix.hpp"
#include "gdlab/rng.hpp"

namespace gdlab {

/// Real eigendecomposition A = M diag(eigenvalues) M^{-1}.
/// Eigenvalues are sorted descending; ties broken by lexicographic order of
/// the corresponding eigenvector columns so output is deterministic.
struct Spectrum {
    std::vector<double> eigenvalues;
    Matrix eigenvector_matrix;          // columns are eigenvectors
    Matrix inverse_eigenvector_matrix;

    Matrix reconstruct() const;  // M diag(lambda) M^{-1}
};

/// Dense real eigendecomposition.
/// Throws std::runtime_error("complex or defective spectrum") if any
/// eigenvalue has relative imaginary part above 1e-8 or the eigenvector
/// matrix has condition estimate above 1e10.
Spectrum decompose(const Matrix& a);

/// Max over eigenvalues of |lambda|.
double spectral_radius(const Matrix& a);

/// M Lambda^{1/L} M^{-1} with real positive scalar roots.
/// Throws std::runtime_error("nonpositive eigenvalue") if any eigenvalue <= 0.
Matrix matrix_lth_root(const Matrix& a, std::size_t L);

/// R = M Lambda M^{-1} with eigenvalues i.i.d. uniform on [eig_low, eig_high]
/// and eigenvector entries i.i.d. standard normal. M is redrawn (up to 100
/// tries, then std::runtime_error("degenerate eigenvector draw")) while its
/// condition estimate exceeds 1e6. Returned Spectrum is the planted one,
/// sorted by the decompose() ordering convention.
std::pair<Matrix, Spectrum> random_diagonalizable(std::size_t n, double eig_low,
                                                  double eig_high, SeededRng& rng);

/// Symmetric variant: R = Q Lambda Q^T with Q orthonormal (QR of a Gaussian
/// draw). Chain updates built from transposed factors stay exactly aligned
/// with an orthonormal eigenbasis, so this is the planting used to exercise
/// the decoupled per-eigenvalue dynamics.
std::pair<Matrix, Spectrum> random_symmetric(std::size_t n, double eig_low, double eig_high,
                                             SeededRng& rng);

}  // namespace gdlab
