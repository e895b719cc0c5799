#pragma once

#include <cstddef>
#include <vector>

#include "gdlab/matrix.hpp"
#include "gdlab/trajectory.hpp"

namespace gdlab::matdyn {

/// L square n-by-n layers; the chain realizes x -> W_L ... W_1 x.
struct MatrixChain {
    std::vector<Matrix> layers;

    std::size_t depth() const { return layers.size(); }
    std::size_t width() const { return layers.empty() ? 0 : layers.front().rows(); }

    static MatrixChain identity(std::size_t depth, std::size_t n);
    Matrix product() const;  // W_L ... W_1
};

struct MatrixProblem {
    Matrix target;      // R, n x n
    Matrix covariance;  // Sigma, symmetric PSD
    double step = 0.0;  // delta

    /// Validates symmetry (1e-12) and eigenvalues >= -1e-12.
    void validate() const;
};

struct DoubleMatrixChain {
    MatrixChain plus;   // W chain
    MatrixChain minus;  // Z chain

    static DoubleMatrixChain identity(std::size_t depth, std::size_t n);
};

/// One gradient step of (1/2)tr((F-R) Sigma (F-R)^T), F = W_L...W_1:
///   W_i <- W_i - delta * G_i (F - R) Sigma H_i
/// with G_i = W_{i+1}^T ... W_L^T (G_L = I) and H_i = W_1^T ... W_{i-1}^T
/// (H_1 = I), all factors from the pre-update matrices.
MatrixChain matrix_chain_step(const MatrixChain& chain, const MatrixProblem& prob);

/// (1/2) tr((F - R) Sigma (F - R)^T).
double chain_loss(const MatrixChain& chain, const MatrixProblem& prob);

/// Above 2/(L * rho^{2(L-1)/L}) no equilibrium with W_L...W_1 = R is stable
/// (Sigma = I, shared eigenspaces, rho = spectral radius of R).
double instability_threshold(std::size_t L, double rho);

/// (1/L) * min{1, rho^{-2(L-1)/L}}: identity-initialized chains converge to
/// R^{1/L} for R with real positive eigenvalues, Sigma = I.
double safe_step(std::size_t L, double rho);

/// Double-network step on E = W_L...W_1 - Z_L...Z_1 - R:
///   W_i <- W_i - delta * G_i^W E Sigma H_i^W
///   Z_i <- Z_i + delta * G_i^Z E Sigma H_i^Z
DoubleMatrixChain double_matrix_step(const DoubleMatrixChain& chain, const MatrixProblem& prob);

double double_chain_loss(const DoubleMatrixChain& chain, const MatrixProblem& prob);

struct MatrixSimResult {
    Trajectory trajectory;  // errors = chain loss per iteration
    MatrixChain final_chain;
};

/// Iterates matrix_chain_step; stops on loss < 1e-12 (Converged), loss > 1e9
/// or non-finite (Diverged), else Undecided after max_iters.
MatrixSimResult simulate_matrix(MatrixChain chain0, const MatrixProblem& prob,
                                std::size_t max_iters);

struct DoubleMatrixSimResult {
    Trajectory trajectory;
    DoubleMatrixChain final_chain;
};

DoubleMatrixSimResult simulate_double_matrix(DoubleMatrixChain chain0, const MatrixProblem& prob,
                                             std::size_t max_iters);

/// Max over layers of the largest off-diagonal magnitude of M^{-1} W_i M;
/// zero when the chain is diagonal in the eigenbasis M.
/// Throws std::runtime_error("singular M") when M cannot be inverted.
double decoupling_check(const MatrixChain& chain, const Matrix& eigenbasis);

}  // namespace gdlab::matdyn
