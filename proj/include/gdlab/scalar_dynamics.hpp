#pragma once

#include <cstddef>
#include <vector>

#include "gdlab/trajectory.hpp"

namespace gdlab::scalar {

/// L scalar weights w_1..w_L estimating a linear map x -> lambda*x as the
/// product w_L*...*w_1.
struct ScalarChain {
    std::vector<double> weights;

    std::size_t depth() const { return weights.size(); }
    double product() const;

    static ScalarChain ones(std::size_t depth);
};

struct ScalarProblem {
    double lambda = 1.0;  // target, nonzero
    double sigma = 1.0;   // mean squared input, positive
    std::size_t depth = 1;
    double step = 0.0;    // delta, positive
};

/// One gradient-descent iteration, all right-hand sides at the pre-update
/// weights: w_i <- w_i - delta*sigma*(prod_j w_j - lambda)*prod_{j!=i} w_j.
/// The leave-one-out products are accumulated in a fixed index order, so an
/// all-equal chain stays bit-identical across indices forever.
ScalarChain scalar_chain_step(const ScalarChain& chain, const ScalarProblem& prob);

/// Largest asymptotically stable step size at an equilibrium:
/// 2 / (sigma * sum_i prod_{j!=i} w_j^2).
/// Throws std::invalid_argument("degenerate equilibrium") if the denominator
/// vanishes (more than one zero weight).
double stability_bound(const std::vector<double>& equilibrium_weights, double sigma);

/// Stability bound at the balanced equilibrium |w_i| = |lambda|^{1/L}:
/// 2 / (sigma * L * |lambda|^{2(L-1)/L}).
double delta_max(std::size_t L, double lambda, double sigma);

/// Step-size threshold for exponential convergence from w_i[0] = 1, lambda > 0:
///   (L*sigma)^{-1} * lambda^{-2(L-1)/L}          if lambda >= 1
///   sigma^{-1} (1-lambda)^{-1} (1-lambda^{1/L})  if lambda in (0,1)
/// Throws std::invalid_argument("requires positive lambda") otherwise.
double critical_step(std::size_t L, double lambda, double sigma);

/// Contraction envelope rho(delta) for |w[k] - lambda^{1/L}| <= rho^k |1 - lambda^{1/L}|:
///   1 - delta*sigma*(lambda-1)/(lambda^{1/L}-1)  if lambda > 1
///   1 - delta*sigma*L*lambda^{2(L-1)/L}          if lambda in (0,1]
/// Requires 0 < delta <= critical_step; throws
/// std::invalid_argument("step exceeds critical value") above it.
double convergence_rate(std::size_t L, double lambda, double sigma, double delta);

/// Per-step factor mu(w) = 1 - delta*sigma*w^{L-1} * sum_{j=0}^{L-1} w^j lambda^{(L-1-j)/L}.
double contraction_factor(double w, std::size_t L, double lambda, double sigma, double delta);

/// Prop-3 threshold 1/(sigma*(1-lambda)) below which identity-initialized
/// chains with lambda < 0 collapse to zero.
/// Throws std::invalid_argument("requires negative lambda") if lambda >= 0.
double negative_lambda_bound(double lambda, double sigma);

/// One step of the symmetric double chain (representative weights w and z):
///   e = w^L - z^L - lambda
///   w <- w - delta*sigma*w^{L-1}*e,  z <- z + delta*sigma*z^{L-1}*e
std::pair<double, double> double_scalar_step(double w, double z, const ScalarProblem& prob);

struct ScalarSimResult {
    Trajectory trajectory;
    ScalarChain final_chain;
};

/// Iterates scalar_chain_step until |e| < 1e-10 (Converged), |e| > 1e6 or
/// non-finite (Diverged), or max_iters (Undecided). e[k] is recorded every
/// iteration; weight snapshots every snapshot_stride iterations when nonzero.
ScalarSimResult simulate_scalar(ScalarChain chain0, const ScalarProblem& prob,
                                std::size_t max_iters, std::size_t snapshot_stride = 0);

struct DoubleScalarSimResult {
    Trajectory trajectory;
    double w = 0.0, z = 0.0;
};

/// Double-chain analogue of simulate_scalar on representative weights.
DoubleScalarSimResult simulate_double_scalar(double w0, double z0, const ScalarProblem& prob,
                                             std::size_t max_iters);

/// Locates the stability boundary in delta by bisection between a
/// known-stable and known-unstable bracket. Each probe perturbs every
/// equilibrium weight by a relative +1e-3 and simulates 1e5 iterations
/// (budget doubled once for slow near-marginal probes). Returns the bracket
/// midpoint once bracket width / midpoint < rel_tol.
/// Throws std::runtime_error("no bracket found") if delta = 1e-9 is unstable
/// or delta = 10*delta_max is stable.
double empirical_stability_boundary(std::size_t L, double lambda, double sigma,
                                    const std::vector<double>& equilibrium, double rel_tol);

}  // namespace gdlab::scalar
