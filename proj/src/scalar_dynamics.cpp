#include "gdlab/scalar_dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <tuple>

namespace gdlab {

std::string to_string(Outcome o) {
    switch (o) {
        case Outcome::Converged: return "converged";
        case Outcome::Diverged: return "diverged";
        default: return "undecided";
    }
}

void write_trajectory_csv(std::ostream& os, const Trajectory& t) {
    os << "iter,error\n";
    char buf[40];
    for (std::size_t k = 0; k < t.errors.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.16e", t.errors[k]);
        os << k << ',' << buf << '\n';
    }
}

}  // namespace gdlab

namespace gdlab::scalar {
namespace {

constexpr double kConvergedError = 1e-10;
constexpr double kDivergedError = 1e6;

bool converged(double e) { return std::fabs(e) < kConvergedError; }
bool diverged(double e) { return !std::isfinite(e) || std::fabs(e) > kDivergedError; }

}  // namespace

double ScalarChain::product() const {
    double p = 1.0;
    for (double w : weights) p *= w;
    return p;
}

ScalarChain ScalarChain::ones(std::size_t depth) {
    return ScalarChain{std::vector<double>(depth, 1.0)};
}

ScalarChain scalar_chain_step(const ScalarChain& chain, const ScalarProblem& prob) {
    if (chain.depth() != prob.depth) throw std::invalid_argument("dimension mismatch");
    const std::size_t L = chain.depth();
    const double e = chain.product() - prob.lambda;
    const double scale = prob.step * prob.sigma * e;

    ScalarChain next = chain;
    for (std::size_t i = 0; i < L; ++i) {
        // leave-one-out product in ascending index order: identical operand
        // sequences for an all-equal chain, which keeps the symmetric
        // initialization exactly symmetric.
        double g = 1.0;
        for (std::size_t j = 0; j < L; ++j)
            if (j != i) g *= chain.weights[j];
        next.weights[i] = chain.weights[i] - scale * g;
    }
    return next;
}

double stability_bound(const std::vector<double>& equilibrium_weights, double sigma) {
    if (sigma <= 0.0) throw std::invalid_argument("sigma must be positive");
    const std::size_t L = equilibrium_weights.size();
    double denom = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
        double g = 1.0;
        for (std::size_t j = 0; j < L; ++j)
            if (j != i) g *= equilibrium_weights[j] * equilibrium_weights[j];
        denom += g;
    }
    if (denom == 0.0) throw std::invalid_argument("degenerate equilibrium");
    return 2.0 / (sigma * denom);
}

double delta_max(std::size_t L, double lambda, double sigma) {
    if (L == 0) throw std::invalid_argument("depth must be positive");
    if (lambda == 0.0) throw std::invalid_argument("lambda must be nonzero");
    if (sigma <= 0.0) throw std::invalid_argument("sigma must be positive");
    const double Ld = static_cast<double>(L);
    // lambda enters through squared products, so the sign drops out
    return 2.0 / (sigma * Ld * std::pow(std::fabs(lambda), 2.0 * (Ld - 1.0) / Ld));
}

double critical_step(std::size_t L, double lambda, double sigma) {
    if (lambda <= 0.0) throw std::invalid_argument("requires positive lambda");
    if (L == 0) throw std::invalid_argument("depth must be positive");
    if (sigma <= 0.0) throw std::invalid_argument("sigma must be positive");
    const double Ld = static_cast<double>(L);
    if (lambda >= 1.0)
        return std::pow(lambda, -2.0 * (Ld - 1.0) / Ld) / (Ld * sigma);
    return (1.0 - std::pow(lambda, 1.0 / Ld)) / (sigma * (1.0 - lambda));
}

double convergence_rate(std::size_t L, double lambda, double sigma, double delta) {
    if (lambda <= 0.0) throw std::invalid_argument("requires positive lambda");
    if (delta <= 0.0) throw std::invalid_argument("step must be positive");
    if (delta > critical_step(L, lambda, sigma) * (1.0 + 1e-15))
        throw std::invalid_argument("step exceeds critical value");
    const double Ld = static_cast<double>(L);
    if (lambda > 1.0)
        return 1.0 - delta * sigma * (lambda - 1.0) / (std::pow(lambda, 1.0 / Ld) - 1.0);
    return 1.0 - delta * sigma * Ld * std::pow(lambda, 2.0 * (Ld - 1.0) / Ld);
}

double contraction_factor(double w, std::size_t L, double lambda, double sigma, double delta) {
    if (lambda <= 0.0) throw std::invalid_argument("requires positive lambda");
    const double Ld = static_cast<double>(L);
    // sum_{j=0}^{L-1} w^j lambda^{(L-1-j)/L}
    double sum = 0.0;
    double wj = 1.0;
    for (std::size_t j = 0; j < L; ++j) {
        sum += wj * std::pow(lambda, (Ld - 1.0 - static_cast<double>(j)) / Ld);
        wj *= w;
    }
    return 1.0 - delta * sigma * std::pow(w, Ld - 1.0) * sum;
}

double negative_lambda_bound(double lambda, double sigma) {
    if (lambda >= 0.0) throw std::invalid_argument("requires negative lambda");
    if (sigma <= 0.0) throw std::invalid_argument("sigma must be positive");
    return 1.0 / (sigma * (1.0 - lambda));
}

std::pair<double, double> double_scalar_step(double w, double z, const ScalarProblem& prob) {
    const double Ld = static_cast<double>(prob.depth);
    const double e = std::pow(w, Ld) - std::pow(z, Ld) - prob.lambda;
    const double ds = prob.step * prob.sigma;
    return {w - ds * std::pow(w, Ld - 1.0) * e, z + ds * std::pow(z, Ld - 1.0) * e};
}

ScalarSimResult simulate_scalar(ScalarChain chain0, const ScalarProblem& prob,
                                std::size_t max_iters, std::size_t snapshot_stride) {
    if (max_iters == 0) throw std::invalid_argument("max_iters must be positive");
    ScalarSimResult result;
    Trajectory& traj = result.trajectory;

    double e = chain0.product() - prob.lambda;
    traj.errors.push_back(e);
    if (snapshot_stride) traj.weight_snapshots.push_back(chain0.weights);

    for (std::size_t k = 0; k < max_iters; ++k) {
        if (converged(e)) {
            traj.verdict.outcome = Outcome::Converged;
            break;
        }
        if (diverged(e)) {
            traj.verdict.outcome = Outcome::Diverged;
            break;
        }
        chain0 = scalar_chain_step(chain0, prob);
        e = chain0.product() - prob.lambda;
        traj.errors.push_back(e);
        ++traj.iterations_run;
        if (snapshot_stride && traj.iterations_run % snapshot_stride == 0)
            traj.weight_snapshots.push_back(chain0.weights);
    }
    if (traj.verdict.outcome == Outcome::Undecided) {
        if (converged(e)) traj.verdict.outcome = Outcome::Converged;
        else if (diverged(e)) traj.verdict.outcome = Outcome::Diverged;
    }
    traj.verdict.final_error = e;
    result.final_chain = std::move(chain0);
    return result;
}

DoubleScalarSimResult simulate_double_scalar(double w0, double z0, const ScalarProblem& prob,
                                             std::size_t max_iters) {
    if (max_iters == 0) throw std::invalid_argument("max_iters must be positive");
    DoubleScalarSimResult result;
    Trajectory& traj = result.trajectory;
    const double Ld = static_cast<double>(prob.depth);

    double e = std::pow(w0, Ld) - std::pow(z0, Ld) - prob.lambda;
    traj.errors.push_back(e);

    for (std::size_t k = 0; k < max_iters; ++k) {
        if (converged(e)) {
            traj.verdict.outcome = Outcome::Converged;
            break;
        }
        if (diverged(e)) {
            traj.verdict.outcome = Outcome::Diverged;
            break;
        }
        std::tie(w0, z0) = double_scalar_step(w0, z0, prob);
        e = std::pow(w0, Ld) - std::pow(z0, Ld) - prob.lambda;
        traj.errors.push_back(e);
        ++traj.iterations_run;
    }
    if (traj.verdict.outcome == Outcome::Undecided) {
        if (converged(e)) traj.verdict.outcome = Outcome::Converged;
        else if (diverged(e)) traj.verdict.outcome = Outcome::Diverged;
    }
    traj.verdict.final_error = e;
    result.w = w0;
    result.z = z0;
    return result;
}

namespace {

constexpr std::size_t kProbeIters = 100000;
constexpr std::size_t kMonotoneWindow = 1000;
constexpr double kProbePerturbation = 1e-3;
// An unstable equilibrium need not send iterates to infinity: just above the
// bound they period-double into a bounded cycle, or get re-captured by a
// nearby equilibrium on the product manifold. A probe therefore counts as
// stable only if it also stays in a small neighborhood of the original
// equilibrium.
constexpr double kProbeDriftTolerance = 20.0 * kProbePerturbation;

// |e| non-increasing over the last window, with a strict overall decrease.
bool error_monotone_decreasing(const std::vector<double>& errors) {
    if (errors.size() < 2) return false;
    const std::size_t n = errors.size();
    const std::size_t start = n > kMonotoneWindow + 1 ? n - kMonotoneWindow - 1 : 0;
    for (std::size_t k = start; k + 1 < n; ++k)
        if (std::fabs(errors[k + 1]) > std::fabs(errors[k])) return false;
    return std::fabs(errors[n - 1]) < std::fabs(errors[start]);
}

bool near_equilibrium(const ScalarChain& chain, const std::vector<double>& equilibrium) {
    for (std::size_t i = 0; i < equilibrium.size(); ++i) {
        const double scale = std::max(std::fabs(equilibrium[i]), 1e-30);
        if (std::fabs(chain.weights[i] - equilibrium[i]) > kProbeDriftTolerance * scale)
            return false;
    }
    return true;
}

// Classifies a probe step size as stable (true) or unstable. Undecided runs
// count as stable only when the error has been shrinking monotonically; slow
// near-marginal probes get one budget doubling before the fallback applies.
bool probe_stable(const std::vector<double>& equilibrium, const ScalarProblem& prob) {
    ScalarChain chain;
    chain.weights = equilibrium;
    for (double& w : chain.weights) w *= 1.0 + kProbePerturbation;

    ScalarSimResult sim = simulate_scalar(chain, prob, kProbeIters);
    if (sim.trajectory.verdict.outcome == Outcome::Converged)
        return near_equilibrium(sim.final_chain, equilibrium);
    if (sim.trajectory.verdict.outcome == Outcome::Diverged) return false;
    if (error_monotone_decreasing(sim.trajectory.errors))
        return near_equilibrium(sim.final_chain, equilibrium);

    ScalarSimResult more = simulate_scalar(sim.final_chain, prob, kProbeIters);
    if (more.trajectory.verdict.outcome == Outcome::Converged)
        return near_equilibrium(more.final_chain, equilibrium);
    if (more.trajectory.verdict.outcome == Outcome::Diverged) return false;
    return error_monotone_decreasing(more.trajectory.errors) &&
           near_equilibrium(more.final_chain, equilibrium);
}

}  // namespace

double empirical_stability_boundary(std::size_t L, double lambda, double sigma,
                                    const std::vector<double>& equilibrium, double rel_tol) {
    if (equilibrium.size() != L) throw std::invalid_argument("dimension mismatch");
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw std::invalid_argument("rel_tol must be in (0,1)");
    double prod = 1.0;
    for (double w : equilibrium) prod *= w;
    if (std::fabs(prod - lambda) > 1e-12 * std::max(1.0, std::fabs(lambda)))
        throw std::invalid_argument("weights are not an equilibrium for lambda");

    ScalarProblem prob{lambda, sigma, L, 0.0};
    auto stable_at = [&](double delta) {
        prob.step = delta;
        return probe_stable(equilibrium, prob);
    };

    double lo = 1e-9;
    double hi = 10.0 * delta_max(L, lambda, sigma);
    if (!stable_at(lo) || stable_at(hi)) throw std::runtime_error("no bracket found");

    while ((hi - lo) / (0.5 * (hi + lo)) >= rel_tol) {
        const double mid = 0.5 * (hi + lo);
        (stable_at(mid) ? lo : hi) = mid;
    }
    return 0.5 * (hi + lo);
}

}  // namespace gdlab::scalar
