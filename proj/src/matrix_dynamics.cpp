#include "gdlab/matrix_dynamics.hpp"

#include <cmath>
#include <stdexcept>

#include "eigen_util.hpp"

namespace gdlab::matdyn {
namespace {

constexpr double kConvergedLoss = 1e-12;
constexpr double kDivergedLoss = 1e9;

void check_dims(const MatrixChain& chain, const MatrixProblem& prob) {
    if (chain.depth() == 0) throw std::invalid_argument("empty chain");
    const std::size_t n = chain.width();
    for (const Matrix& w : chain.layers)
        if (w.rows() != n || w.cols() != n) throw std::invalid_argument("dimension mismatch");
    if (prob.target.rows() != n || prob.target.cols() != n ||
        prob.covariance.rows() != n || prob.covariance.cols() != n)
        throw std::invalid_argument("dimension mismatch");
}

// Per-layer gradients G_i (E Sigma) H_i for one chain, shared error factor ES.
std::vector<Matrix> layer_gradients(const std::vector<Matrix>& layers, const Matrix& error_sigma) {
    const std::size_t L = layers.size();
    std::vector<Matrix> prefix(L);  // H_i = W_1^T ... W_{i-1}^T
    prefix[0] = Matrix::identity(layers[0].rows());
    for (std::size_t i = 1; i < L; ++i) prefix[i] = mat_mul(prefix[i - 1], layers[i - 1].transposed());

    std::vector<Matrix> grads(L);
    Matrix suffix = Matrix::identity(layers[0].rows());  // G_i = W_{i+1}^T ... W_L^T
    for (std::size_t i = L; i-- > 0;) {
        grads[i] = mat_mul(mat_mul(suffix, error_sigma), prefix[i]);
        if (i > 0) suffix = mat_mul(layers[i].transposed(), suffix);
    }
    return grads;
}

double loss_from_error(const Matrix& error, const Matrix& sigma) {
    return 0.5 * trace(mat_mul(mat_mul(error, sigma), error.transposed()));
}

}  // namespace

MatrixChain MatrixChain::identity(std::size_t depth, std::size_t n) {
    MatrixChain c;
    c.layers.assign(depth, Matrix::identity(n));
    return c;
}

Matrix MatrixChain::product() const {
    Matrix p = layers.back();
    for (std::size_t i = layers.size() - 1; i-- > 0;) p = mat_mul(p, layers[i]);
    return p;
}

void MatrixProblem::validate() const {
    if (!target.square() || !covariance.square() || target.rows() != covariance.rows())
        throw std::invalid_argument("dimension mismatch");
    const std::size_t n = covariance.rows();
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = r + 1; c < n; ++c)
            if (std::fabs(covariance(r, c) - covariance(c, r)) > 1e-12)
                throw std::invalid_argument("covariance must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(detail::as_eigen(covariance),
                                                      Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-12)
        throw std::invalid_argument("covariance must be positive semidefinite");
}

DoubleMatrixChain DoubleMatrixChain::identity(std::size_t depth, std::size_t n) {
    return {MatrixChain::identity(depth, n), MatrixChain::identity(depth, n)};
}

MatrixChain matrix_chain_step(const MatrixChain& chain, const MatrixProblem& prob) {
    check_dims(chain, prob);
    const Matrix error = chain.product() - prob.target;
    const Matrix error_sigma = mat_mul(error, prob.covariance);
    const std::vector<Matrix> grads = layer_gradients(chain.layers, error_sigma);

    MatrixChain next = chain;
    for (std::size_t i = 0; i < chain.depth(); ++i) next.layers[i] -= prob.step * grads[i];
    return next;
}

double chain_loss(const MatrixChain& chain, const MatrixProblem& prob) {
    check_dims(chain, prob);
    return loss_from_error(chain.product() - prob.target, prob.covariance);
}

double instability_threshold(std::size_t L, double rho) {
    if (L == 0) throw std::invalid_argument("depth must be positive");
    if (rho <= 0.0) throw std::invalid_argument("spectral radius must be positive");
    const double Ld = static_cast<double>(L);
    return 2.0 / (Ld * std::pow(rho, 2.0 * (Ld - 1.0) / Ld));
}

double safe_step(std::size_t L, double rho) {
    if (L == 0) throw std::invalid_argument("depth must be positive");
    if (rho <= 0.0) throw std::invalid_argument("spectral radius must be positive");
    const double Ld = static_cast<double>(L);
    return std::min(1.0, std::pow(rho, -2.0 * (Ld - 1.0) / Ld)) / Ld;
}

DoubleMatrixChain double_matrix_step(const DoubleMatrixChain& chain, const MatrixProblem& prob) {
    check_dims(chain.plus, prob);
    check_dims(chain.minus, prob);
    if (chain.plus.depth() != chain.minus.depth() || chain.plus.width() != chain.minus.width())
        throw std::invalid_argument("dimension mismatch");

    const Matrix error = chain.plus.product() - chain.minus.product() - prob.target;
    const Matrix error_sigma = mat_mul(error, prob.covariance);
    const std::vector<Matrix> plus_grads = layer_gradients(chain.plus.layers, error_sigma);
    const std::vector<Matrix> minus_grads = layer_gradients(chain.minus.layers, error_sigma);

    DoubleMatrixChain next = chain;
    for (std::size_t i = 0; i < chain.plus.depth(); ++i) {
        next.plus.layers[i] -= prob.step * plus_grads[i];
        next.minus.layers[i] += prob.step * minus_grads[i];
    }
    return next;
}

double double_chain_loss(const DoubleMatrixChain& chain, const MatrixProblem& prob) {
    check_dims(chain.plus, prob);
    check_dims(chain.minus, prob);
    return loss_from_error(chain.plus.product() - chain.minus.product() - prob.target,
                           prob.covariance);
}

namespace {

template <typename Chain, typename StepFn, typename LossFn>
Trajectory simulate_impl(Chain& chain, const MatrixProblem& prob, std::size_t max_iters,
                         StepFn step, LossFn loss_of) {
    if (max_iters == 0) throw std::invalid_argument("max_iters must be positive");
    Trajectory traj;
    double loss = loss_of(chain, prob);
    traj.errors.push_back(loss);

    for (std::size_t k = 0; k < max_iters; ++k) {
        if (loss < kConvergedLoss) {
            traj.verdict.outcome = Outcome::Converged;
            break;
        }
        if (!std::isfinite(loss) || loss > kDivergedLoss) {
            traj.verdict.outcome = Outcome::Diverged;
            break;
        }
        chain = step(chain, prob);
        loss = loss_of(chain, prob);
        traj.errors.push_back(loss);
        ++traj.iterations_run;
    }
    if (traj.verdict.outcome == Outcome::Undecided) {
        if (loss < kConvergedLoss) traj.verdict.outcome = Outcome::Converged;
        else if (!std::isfinite(loss) || loss > kDivergedLoss) traj.verdict.outcome = Outcome::Diverged;
    }
    traj.verdict.final_error = loss;
    return traj;
}

}  // namespace

MatrixSimResult simulate_matrix(MatrixChain chain0, const MatrixProblem& prob,
                                std::size_t max_iters) {
    MatrixSimResult result;
    result.trajectory = simulate_impl(chain0, prob, max_iters, matrix_chain_step, chain_loss);
    result.final_chain = std::move(chain0);
    return result;
}

DoubleMatrixSimResult simulate_double_matrix(DoubleMatrixChain chain0, const MatrixProblem& prob,
                                             std::size_t max_iters) {
    DoubleMatrixSimResult result;
    result.trajectory =
        simulate_impl(chain0, prob, max_iters, double_matrix_step, double_chain_loss);
    result.final_chain = std::move(chain0);
    return result;
}

double decoupling_check(const MatrixChain& chain, const Matrix& eigenbasis) {
    if (!eigenbasis.square() || eigenbasis.rows() != chain.width())
        throw std::invalid_argument("dimension mismatch");
    Eigen::FullPivLU<Eigen::MatrixXd> lu(detail::as_eigen(eigenbasis).eval());
    if (!lu.isInvertible()) throw std::runtime_error("singular M");

    double worst = 0.0;
    for (const Matrix& w : chain.layers) {
        Eigen::MatrixXd in_basis = lu.solve(detail::as_eigen(w) * detail::as_eigen(eigenbasis));
        for (Eigen::Index r = 0; r < in_basis.rows(); ++r)
            for (Eigen::Index c = 0; c < in_basis.cols(); ++c)
                if (r != c) worst = std::max(worst, std::fabs(in_basis(r, c)));
    }
    return worst;
}

}  // namespace gdlab::matdyn
