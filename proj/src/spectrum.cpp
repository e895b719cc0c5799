#include "gdlab/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "eigen_util.hpp"

namespace gdlab {
namespace {

// One-norm condition estimate via explicit inverse; fine at the sizes we use.
double condition_estimate(const Eigen::MatrixXd& m, Eigen::MatrixXd* inverse_out) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    if (!lu.isInvertible()) return std::numeric_limits<double>::infinity();
    Eigen::MatrixXd inv = lu.inverse();
    if (inverse_out) *inverse_out = inv;
    return m.cwiseAbs().colwise().sum().maxCoeff() * inv.cwiseAbs().colwise().sum().maxCoeff();
}

// Sort descending by eigenvalue; ties broken by lexicographic comparison of
// eigenvector columns so repeated eigenvalues still order deterministically.
void sort_spectrum(std::vector<double>& vals, Eigen::MatrixXd& vecs) {
    const auto n = vals.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (vals[a] != vals[b]) return vals[a] > vals[b];
        for (Eigen::Index r = 0; r < vecs.rows(); ++r) {
            if (vecs(r, static_cast<Eigen::Index>(a)) != vecs(r, static_cast<Eigen::Index>(b)))
                return vecs(r, static_cast<Eigen::Index>(a)) < vecs(r, static_cast<Eigen::Index>(b));
        }
        return false;
    });
    std::vector<double> sorted_vals(n);
    Eigen::MatrixXd sorted_vecs(vecs.rows(), vecs.cols());
    for (std::size_t k = 0; k < n; ++k) {
        sorted_vals[k] = vals[order[k]];
        sorted_vecs.col(static_cast<Eigen::Index>(k)) = vecs.col(static_cast<Eigen::Index>(order[k]));
    }
    vals = std::move(sorted_vals);
    vecs = std::move(sorted_vecs);
}

Spectrum make_spectrum(std::vector<double> vals, Eigen::MatrixXd vecs, double cond_limit) {
    sort_spectrum(vals, vecs);
    Eigen::MatrixXd inv;
    double cond = condition_estimate(vecs, &inv);
    if (!(cond < cond_limit)) throw std::runtime_error("complex or defective spectrum");
    Spectrum s;
    s.eigenvalues = std::move(vals);
    s.eigenvector_matrix = detail::from_eigen(vecs);
    s.inverse_eigenvector_matrix = detail::from_eigen(inv);
    return s;
}

}  // namespace

Matrix Spectrum::reconstruct() const {
    Matrix scaled = eigenvector_matrix;
    for (std::size_t r = 0; r < scaled.rows(); ++r)
        for (std::size_t c = 0; c < scaled.cols(); ++c) scaled(r, c) *= eigenvalues[c];
    return mat_mul(scaled, inverse_eigenvector_matrix);
}

Spectrum decompose(const Matrix& a) {
    if (!a.square()) throw std::invalid_argument("decompose requires a square matrix");
    const auto n = a.rows();
    Eigen::MatrixXd m = detail::as_eigen(a);
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, /*computeEigenvectors=*/true);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigensolver failed to converge");

    const auto& cvals = solver.eigenvalues();
    double scale = 1.0;
    for (Eigen::Index i = 0; i < cvals.size(); ++i)
        scale = std::max(scale, std::abs(cvals[i]));
    for (Eigen::Index i = 0; i < cvals.size(); ++i)
        if (std::fabs(cvals[i].imag()) > 1e-8 * scale)
            throw std::runtime_error("complex or defective spectrum");

    std::vector<double> vals(n);
    Eigen::MatrixXd vecs(n, n);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
        vals[static_cast<std::size_t>(i)] = cvals[i].real();
        vecs.col(i) = solver.eigenvectors().col(i).real();
        // normalize for determinism: unit norm, largest-magnitude entry positive
        double norm = vecs.col(i).norm();
        if (norm > 0) vecs.col(i) /= norm;
        Eigen::Index imax = 0;
        vecs.col(i).cwiseAbs().maxCoeff(&imax);
        if (vecs(imax, i) < 0) vecs.col(i) = -vecs.col(i);
    }
    return make_spectrum(std::move(vals), std::move(vecs), 1e10);
}

double spectral_radius(const Matrix& a) {
    const Spectrum s = decompose(a);
    double r = 0.0;
    for (double v : s.eigenvalues) r = std::max(r, std::fabs(v));
    return r;
}

Matrix matrix_lth_root(const Matrix& a, std::size_t L) {
    if (L == 0) throw std::invalid_argument("root order must be positive");
    Spectrum s = decompose(a);
    for (double& v : s.eigenvalues) {
        if (v <= 0.0) throw std::runtime_error("nonpositive eigenvalue");
        v = std::pow(v, 1.0 / static_cast<double>(L));
    }
    return s.reconstruct();
}

std::pair<Matrix, Spectrum> random_diagonalizable(std::size_t n, double eig_low, double eig_high,
                                                  SeededRng& rng) {
    if (n == 0) throw std::invalid_argument("dimension must be positive");
    if (eig_low > eig_high) throw std::invalid_argument("eigenvalue range is empty");

    std::vector<double> vals(n);
    for (auto& v : vals) v = rng.uniform(eig_low, eig_high);

    Eigen::MatrixXd vecs(n, n);
    Eigen::MatrixXd inv;
    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c)
                vecs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rng.normal();
        ok = condition_estimate(vecs, &inv) <= 1e6;
    }
    if (!ok) throw std::runtime_error("degenerate eigenvector draw");

    sort_spectrum(vals, vecs);
    condition_estimate(vecs, &inv);  // refresh inverse for the sorted columns

    Spectrum s;
    s.eigenvalues = vals;
    s.eigenvector_matrix = detail::from_eigen(vecs);
    s.inverse_eigenvector_matrix = detail::from_eigen(inv);
    return {s.reconstruct(), std::move(s)};
}

std::pair<Matrix, Spectrum> random_symmetric(std::size_t n, double eig_low, double eig_high,
                                             SeededRng& rng) {
    if (n == 0) throw std::invalid_argument("dimension must be positive");
    if (eig_low > eig_high) throw std::invalid_argument("eigenvalue range is empty");

    std::vector<double> vals(n);
    for (auto& v : vals) v = rng.uniform(eig_low, eig_high);

    Eigen::MatrixXd gauss(n, n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
            gauss(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rng.normal();
    Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gauss).householderQ();

    sort_spectrum(vals, q);
    Spectrum s;
    s.eigenvalues = vals;
    s.eigenvector_matrix = detail::from_eigen(q);
    s.inverse_eigenvector_matrix = detail::from_eigen(q.transpose().eval());
    return {s.reconstruct(), std::move(s)};
}

}  // namespace gdlab
