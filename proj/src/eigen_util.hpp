#pragma once

#include <Eigen/Dense>

#include "gdlab/matrix.hpp"

namespace gdlab::detail {

using RowMajorXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<const RowMajorXd> as_eigen(const Matrix& m) {
    return Eigen::Map<const RowMajorXd>(m.data().data(), static_cast<Eigen::Index>(m.rows()),
                                        static_cast<Eigen::Index>(m.cols()));
}

inline Eigen::Map<RowMajorXd> as_eigen(Matrix& m) {
    return Eigen::Map<RowMajorXd>(m.data().data(), static_cast<Eigen::Index>(m.rows()),
                                  static_cast<Eigen::Index>(m.cols()));
}

inline Matrix from_eigen(const Eigen::MatrixXd& e) {
    Matrix m(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
    as_eigen(m) = e;
    return m;
}

}  // namespace gdlab::detail
