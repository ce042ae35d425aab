#include "procrustes/metric.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "procrustes/error.hpp"

namespace procrustes {

namespace {

void require_same_shape(const Matrix& x1, const Matrix& x2, const char* where) {
    if (x1.rows() != x2.rows() || x1.cols() != x2.cols()) {
        throw DimensionError(std::string(where) + ": shape mismatch " + std::to_string(x1.rows()) + "x" +
                             std::to_string(x1.cols()) + " vs " + std::to_string(x2.rows()) + "x" +
                             std::to_string(x2.cols()));
    }
    if (x1.rows() < 1) throw DimensionError(std::string(where) + ": empty cloud");
}

}  // namespace

Alignment optimal_rotation(const Matrix& x1, const Matrix& x2) {
    require_same_shape(x1, x2, "optimal_rotation");
    const Matrix cross = x1 * x2.transpose();
    Eigen::JacobiSVD<Matrix> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Alignment out;
    out.rotation = svd.matrixU() * svd.matrixV().transpose();
    out.distance = (x1 - out.rotation * x2).norm();
    return out;
}

double procrustes_distance(const Matrix& x1, const Matrix& x2) {
    require_same_shape(x1, x2, "procrustes_distance");
    const Matrix cross = x1 * x2.transpose();
    Eigen::JacobiSVD<Matrix> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double scale = x1.squaredNorm() + x2.squaredNorm();
    const double squared = scale - 2.0 * svd.singularValues().sum();
    // Near-identical classes lose most digits to cancellation in the expansion
    // (and can even go slightly negative); evaluate ||X1 - Q X2|| directly there.
    if (squared < 1e-4 * scale) {
        return (x1 - svd.matrixU() * svd.matrixV().transpose() * x2).norm();
    }
    return std::sqrt(std::max(0.0, squared));
}

double relative_error(const Matrix& x, const Matrix& x_hat) {
    const double norm = x.norm();
    if (!(norm > 0.0)) throw ArgumentError("relative_error: reference cloud has zero norm");
    return procrustes_distance(x, x_hat) / norm;
}

Matrix canonical_representative(const Matrix& x) {
    const Eigen::Index d = x.rows();
    if (d < 1 || x.cols() < d) throw DimensionError("canonical_representative requires k >= d >= 1");
    Eigen::HouseholderQR<Matrix> qr(x);
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();

    const double scale = x.norm();
    for (Eigen::Index i = 0; i < d; ++i) {
        if (!(std::abs(r(i, i)) > kRankTolerance * scale)) {
            throw DegeneracyError("canonical_representative: leading d x d block is singular");
        }
        if (r(i, i) < 0.0) r.row(i) = -r.row(i);
    }
    return r;
}

}  // namespace procrustes
