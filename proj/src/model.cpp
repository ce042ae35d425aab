#include "procrustes/model.hpp"

#include <cmath>
#include <string>

#include "procrustes/error.hpp"

namespace procrustes {

Cloud::Cloud(Matrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() < 1 || entries_.cols() < entries_.rows()) {
        throw DimensionError("cloud must satisfy k >= d >= 1, got d=" + std::to_string(entries_.rows()) +
                             " k=" + std::to_string(entries_.cols()));
    }
    singular_values_ = Eigen::JacobiSVD<Matrix>(entries_).singularValues();
}

Cloud Cloud::checked(Matrix entries, double rank_tolerance) {
    Cloud cloud(std::move(entries));
    if (!cloud.is_full_rank(rank_tolerance)) {
        throw DegeneracyError("cloud is rank deficient: sigma_d/sigma_1 = " +
                              std::to_string(cloud.operator_norm() > 0 ? cloud.sigma_min() / cloud.operator_norm() : 0.0));
    }
    return cloud;
}

Cloud Cloud::unchecked(Matrix entries) { return Cloud(std::move(entries)); }

bool Cloud::is_full_rank(double rank_tolerance) const noexcept {
    const double top = operator_norm();
    return top > 0.0 && sigma_min() > rank_tolerance * top;
}

Matrix sample_gaussian(int rows, int cols, Engine& engine) {
    std::normal_distribution<double> normal;
    Matrix out(rows, cols);
    // Column-major fill order is part of the reproducibility contract.
    for (Eigen::Index j = 0; j < out.cols(); ++j)
        for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) = normal(engine);
    return out;
}

Matrix sample_haar_orthogonal(int d, Engine& engine) {
    if (d < 1) throw DimensionError("orthogonal group dimension must be >= 1");
    const Matrix g = sample_gaussian(d, d, engine);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    const auto r_diag = qr.matrixQR().diagonal();
    // Fold the signs of diag(R) into Q so that R has a nonnegative diagonal;
    // the resulting Q is exactly Haar distributed.
    for (int j = 0; j < d; ++j)
        if (r_diag(j) < 0.0) q.col(j) = -q.col(j);
    return q;
}

Matrix sample_haar_orthogonal(int d, const SeedSpec& seed) {
    Engine engine = make_engine(seed);
    return sample_haar_orthogonal(d, engine);
}

Cloud sample_cloud(int d, int k, const SeedSpec& seed, bool unit_frobenius) {
    if (d < 1 || k < d) {
        throw DimensionError("sample_cloud requires k >= d >= 1, got d=" + std::to_string(d) + " k=" + std::to_string(k));
    }
    Engine engine = make_engine(seed);
    for (int attempt = 0; attempt < kCloudRetries; ++attempt) {
        Matrix x = sample_gaussian(d, k, engine);
        if (unit_frobenius) {
            const double norm = x.norm();
            if (!(norm > 0.0)) continue;
            x /= norm;
        }
        Cloud cloud = Cloud::unchecked(std::move(x));
        if (cloud.is_full_rank()) return cloud;
    }
    throw DegeneracyError("sample_cloud: no full-rank draw after " + std::to_string(kCloudRetries) + " attempts");
}

ObservationStream::ObservationStream(const Cloud& cloud, double sigma, const SeedSpec& seed)
    : x_(cloud.matrix()), sigma_(sigma), engine_(make_engine(seed)) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ArgumentError("noise level must be finite and >= 0");
}

void ObservationStream::next(Matrix& out) { next(out, rotation_); }

void ObservationStream::next(Matrix& out, Matrix& rotation) {
    const auto d = static_cast<int>(x_.rows());
    const auto k = static_cast<int>(x_.cols());
    rotation = sample_haar_orthogonal(d, engine_);
    const Matrix noise = sample_gaussian(d, k, engine_);
    out.noalias() = rotation * x_;
    out += sigma_ * noise;
}

ObservationBatch sample_observations(const Cloud& cloud, double sigma, int n, const SeedSpec& seed) {
    if (n < 1) throw ArgumentError("number of observations must be >= 1");
    ObservationStream stream(cloud, sigma, seed);
    ObservationBatch batch;
    batch.sigma_true = sigma;
    batch.d = cloud.d();
    batch.k = cloud.k();
    batch.n = n;
    batch.seed = seed;
    batch.observations.resize(static_cast<std::size_t>(n));
    for (auto& y : batch.observations) stream.next(y);
    return batch;
}

namespace {

// Wishart_k(dof, I).
Matrix sample_wishart_identity(int k, std::int64_t dof, Engine& engine) {
    if (dof <= 0) return Matrix::Zero(k, k);
    if (dof < 2 * static_cast<std::int64_t>(k)) {
        const Matrix g = sample_gaussian(static_cast<int>(dof), k, engine);
        Matrix s = Matrix::Zero(k, k);
        s.selfadjointView<Eigen::Lower>().rankUpdate(g.transpose());
        return s.selfadjointView<Eigen::Lower>();
    }
    // Bartlett decomposition: S = L L^T, L lower triangular,
    // L_ii^2 ~ chi2(dof - i), L_ij ~ N(0, 1) below the diagonal.
    std::normal_distribution<double> normal;
    Matrix l = Matrix::Zero(k, k);
    for (int i = 0; i < k; ++i) {
        std::chi_squared_distribution<double> chi2(static_cast<double>(dof - i));
        l(i, i) = std::sqrt(chi2(engine));
        for (int j = 0; j < i; ++j) l(i, j) = normal(engine);
    }
    Matrix s = Matrix::Zero(k, k);
    s.selfadjointView<Eigen::Lower>().rankUpdate(l);
    return s.selfadjointView<Eigen::Lower>();
}

}  // namespace

Matrix sample_gram_mean_sufficient(const Cloud& cloud, double sigma, std::int64_t n, const SeedSpec& seed) {
    if (n < 1) throw ArgumentError("number of observations must be >= 1");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ArgumentError("noise level must be finite and >= 0");
    const int d = cloud.d();
    const int k = cloud.k();
    const double nd = static_cast<double>(n);
    Engine engine = make_engine(seed);

    const Matrix shifted = cloud.matrix() + (sigma / std::sqrt(nd)) * sample_gaussian(d, k, engine);
    Matrix m = Matrix::Zero(k, k);
    m.selfadjointView<Eigen::Lower>().rankUpdate(shifted.transpose());
    const Matrix scatter = sample_wishart_identity(k, static_cast<std::int64_t>(d) * (n - 1), engine);
    Matrix out = m.selfadjointView<Eigen::Lower>();
    out += (sigma * sigma / nd) * scatter;
    return out;
}

}  // namespace procrustes
