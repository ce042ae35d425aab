#include "procrustes/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "procrustes/error.hpp"

namespace procrustes {

namespace {

void require_rank_in_range(int d, int k, const char* where) {
    if (d < 1 || d > k) {
        throw ArgumentError(std::string(where) + ": need 1 <= d <= k, got d=" + std::to_string(d) +
                            " k=" + std::to_string(k));
    }
}

void require_sigma(double sigma, const char* where) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw ArgumentError(std::string(where) + ": noise level must be finite and >= 0");
    }
}

}  // namespace

GramEstimate::GramEstimate(const Matrix& matrix) {
    if (matrix.rows() != matrix.cols() || matrix.rows() < 1) {
        throw DimensionError("GramEstimate: matrix must be square and nonempty");
    }
    matrix_ = 0.5 * (matrix + matrix.transpose());

    Eigen::SelfAdjointEigenSolver<Matrix> solver(matrix_);
    if (solver.info() != Eigen::Success) throw NumericalError("GramEstimate: eigensolver did not converge");

    // Descending order; ties keep the backend's ascending index order.
    const Eigen::Index k = matrix_.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const Vector& values = solver.eigenvalues();
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return values(a) > values(b); });

    eigenvalues_.resize(k);
    eigenvectors_.resize(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        eigenvalues_(i) = values(order[static_cast<std::size_t>(i)]);
        eigenvectors_.col(i) = solver.eigenvectors().col(order[static_cast<std::size_t>(i)]);
    }

    const double residual =
        (eigenvectors_ * eigenvalues_.asDiagonal() * eigenvectors_.transpose() - matrix_).norm();
    if (!(residual <= 1e-8 * matrix_.norm())) {
        throw NumericalError("GramEstimate: eigendecomposition residual " + std::to_string(residual) +
                             " exceeds tolerance");
    }
}

GramAccumulator::GramAccumulator(int d, int k)
    : d_(d), k_(k), stacked_(static_cast<Eigen::Index>(d) * kBlock, k), sum_(Matrix::Zero(k, k)) {
    if (d < 1 || k < 1) throw DimensionError("GramAccumulator: empty observation shape");
}

void GramAccumulator::add(const Matrix& observation) {
    if (observation.rows() != d_ || observation.cols() != k_) {
        throw DimensionError("GramAccumulator: observation has wrong shape");
    }
    stacked_.middleRows(static_cast<Eigen::Index>(pending_) * d_, d_) = observation;
    ++pending_;
    ++count_;
    if (pending_ == kBlock) flush();
}

void GramAccumulator::flush() {
    if (pending_ == 0) return;
    sum_.selfadjointView<Eigen::Lower>().rankUpdate(
        stacked_.topRows(static_cast<Eigen::Index>(pending_) * d_).transpose());
    pending_ = 0;
}

Matrix GramAccumulator::mean() {
    if (count_ == 0) throw ArgumentError("GramAccumulator: no observations");
    flush();
    Matrix out = sum_.selfadjointView<Eigen::Lower>();
    out /= static_cast<double>(count_);
    return out;
}

GramEstimate gram_mean(const ObservationBatch& batch) {
    if (batch.observations.empty()) throw ArgumentError("gram_mean: empty batch");
    const auto& first = batch.observations.front();
    GramAccumulator acc(static_cast<int>(first.rows()), static_cast<int>(first.cols()));
    for (const auto& y : batch.observations) acc.add(y);
    return GramEstimate(acc.mean());
}

GramEstimate gram_mean_streamed(const Cloud& cloud, double sigma, std::int64_t n, const SeedSpec& seed) {
    if (n < 1) throw ArgumentError("gram_mean_streamed: number of observations must be >= 1");
    ObservationStream stream(cloud, sigma, seed);
    GramAccumulator acc(cloud.d(), cloud.k());
    Matrix y;
    for (std::int64_t i = 0; i < n; ++i) {
        stream.next(y);
        acc.add(y);
    }
    return GramEstimate(acc.mean());
}

Matrix debias_gram(const GramEstimate& m, double sigma, int d) {
    require_sigma(sigma, "debias_gram");
    require_rank_in_range(d, m.k(), "debias_gram");
    Matrix out = m.matrix();
    out.diagonal().array() -= static_cast<double>(d) * sigma * sigma;
    return out;
}

EstimateReport estimate_from_gram(const GramEstimate& m, int d, double sigma, bool sigma_estimated) {
    require_sigma(sigma, "estimate_from_gram");
    require_rank_in_range(d, m.k(), "estimate_from_gram");
    const double shift = static_cast<double>(d) * sigma * sigma;

    Matrix rows(d, m.k());
    std::vector<double> alphas(static_cast<std::size_t>(d));
    std::vector<double> top(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        const double lambda = m.eigenvalues()(i);
        const double alpha = std::sqrt(std::max(0.0, lambda - shift));
        alphas[static_cast<std::size_t>(i)] = alpha;
        top[static_cast<std::size_t>(i)] = lambda;
        rows.row(i) = alpha * m.eigenvectors().col(i).transpose();
    }
    const double gap = d < m.k() ? m.eigenvalues()(d - 1) - m.eigenvalues()(d) : m.eigenvalues()(d - 1);

    return EstimateReport{Cloud::unchecked(std::move(rows)), std::move(alphas), sigma, sigma_estimated, gap,
                          std::move(top)};
}

EstimateReport estimate_with_sigma(const ObservationBatch& batch, double sigma) {
    return estimate_from_gram(gram_mean(batch), batch.d, sigma, false);
}

double estimate_sigma(const GramEstimate& m, int d) {
    const int k = m.k();
    if (d < 1 || k <= d) {
        throw ArgumentError("estimate_sigma: need k > d >= 1, got d=" + std::to_string(d) + " k=" + std::to_string(k));
    }
    const double top = m.eigenvalues().head(d).sum();
    const double trailing = m.matrix().trace() - top;
    const double denom = static_cast<double>(d) * static_cast<double>(k - d);
    // Trailing eigenvalues of a PSD matrix are nonnegative; only rounding can make
    // their sum negative.
    const double slack = 1e-10 * (std::abs(m.matrix().trace()) + std::abs(top));
    if (trailing < -slack) {
        throw ArgumentError("estimate_sigma: Gram mean is not positive semidefinite");
    }
    return std::sqrt(std::max(0.0, trailing) / denom);
}

EstimateReport estimate_unknown_sigma(const ObservationBatch& batch) {
    const GramEstimate m = gram_mean(batch);
    return estimate_from_gram(m, batch.d, estimate_sigma(m, batch.d), true);
}

double estimate_sigma_centered(const ObservationBatch& batch) {
    if (batch.observations.empty()) throw ArgumentError("estimate_sigma_centered: empty batch");
    double sum_sq = 0.0;
    std::int64_t count = 0;
    for (const auto& y : batch.observations) {
        const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(y.cols()));
        const Vector column_sum = y.rowwise().sum() * inv_sqrt_k;
        sum_sq += column_sum.squaredNorm();
        count += column_sum.size();
    }
    return std::sqrt(sum_sq / static_cast<double>(count));
}

Matrix psd_rank_d_project(const Matrix& g, int d) {
    const GramEstimate eig(g);
    require_rank_in_range(d, eig.k(), "psd_rank_d_project");
    Matrix out = Matrix::Zero(eig.k(), eig.k());
    for (int i = 0; i < d; ++i) {
        const double lambda = std::max(0.0, eig.eigenvalues()(i));
        if (lambda > 0.0) out.noalias() += lambda * eig.eigenvectors().col(i) * eig.eigenvectors().col(i).transpose();
    }
    return 0.5 * (out + out.transpose());
}

Cloud factor_gram(const Matrix& g, int d) {
    const GramEstimate eig(g);
    require_rank_in_range(d, eig.k(), "factor_gram");
    const double smallest = eig.eigenvalues()(eig.k() - 1);
    if (smallest < -1e-6) {
        throw NotPsdError("factor_gram: eigenvalue " + std::to_string(smallest) + " below -1e-6");
    }
    Matrix rows(d, eig.k());
    for (int i = 0; i < d; ++i) {
        rows.row(i) = std::sqrt(std::max(0.0, eig.eigenvalues()(i))) * eig.eigenvectors().col(i).transpose();
    }
    return Cloud::unchecked(std::move(rows));
}

}  // namespace procrustes
