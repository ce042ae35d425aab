#pragma once

// Invariant-features estimator. The Gram mean of the observations converges to
// X^T X + d sigma^2 I; debiasing and a rank-d factorization recover [X].

#include <cstdint>
#include <vector>

#include "procrustes/model.hpp"

namespace procrustes {

/// Symmetric k x k matrix with its eigendecomposition, eigenvalues descending.
class GramEstimate {
public:
    /// Symmetrizes `matrix` as (A + A^T)/2 and decomposes it. Throws
    /// NumericalError if the eigenpairs fail to reconstruct the matrix to
    /// 1e-8 relative Frobenius error.
    explicit GramEstimate(const Matrix& matrix);

    int k() const noexcept { return static_cast<int>(matrix_.rows()); }
    const Matrix& matrix() const noexcept { return matrix_; }
    const Vector& eigenvalues() const noexcept { return eigenvalues_; }
    /// Column i pairs with eigenvalues()(i).
    const Matrix& eigenvectors() const noexcept { return eigenvectors_; }

private:
    Matrix matrix_;
    Vector eigenvalues_;
    Matrix eigenvectors_;
};

/// Running sum of observation Gram matrices.
///
/// Observations are stacked in fixed blocks of kBlock and added with one
/// symmetric rank update per block, so the summation order (and the rounding)
/// depends only on the observation sequence.
class GramAccumulator {
public:
    static constexpr int kBlock = 64;

    GramAccumulator(int d, int k);

    void add(const Matrix& observation);
    std::int64_t count() const noexcept { return count_; }
    /// (1/N) sum_i Y_i^T Y_i, exactly symmetric.
    Matrix mean();

private:
    void flush();

    int d_;
    int k_;
    std::int64_t count_ = 0;
    int pending_ = 0;
    Matrix stacked_;
    Matrix sum_;
};

struct EstimateReport {
    Cloud cloud_estimate;
    std::vector<double> alphas;
    double sigma_used = 0.0;
    bool sigma_estimated = false;
    /// lambda_d - lambda_{d+1} of the Gram mean; lambda_d itself when k == d.
    double eigengap = 0.0;
    std::vector<double> top_eigenvalues;

    /// The estimated class is uniquely defined only with a positive eigengap.
    bool is_unique() const noexcept { return eigengap > 0.0; }
};

GramEstimate gram_mean(const ObservationBatch& batch);

/// Gram mean of sample_observations(cloud, sigma, n, seed) computed without
/// materializing the batch; bit-identical to gram_mean of the materialized batch.
GramEstimate gram_mean_streamed(const Cloud& cloud, double sigma, std::int64_t n, const SeedSpec& seed);

/// M - d sigma^2 I.
Matrix debias_gram(const GramEstimate& m, double sigma, int d);

/// Rank-d scaled eigenvector cloud from a Gram mean: rows alpha_i v_i^T with
/// alpha_i = sqrt(max(0, lambda_i - d sigma^2)).
EstimateReport estimate_from_gram(const GramEstimate& m, int d, double sigma, bool sigma_estimated);

EstimateReport estimate_with_sigma(const ObservationBatch& batch, double sigma);

/// sigma_hat = sqrt((Tr M - lambda_1 - ... - lambda_d) / (d (k - d))).
double estimate_sigma(const GramEstimate& m, int d);

EstimateReport estimate_unknown_sigma(const ObservationBatch& batch);

/// Variance estimate from the dN entries of Y_i 1 / sqrt(k). Only unbiased for
/// centered clouds (X 1 = 0); otherwise biased upward by ||X 1||^2 / (d k).
double estimate_sigma_centered(const ObservationBatch& batch);

/// Keeps the top-d eigenpairs of a symmetric G with negative eigenvalues set to zero.
Matrix psd_rank_d_project(const Matrix& g, int d);

/// X_hat (d x k) with X_hat^T X_hat the best rank-d approximation of a PSD G.
/// Throws NotPsdError if G has an eigenvalue below -1e-6.
Cloud factor_gram(const Matrix& g, int d);

}  // namespace procrustes
