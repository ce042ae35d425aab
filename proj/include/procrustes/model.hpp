#pragma once

// Observation model: clouds X (d x k), Haar rotations, and noisy rotated copies
//   Y_i = Q_i X + sigma E_i,  Q_i ~ Haar(O(d)),  E_i iid standard normal.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "procrustes/seed.hpp"

namespace procrustes {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Relative threshold on sigma_d / sigma_1 below which a cloud counts as rank deficient.
inline constexpr double kRankTolerance = 1e-10;

/// A d x k point cloud, k >= d >= 1. The estimand, defined up to left orthogonal action.
///
/// `Cloud::checked` enforces rank d; `Cloud::unchecked` admits rank-deficient
/// matrices (an estimator can legitimately return a zero cloud) and leaves
/// `is_full_rank()` to report it.
class Cloud {
public:
    static Cloud checked(Matrix entries, double rank_tolerance = kRankTolerance);
    static Cloud unchecked(Matrix entries);

    int d() const noexcept { return static_cast<int>(entries_.rows()); }
    int k() const noexcept { return static_cast<int>(entries_.cols()); }
    const Matrix& matrix() const noexcept { return entries_; }

    /// Singular values, descending.
    const Vector& singular_values() const noexcept { return singular_values_; }
    double sigma_min() const noexcept { return singular_values_(d() - 1); }
    double operator_norm() const noexcept { return singular_values_(0); }
    double frobenius_norm() const noexcept { return entries_.norm(); }

    bool is_full_rank(double rank_tolerance = kRankTolerance) const noexcept;

private:
    explicit Cloud(Matrix entries);

    Matrix entries_;
    Vector singular_values_;
};

/// N noisy rotated copies of one cloud plus the metadata that produced them.
struct ObservationBatch {
    std::vector<Matrix> observations;
    double sigma_true = 0.0;
    int d = 0;
    int k = 0;
    int n = 0;
    SeedSpec seed;
};

/// Haar-distributed d x d orthogonal matrix drawn from `engine`.
Matrix sample_haar_orthogonal(int d, Engine& engine);
Matrix sample_haar_orthogonal(int d, const SeedSpec& seed);

/// d x k matrix of iid standard normal entries.
Matrix sample_gaussian(int rows, int cols, Engine& engine);

/// Gaussian cloud, optionally scaled to unit Frobenius norm. Rank-deficient draws
/// are redrawn from the same stream at most kCloudRetries times.
inline constexpr int kCloudRetries = 8;
Cloud sample_cloud(int d, int k, const SeedSpec& seed, bool unit_frobenius);

/// Sequential generator of the observations of one batch. Every consumer of a
/// batch (materialized or streamed) draws through this class, so both paths see
/// the same random numbers in the same order.
class ObservationStream {
public:
    ObservationStream(const Cloud& cloud, double sigma, const SeedSpec& seed);

    /// Writes the next observation Y = Q X + sigma E into `out` (resized to d x k).
    void next(Matrix& out);
    /// Same, also reporting the rotation used.
    void next(Matrix& out, Matrix& rotation);

private:
    Matrix x_;
    double sigma_;
    Engine engine_;
    Matrix rotation_;
};

ObservationBatch sample_observations(const Cloud& cloud, double sigma, int n, const SeedSpec& seed);

/// Draws a k x k matrix with exactly the law of the Gram mean of
/// sample_observations(cloud, sigma, n, ·), without forming the n observations.
///
/// Uses (1/n) sum Y_i^T Y_i  =d  (X + sigma Hbar)^T (X + sigma Hbar) + (sigma^2 / n) S,
/// with Hbar iid N(0, 1/n) entries and S ~ Wishart_k(d(n-1), I) independent of Hbar.
/// This rests on Q_i^T E_i having the law of E_i. Cost is O(dk + k^3), independent of n.
Matrix sample_gram_mean_sufficient(const Cloud& cloud, double sigma, std::int64_t n, const SeedSpec& seed);

}  // namespace procrustes
