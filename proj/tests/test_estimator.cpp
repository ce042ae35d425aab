#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "procrustes/error.hpp"
#include "procrustes/estimator.hpp"
#include "procrustes/metric.hpp"

using namespace procrustes;

namespace {

Matrix diag(std::initializer_list<double> values) {
    Vector v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v(i++) = x;
    return v.asDiagonal();
}

Matrix random_psd_rank(int k, int rank, Engine& e) {
    const Matrix f = sample_gaussian(rank, k, e);
    return f.transpose() * f;
}

}  // namespace

TEST(GramEstimateType, SortedDescendingAndReconstructs) {
    Engine e = make_engine({1, 0});
    const Matrix a = sample_gaussian(6, 6, e);
    const GramEstimate m(a + a.transpose());
    for (int i = 1; i < 6; ++i) EXPECT_GE(m.eigenvalues()(i - 1), m.eigenvalues()(i));
    const Matrix rebuilt = m.eigenvectors() * m.eigenvalues().asDiagonal() * m.eigenvectors().transpose();
    EXPECT_LE((rebuilt - m.matrix()).norm(), 1e-10 * m.matrix().norm());
    EXPECT_LE((m.matrix() - m.matrix().transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GramEstimateType, SymmetrizesInput) {
    Matrix a(2, 2);
    a << 1, 2, 0, 1;
    const GramEstimate m(a);
    EXPECT_DOUBLE_EQ(m.matrix()(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(m.matrix()(1, 0), 1.0);
}

TEST(GramMean, NoiselessEqualsGram) {
    const Cloud c = sample_cloud(3, 10, {2, 0}, false);
    const GramEstimate m = gram_mean(sample_observations(c, 0.0, 40, {2, 1}));
    EXPECT_LE((m.matrix() - c.matrix().transpose() * c.matrix()).norm(), 1e-10);
    EXPECT_GE(m.eigenvalues().minCoeff(), -1e-10);
}

TEST(GramMean, ScalarObservation) {
    ObservationBatch b;
    b.d = 1;
    b.k = 1;
    b.n = 1;
    b.observations = {Matrix::Constant(1, 1, 3.0)};
    EXPECT_DOUBLE_EQ(gram_mean(b).matrix()(0, 0), 9.0);
}

TEST(GramMean, EmptyBatchThrows) {
    ObservationBatch b;
    b.d = 1;
    b.k = 1;
    EXPECT_THROW(gram_mean(b), ArgumentError);
}

TEST(GramMean, LawOfLargeNumbers) {
    const Cloud c = sample_cloud(3, 20, {3, 0}, false);
    const GramEstimate m = gram_mean_streamed(c, 1.0, 100'000, {3, 1});
    const Matrix expected = c.matrix().transpose() * c.matrix() + 3.0 * Matrix::Identity(20, 20);
    EXPECT_LE((m.matrix() - expected).norm(), 0.05 * expected.norm());
}

TEST(GramMean, StreamedIsBitIdenticalToMaterialized) {
    const Cloud c = sample_cloud(3, 12, {4, 0}, false);
    for (int n : {1, 63, 64, 65, 200}) {
        const GramEstimate a = gram_mean(sample_observations(c, 0.8, n, {4, 2}));
        const GramEstimate b = gram_mean_streamed(c, 0.8, n, {4, 2});
        EXPECT_TRUE(a.matrix() == b.matrix()) << n;
    }
}

TEST(GramMean, PositiveSemidefinite) {
    const Cloud c = sample_cloud(2, 9, {5, 0}, false);
    const GramEstimate m = gram_mean(sample_observations(c, 3.0, 3, {5, 1}));
    EXPECT_GE(m.eigenvalues().minCoeff(), -1e-10);
}

TEST(Debias, Examples) {
    const GramEstimate m(diag({3, 6, 2}));
    EXPECT_LE((debias_gram(m, 1.0, 2) - diag({1, 4, 0})).norm(), 1e-15);
    EXPECT_TRUE(debias_gram(m, 0.0, 2) == m.matrix());
    EXPECT_THROW(debias_gram(m, 1.0, 4), ArgumentError);
}

TEST(Debias, ShiftsEverySpectrumEntry) {
    Engine e = make_engine({6, 0});
    const GramEstimate m(random_psd_rank(7, 7, e));
    const GramEstimate shifted(debias_gram(m, 0.9, 3));
    for (int i = 0; i < 7; ++i) EXPECT_NEAR(shifted.eigenvalues()(i), m.eigenvalues()(i) - 3 * 0.81, 1e-12);
}

TEST(Algorithm1, NoiselessRecoversClass) {
    const Cloud c = sample_cloud(3, 15, {7, 0}, false);
    const EstimateReport r = estimate_with_sigma(sample_observations(c, 0.0, 10, {7, 1}), 0.0);
    EXPECT_LE(relative_error(c.matrix(), r.cloud_estimate.matrix()), 1e-7);
    EXPECT_FALSE(r.sigma_estimated);
    EXPECT_TRUE(r.is_unique());
}

TEST(Algorithm1, HandWorkedExample) {
    Matrix x(2, 3);
    x << 1, 0, 0, 0, 2, 0;
    // Gram mean X^T X + d sigma^2 I = diag(3, 6, 2): lambda = (6, 3, 2), alpha = (2, 1).
    const EstimateReport r = estimate_from_gram(GramEstimate(diag({3, 6, 2})), 2, 1.0, false);
    ASSERT_EQ(r.alphas.size(), 2u);
    EXPECT_NEAR(r.alphas[0], 2.0, 1e-12);
    EXPECT_NEAR(r.alphas[1], 1.0, 1e-12);
    const Matrix& xh = r.cloud_estimate.matrix();
    EXPECT_LE((xh.transpose() * xh - diag({1, 4, 0})).norm(), 1e-12);
    EXPECT_LE(procrustes_distance(x, xh), 1e-8);
    EXPECT_NEAR(r.eigengap, 1.0, 1e-12);
    EXPECT_NEAR(r.top_eigenvalues[0], 6.0, 1e-12);
}

TEST(Algorithm1, RowsAreScaledOrthonormalEigenvectors) {
    const Cloud c = sample_cloud(3, 12, {8, 0}, false);
    const EstimateReport r = estimate_with_sigma(sample_observations(c, 1.5, 20, {8, 1}), 1.5);
    const Matrix& xh = r.cloud_estimate.matrix();
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(xh.row(i).norm(), r.alphas[static_cast<std::size_t>(i)], 1e-10);
        for (int j = 0; j < i; ++j) EXPECT_NEAR(xh.row(i).dot(xh.row(j)), 0.0, 1e-8);
    }
}

TEST(Algorithm1, NegativeShiftedEigenvaluesClampToZero) {
    const EstimateReport r = estimate_from_gram(GramEstimate(diag({5, 1, 0.5})), 2, 1.0, false);
    EXPECT_NEAR(r.alphas[0], std::sqrt(3.0), 1e-12);
    EXPECT_EQ(r.alphas[1], 0.0);
}

TEST(Algorithm1, LargeSampleAccuracy) {
    // The estimator only sees the Gram mean, so draw it from its exact law.
    const Cloud c = sample_cloud(3, 100, {9, 0}, true);
    const GramEstimate m(sample_gram_mean_sufficient(c, 1.0, 1'000'000, {9, 1}));
    const EstimateReport r = estimate_from_gram(m, 3, 1.0, false);
    EXPECT_LE(relative_error(c.matrix(), r.cloud_estimate.matrix()), 0.15);
}

TEST(Algorithm1, DependsOnlyOnGramMean) {
    const Cloud c = sample_cloud(2, 6, {10, 0}, false);
    const ObservationBatch b = sample_observations(c, 0.5, 30, {10, 1});
    ObservationBatch rotated = b;
    Engine e = make_engine({10, 2});
    for (Matrix& y : rotated.observations) y = sample_haar_orthogonal(2, e) * y;
    const EstimateReport r1 = estimate_with_sigma(b, 0.5);
    const EstimateReport r2 = estimate_with_sigma(rotated, 0.5);
    EXPECT_LE(procrustes_distance(r1.cloud_estimate.matrix(), r2.cloud_estimate.matrix()), 1e-8);
}

TEST(Algorithm2, TraceFormExample) {
    EXPECT_NEAR(estimate_sigma(GramEstimate(diag({10, 5, 2, 2, 2})), 2), 1.0, 1e-12);
}

TEST(Algorithm2, NoiselessGivesZero) {
    Engine e = make_engine({11, 0});
    const GramEstimate m(random_psd_rank(8, 3, e));
    EXPECT_LE(estimate_sigma(m, 3), 1e-8);
}

TEST(Algorithm2, RequiresKGreaterThanD) {
    EXPECT_THROW(estimate_sigma(GramEstimate(diag({1, 2})), 2), ArgumentError);
}

TEST(Algorithm2, AccurateAtModerateSampleSize) {
    const Cloud c = sample_cloud(3, 100, {12, 0}, false);
    const GramEstimate m = gram_mean_streamed(c, 2.0, 10'000, {12, 1});
    const double s = estimate_sigma(m, 3);
    EXPECT_LE(std::abs(s * s - 4.0) / 4.0, 0.02);
}

TEST(Algorithm2, NoiselessBatchRecoversClass) {
    const Cloud c = sample_cloud(2, 7, {13, 0}, false);
    const EstimateReport r = estimate_unknown_sigma(sample_observations(c, 0.0, 5, {13, 1}));
    EXPECT_LE(r.sigma_used, 1e-7);
    EXPECT_TRUE(r.sigma_estimated);
    EXPECT_LE(relative_error(c.matrix(), r.cloud_estimate.matrix()), 1e-7);
}

TEST(Algorithm2, KnownAndEstimatedSigmaAgree) {
    const Cloud c = sample_cloud(3, 100, {14, 0}, false);
    const GramEstimate m = gram_mean_streamed(c, 1.0, 100'000, {14, 1});
    const double s = estimate_sigma(m, 3);
    const EstimateReport known = estimate_from_gram(m, 3, 1.0, false);
    const EstimateReport unknown = estimate_from_gram(m, 3, s, true);
    // Only alpha changes: |alpha_i(1) - alpha_i(s)| <= d |1 - s^2| / (2 alpha_i) to first order.
    double budget = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double a = known.alphas[static_cast<std::size_t>(i)];
        budget += std::pow(3.0 * std::abs(1.0 - s * s) / (2.0 * a), 2);
    }
    EXPECT_LE(procrustes_distance(known.cloud_estimate.matrix(), unknown.cloud_estimate.matrix()),
              3.0 * std::sqrt(budget));
}

TEST(CenteredSigma, NoiselessCenteredIsZero) {
    Engine e = make_engine({15, 0});
    Matrix x = sample_gaussian(3, 10, e);
    x.colwise() -= x.rowwise().mean();
    const Cloud c = Cloud::checked(x);
    EXPECT_LE(estimate_sigma_centered(sample_observations(c, 0.0, 20, {15, 1})), 1e-10);
}

TEST(CenteredSigma, CenteredUnitNoise) {
    Engine e = make_engine({16, 0});
    Matrix x = sample_gaussian(3, 10, e);
    x.colwise() -= x.rowwise().mean();
    const double s = estimate_sigma_centered(sample_observations(Cloud::checked(x), 1.0, 10'000, {16, 1}));
    EXPECT_NEAR(s * s, 1.0, 0.05);
}

TEST(CenteredSigma, NonCenteredBias) {
    // E[sigma_hat^2] = sigma^2 + ||X 1||^2 / (d k): Q_i X 1 / sqrt k has squared
    // norm ||X 1||^2 / k spread over d coordinates.
    Engine e = make_engine({17, 0});
    const Matrix x = sample_gaussian(2, 6, e) + Matrix::Constant(2, 6, 1.0);
    const double bias = (x * Vector::Ones(6)).squaredNorm() / (2.0 * 6.0);
    const double s = estimate_sigma_centered(sample_observations(Cloud::checked(x), 1.0, 50'000, {17, 1}));
    EXPECT_NEAR(s * s, 1.0 + bias, 0.05 * (1.0 + bias));
}

TEST(Projection, Examples) {
    EXPECT_LE((psd_rank_d_project(diag({5, 1, -2}), 2) - diag({5, 1, 0})).norm(), 1e-12);
    EXPECT_LE((psd_rank_d_project(diag({5, 1, -2}), 1) - diag({5, 0, 0})).norm(), 1e-12);
    Engine e = make_engine({18, 0});
    const Matrix g = random_psd_rank(6, 2, e);
    EXPECT_LE((psd_rank_d_project(g, 2) - g).norm(), 1e-8);
    EXPECT_THROW(psd_rank_d_project(g, 7), ArgumentError);
}

TEST(Projection, FrobeniusOptimalAmongPsdRankD) {
    Engine e = make_engine({19, 0});
    for (int t = 0; t < 100; ++t) {
        const Matrix a = sample_gaussian(5, 5, e);
        const Matrix g = a + a.transpose();
        const Matrix p = psd_rank_d_project(g, 2);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(p);
        EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
        for (int c = 0; c < 100; ++c) {
            const Matrix h = random_psd_rank(5, 2, e);
            ASSERT_LE((g - p).norm(), (g - h).norm() + 1e-8);
        }
    }
}

TEST(Factor, Examples) {
    const Matrix g = diag({4, 1, 0});
    const Cloud x = factor_gram(g, 2);
    EXPECT_LE((x.matrix().transpose() * x.matrix() - g).norm(), 1e-12);
    EXPECT_NEAR(x.matrix().row(0).norm(), 2.0, 1e-12);
    EXPECT_NEAR(x.matrix().row(1).norm(), 1.0, 1e-12);

    const Cloud zero = factor_gram(Matrix::Zero(4, 4), 2);
    EXPECT_TRUE(zero.matrix().isZero());
    EXPECT_FALSE(zero.is_full_rank());

    EXPECT_THROW(factor_gram(diag({1, -1e-3}), 1), NotPsdError);
}

TEST(Factor, RoundTrip) {
    Engine e = make_engine({20, 0});
    for (int t = 0; t < 20; ++t) {
        const Matrix x = sample_gaussian(3, 9, e);
        const Matrix g = x.transpose() * x;
        const Cloud f = factor_gram(g, 3);
        EXPECT_LE((f.matrix().transpose() * f.matrix() - g).norm(), 1e-8 * g.norm());
        EXPECT_LE(procrustes_distance(f.matrix(), x), 1e-7 * x.norm());
    }
}

TEST(Unbiasedness, DebiasedGramMean) {
    constexpr int kBatches = 10'000;
    const Cloud c = sample_cloud(2, 5, {21, 0}, false);
    const Matrix g = c.matrix().transpose() * c.matrix();
    Matrix sum = Matrix::Zero(5, 5);
    Matrix sum_sq = Matrix::Zero(5, 5);
    for (int b = 0; b < kBatches; ++b) {
        const Matrix diff = debias_gram(gram_mean_streamed(c, 1.0, 10, {21, static_cast<std::uint64_t>(b + 1)}), 1.0, 2) - g;
        sum += diff;
        sum_sq += diff.cwiseAbs2();
    }
    const Matrix mean = sum / kBatches;
    const Matrix se = ((sum_sq / kBatches - mean.cwiseAbs2()) / kBatches).cwiseSqrt();
    for (Eigen::Index i = 0; i < mean.size(); ++i) EXPECT_LE(std::abs(mean(i)), 5 * se(i));
}

TEST(Eigengap, SquareCaseReportsSmallestEigenvalue) {
    const EstimateReport r = estimate_from_gram(GramEstimate(diag({4, 2})), 2, 0.0, false);
    EXPECT_NEAR(r.eigengap, 2.0, 1e-12);
}

TEST(Eigengap, TiesAreReportedNotRejected) {
    const EstimateReport r = estimate_from_gram(GramEstimate(diag({3, 3, 3})), 2, 0.0, false);
    EXPECT_NEAR(r.eigengap, 0.0, 1e-12);
    EXPECT_FALSE(r.is_unique());
}
