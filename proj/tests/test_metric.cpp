#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "procrustes/error.hpp"
#include "procrustes/metric.hpp"

using namespace procrustes;

namespace {

// Brute force over O(2): rotations by theta, with and without a reflection.
struct BruteForce {
    double distance;
    Matrix rotation;
};

BruteForce brute_force_2d(const Matrix& x1, const Matrix& x2) {
    BruteForce best{std::numeric_limits<double>::infinity(), Matrix()};
    constexpr int kSteps = 200'000;
    for (int reflect = 0; reflect < 2; ++reflect) {
        for (int i = 0; i < kSteps; ++i) {
            const double theta = 2 * std::numbers::pi * i / kSteps;
            Matrix q(2, 2);
            q << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
            if (reflect) q.col(1) *= -1;
            const double dist = (x1 - q * x2).norm();
            if (dist < best.distance) best = {dist, q};
        }
    }
    return best;
}

Matrix gaussian(int d, int k, Engine& e) { return sample_gaussian(d, k, e); }

}  // namespace

TEST(Alignment, ScaledIdentityBruteForce) {
    const Matrix x1 = Matrix::Identity(2, 2);
    const Matrix x2 = 2 * Matrix::Identity(2, 2);
    const BruteForce oracle = brute_force_2d(x1, x2);
    const Alignment a = optimal_rotation(x1, x2);
    EXPECT_NEAR(oracle.distance, std::sqrt(2.0), 1e-9);
    EXPECT_NEAR(a.distance, oracle.distance, 1e-9);
    EXPECT_LE((a.rotation - Matrix::Identity(2, 2)).norm(), 1e-12);
    EXPECT_NEAR(procrustes_distance(x1, x2), std::sqrt(2.0), 1e-12);
}

TEST(Alignment, RandomPairsAgreeWithBruteForce) {
    Engine e = make_engine({1, 0});
    for (int t = 0; t < 5; ++t) {
        const Matrix x1 = gaussian(2, 4, e);
        const Matrix x2 = gaussian(2, 4, e);
        const BruteForce oracle = brute_force_2d(x1, x2);
        EXPECT_NEAR(procrustes_distance(x1, x2), oracle.distance, 1e-6);
        EXPECT_LE(procrustes_distance(x1, x2), oracle.distance + 1e-12);
    }
}

TEST(Alignment, SymmetricPsdCrossGramGivesIdentity) {
    Engine e = make_engine({2, 0});
    const Matrix x1 = gaussian(3, 6, e);
    // A is SPD and commutes with X1 X1^T, so X1 X2^T = (X1 X1^T) A is symmetric PSD.
    Eigen::SelfAdjointEigenSolver<Matrix> eig(x1 * x1.transpose());
    const Matrix a = eig.eigenvectors() * Vector::LinSpaced(3, 1.0, 2.0).asDiagonal() * eig.eigenvectors().transpose();
    const Matrix x2 = a * x1;
    const Alignment al = optimal_rotation(x1, x2);
    EXPECT_LE((al.rotation - Matrix::Identity(3, 3)).norm(), 1e-8);
}

TEST(Alignment, OrthogonalAndConsistent) {
    Engine e = make_engine({3, 0});
    for (int t = 0; t < 50; ++t) {
        const Matrix x1 = gaussian(3, 5, e);
        const Matrix x2 = gaussian(3, 5, e);
        const Alignment a = optimal_rotation(x1, x2);
        EXPECT_LE((a.rotation.transpose() * a.rotation - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_NEAR(a.distance, (x1 - a.rotation * x2).norm(), 1e-12);
        const double formula = procrustes_distance(x1, x2);
        EXPECT_NEAR(formula * formula, a.distance * a.distance, 1e-8 * (1 + a.distance * a.distance));
        // No random orthogonal matrix does better.
        for (int r = 0; r < 20; ++r) {
            EXPECT_LE(a.distance, (x1 - sample_haar_orthogonal(3, e) * x2).norm() + 1e-12);
        }
    }
}

TEST(Distance, SameClassIsZero) {
    Engine e = make_engine({4, 0});
    for (int t = 0; t < 20; ++t) {
        const Matrix x = gaussian(3, 8, e);
        EXPECT_LE(procrustes_distance(x, sample_haar_orthogonal(3, e) * x), 1e-10 * (1 + x.norm()));
    }
    Matrix a(1, 2);
    a << 3, 4;
    EXPECT_NEAR(procrustes_distance(a, -a), 0.0, 1e-12);
}

TEST(Distance, MetricProperties) {
    Engine e = make_engine({5, 0});
    for (int t = 0; t < 100; ++t) {
        const Matrix x1 = gaussian(3, 6, e);
        const Matrix x2 = gaussian(3, 6, e);
        const Matrix x3 = gaussian(3, 6, e);
        EXPECT_NEAR(procrustes_distance(x1, x2), procrustes_distance(x2, x1), 1e-10);
        EXPECT_LE(procrustes_distance(x1, x3), procrustes_distance(x1, x2) + procrustes_distance(x2, x3) + 1e-8);
        const Matrix q1 = sample_haar_orthogonal(3, e);
        const Matrix q2 = sample_haar_orthogonal(3, e);
        EXPECT_NEAR(procrustes_distance(q1 * x1, q2 * x2), procrustes_distance(x1, x2), 1e-9);
    }
}

TEST(Distance, ZeroExactlyWhenGramsAgree) {
    Engine e = make_engine({6, 0});
    for (int t = 0; t < 50; ++t) {
        const Matrix x1 = gaussian(2, 5, e);
        const bool same = t % 2 == 0;
        const Matrix x2 = same ? Matrix(sample_haar_orthogonal(2, e) * x1) : gaussian(2, 5, e);
        const bool grams_agree = (x1.transpose() * x1 - x2.transpose() * x2).norm() <= 1e-7;
        const bool rho_zero = procrustes_distance(x1, x2) <= 1e-8 * 10;
        EXPECT_EQ(grams_agree, same);
        EXPECT_EQ(rho_zero, same);
    }
}

TEST(Distance, ShapeMismatchThrows) {
    EXPECT_THROW(procrustes_distance(Matrix::Zero(2, 3), Matrix::Zero(2, 4)), DimensionError);
    EXPECT_THROW(optimal_rotation(Matrix::Zero(2, 3), Matrix::Zero(3, 3)), DimensionError);
}

TEST(RelativeError, Examples) {
    Engine e = make_engine({7, 0});
    const Matrix x = gaussian(3, 4, e);
    EXPECT_LE(relative_error(x, sample_haar_orthogonal(3, e) * x), 1e-10);
    const Matrix unit = x / x.norm();
    EXPECT_NEAR(relative_error(unit, Matrix::Zero(3, 4)), 1.0, 1e-12);
    // rho(I, 2I) = sqrt 2 (brute force above) and ||I|| = sqrt 2.
    EXPECT_NEAR(relative_error(Matrix::Identity(2, 2), 2 * Matrix::Identity(2, 2)), 1.0, 1e-12);
    EXPECT_THROW(relative_error(Matrix::Zero(2, 2), Matrix::Identity(2, 2)), ArgumentError);
}

TEST(Canonical, UpperTrapezoidalFixedPoint) {
    Matrix r(2, 3);
    r << 2, 1, 3, 0, 1.5, -1;
    EXPECT_LE((canonical_representative(r) - r).norm(), 1e-12);
}

TEST(Canonical, PermutationBecomesIdentity) {
    Matrix x(2, 2);
    x << 0, 1, 1, 0;
    const Matrix r = canonical_representative(x);
    EXPECT_LE((r - Matrix::Identity(2, 2)).norm(), 1e-12);
    EXPECT_LE((r.transpose() * r - x.transpose() * x).norm(), 1e-12);
}

TEST(Canonical, SameClassSameRepresentative) {
    Engine e = make_engine({8, 0});
    for (int t = 0; t < 20; ++t) {
        const Matrix x = gaussian(3, 7, e);
        const Matrix r1 = canonical_representative(x);
        const Matrix r2 = canonical_representative(sample_haar_orthogonal(3, e) * x);
        EXPECT_LE((r1 - r2).norm(), 1e-8);
        EXPECT_LE((r1.transpose() * r1 - x.transpose() * x).norm(), 1e-8);
        EXPECT_LE((canonical_representative(r1) - r1).norm(), 1e-10);
        for (int i = 0; i < 3; ++i) {
            EXPECT_GE(r1(i, i), 0.0);
            for (int j = 0; j < i; ++j) EXPECT_EQ(r1(i, j), 0.0);
        }
    }
}

TEST(Canonical, SingularLeadingBlockThrows) {
    Matrix x(2, 3);
    x << 1, 2, 0, 2, 4, 1;
    EXPECT_THROW(canonical_representative(x), DegeneracyError);
}
