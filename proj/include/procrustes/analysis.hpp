#pragma once

// Closed-form stability and statistical bounds for the invariant-features
// estimator, plus numerical oracles (operator assembly, Monte Carlo) for them.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "procrustes/model.hpp"

namespace procrustes {

/// Singular values of L_X restricted to the horizontal space H_X, ascending.
struct OperatorSpectrum {
    std::vector<double> analytic;
    std::vector<double> numeric;
    double smallest = 0.0;
};

/// Value of a closed-form bound. `value` is empty when the bound's hypotheses
/// fail; bounds are never extrapolated outside them.
struct BoundReport {
    std::string bound_name;
    std::map<std::string, double> inputs;
    std::optional<double> value;

    bool applicable() const noexcept { return value.has_value(); }
};

/// L_X(Xdot) = X^T Xdot + Xdot^T X, the differential of X -> X^T X.
Matrix lx_apply(const Matrix& x, const Matrix& x_dot);

/// Orthogonal projection of Xdot onto H_X = {Xdot : Xdot X^T = X Xdot^T}.
///
/// Solves Omega S + S Omega = Xdot X^T - X Xdot^T for skew Omega, S = X X^T,
/// entrywise in the eigenbasis of S, and returns Xdot - Omega X.
Matrix horizontal_project(const Matrix& x, const Matrix& x_dot);

/// dim H_X = dk - d(d-1)/2.
int horizontal_dimension(int d, int k) noexcept;

/// Analytic singular values of L_X on H_X from the singular values s of X:
/// 2 s_i; sqrt(2 (s_i^2 + s_j^2)) for i < j; sqrt(2) s_i repeated k - d times.
std::vector<double> lx_spectrum_analytic(const Vector& singular_values, int k);

/// Matrix of L_X on the orthonormal basis of H_X built in the SVD frame of X;
/// columns are vec(L_X(basis element)), k^2 rows.
Matrix lx_operator_matrix(const Matrix& x);

OperatorSpectrum lx_spectrum(const Cloud& x);

/// rho <= (s_d / sqrt 2) (1 - sqrt(1 - 2 gap / s_d^2)), for gap <= s_d^2 / 2.
BoundReport gram_inversion_bound(double sigma_d, double gram_gap);

/// Lipschitz constant of Gram inversion, 1 / sqrt(2 (sqrt 2 - 1)).
double tu_lipschitz_constant() noexcept;

/// rho <= L gap / s_d.
BoundReport tu_lipschitz_bound(double sigma_d, double gram_gap);

/// Largest gap / sigma_d^2 for which gram_inversion_bound <= tu_lipschitz_bound:
/// 2 (c - 1) / c^2 with c = sqrt(sqrt 2 + 1), about 0.4588. Beyond it, up to the
/// 1/2 applicability limit, the Lipschitz bound is the smaller one.
double bound_ordering_limit() noexcept;

/// ||X2^T X2 - X1^T X1|| <= (9/4) ||X1||_op rho, for rho <= ||X1||_op / 4.
BoundReport gram_diff_upper_bound(double opnorm_x1, double rho);

/// High-probability bound on ||G_tilde_N - G||_F after the rank-d PSD projection,
/// holding with probability at least 1 - delta.
BoundReport concentration_bound(int d, int k, std::int64_t n, double sigma, double opnorm_x, double delta);

/// ((k + 1) sigma^2 / N) (k sigma^2 d + ||X||^2), the closed-form Gram MSE used by the harness.
double expected_gram_mse(int d, int k, std::int64_t n, double sigma, double frob2_x);

/// Exact E ||G_hat_N - G||^2 = ((k + 1) sigma^2 / N) (k sigma^2 d + 2 ||X||^2),
/// i.e. the trace of the Gram-mean covariance below. Exceeds expected_gram_mse
/// by (k + 1) sigma^2 ||X||^2 / N.
double exact_gram_mse(int d, int k, std::int64_t n, double sigma, double frob2_x);

/// Cov(M_st, M_uv) of the Gram mean, with G = X^T X:
/// (1/N)[sigma^2 (d_tv G_su + d_sv G_tu + d_tu G_sv + d_su G_tv) + sigma^4 d (d_su d_tv + d_sv d_tu)].
double gram_mean_covariance(const Matrix& g, double sigma, std::int64_t n, int d, int s, int t, int u, int v);

/// sigma^2 d k / N: MSE of the estimator that knows the rotations.
double oracle_mle_mse(int d, int k, std::int64_t n, double sigma);

/// Standard normal CDF via erfc.
double standard_normal_cdf(double x);

/// Error probability Phi(-||X|| / sigma) of the likelihood-ratio test between
/// the hypotheses Q X and -Q X.
double sign_test_error(double norm_x, double sigma);

/// Error rate of the likelihood-ratio test sign(<Y, Q X>) for s in {+1, -1}
/// from Y = s Q X + sigma E, with s uniform and Q Haar, over `trials` draws.
double sign_test_monte_carlo(const Matrix& x, double sigma, std::int64_t trials, const SeedSpec& seed);

/// Mean of ||X - (1/N) sum_i Q_i^T Y_i||^2 over `trials` batches, the estimator
/// that is told the true rotations.
double oracle_mle_monte_carlo(const Cloud& cloud, double sigma, int n, int trials, const SeedSpec& seed);

/// 12 (2d)^l rho^2.
double delta_l_bound(int d, int l, double rho);

struct DeltaEstimate {
    double value = 0.0;           ///< ||mean_Q [vec(Q X1)^{(x)l} - vec(Q X2)^{(x)l}]||^2
    double standard_error2 = 0.0; ///< sum of per-entry variances of the mean
};

inline constexpr std::int64_t kDeltaTensorGuard = 1'000'000;

/// Monte Carlo estimate of ||Delta_l||^2 over Haar Q. X2 is first aligned to X1.
DeltaEstimate delta_l_monte_carlo(const Matrix& x1, const Matrix& x2, int l, std::int64_t samples,
                                  const SeedSpec& seed);

}  // namespace procrustes
