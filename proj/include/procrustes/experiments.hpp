#pragma once

// Seeded Monte Carlo campaigns. Every trial draws its randomness from
// derive_seed(master, cell, repetition) and writes into its own slot; results
// are reduced in index order, so outputs do not depend on the thread count.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "procrustes/model.hpp"

namespace procrustes {

/// Cell index reserved for the campaign's fixed ground-truth cloud.
inline constexpr std::uint64_t kCloudCell = ~std::uint64_t{0};

/// n values log-spaced between lo and hi, rounded to integers.
std::vector<std::int64_t> log_spaced_counts(double lo, double hi, int count);
std::vector<double> log_spaced(double lo, double hi, int count);

// ---------------------------------------------------------------------------
// Phase-transition sweep over a (sigma, N) grid.

struct SweepConfig {
    int d = 3;
    int k = 100;
    std::vector<double> sigma_grid = log_spaced(1e-2, 1e2, 16);
    std::vector<std::int64_t> n_grid = log_spaced_counts(10, 1e5, 16);
    int repetitions = 10;
    std::uint64_t master_seed = 0;
    bool sigma_known = true;
    double error_cap = 1.0;
    /// Draw a fresh cloud for every trial instead of one cloud per sweep.
    bool resample_cloud = false;
    bool unit_frobenius = true;
};

/// Throws ArgumentError on empty or non-increasing grids, repetitions < 1, k < d.
void validate(const SweepConfig& config);

struct GridRow {
    double sigma = 0.0;
    std::int64_t n = 0;
    double mean_rel_error = 0.0;
    double std_rel_error = 0.0;
    int repetitions = 0;
    /// Set when a trial of the cell raised; the numeric fields are then NaN.
    std::optional<std::string> error;
};

struct GridResult {
    SweepConfig config;
    std::vector<GridRow> rows;  ///< sigma-major, N-minor

    const GridRow& at(std::size_t sigma_index, std::size_t n_index) const {
        return rows[sigma_index * config.n_grid.size() + n_index];
    }
};

GridResult run_phase_transition(const SweepConfig& config, int threads = 1);

/// Header `sigma,n,mean_rel_error,std_rel_error,repetitions`.
std::string grid_csv(const GridResult& result);

/// Adjacent (sigma_i, sigma_{i+1}) pairs within each N row whose mean error drops
/// by more than `z` combined standard errors.
struct MonotonicityCheck {
    int pairs = 0;
    int violations = 0;
};
MonotonicityCheck check_sigma_monotone(const GridResult& result, double z = 3.0);

/// Groups of cells with sigma >= sigma_min lying on one N ~ sigma^4 line (same
/// log N - 4 log sigma up to half a grid step). Reports the largest relative
/// spread (max - min) / max over groups with at least two cells.
struct ContourCheck {
    int contours = 0;
    double max_relative_spread = 0.0;
};
ContourCheck check_quartic_contours(const GridResult& result, double sigma_min = 4.0);

// ---------------------------------------------------------------------------
// Accuracy of the noise-level estimate.

struct SigmaBenchConfig {
    int d = 3;
    int k = 100;
    double sigma = 1.0;
    std::vector<std::int64_t> n_grid = {100, 1000, 10000};
    int repetitions = 100;
    std::uint64_t master_seed = 0;
    bool unit_frobenius = false;
};

void validate(const SigmaBenchConfig& config);

struct SigmaBenchRow {
    std::int64_t n = 0;
    double mean_rel_err_sigma2 = 0.0;
    double std_rel_err_sigma2 = 0.0;
    double median_rel_err_sigma2 = 0.0;
    int repetitions = 0;
};

std::vector<SigmaBenchRow> run_sigma_benchmark(const SigmaBenchConfig& config, int threads = 1);

/// Header `n,mean_rel_err_sigma2,std_rel_err_sigma2,repetitions`.
std::string sigma_bench_csv(const std::vector<SigmaBenchRow>& rows);

// ---------------------------------------------------------------------------
// Gram MSE and estimator MSE against the closed forms.

enum class GramSampling {
    direct,      ///< generate every observation
    sufficient,  ///< draw the Gram mean from its exact law (sample_gram_mean_sufficient)
};

struct MseConfig {
    int d = 2;
    int k = 10;
    std::vector<double> sigma_list = {2.0};
    std::vector<std::int64_t> n_list = {100};
    int trials = 2000;
    std::uint64_t master_seed = 0;
    bool unit_frobenius = true;
    GramSampling sampling = GramSampling::direct;
    /// Sub-grids for the slope fits: sigma <= low_noise_max and sigma >= high_noise_min.
    double low_noise_max = 0.1;
    double high_noise_min = 2.0;
};

void validate(const MseConfig& config);

struct MseRow {
    double sigma = 0.0;
    std::int64_t n = 0;
    double empirical_gram_mse = 0.0;
    double formula_gram_mse = 0.0;
    double exact_gram_mse = 0.0;
    double empirical_rho2 = 0.0;
    double mc_stderr = 0.0;  ///< standard error of empirical_gram_mse
    double rho2_stderr = 0.0;
    int trials = 0;
};

struct SlopeFit {
    std::int64_t n = 0;
    std::string regime;  ///< "low_noise" or "high_noise"
    std::vector<double> sigmas;
    double slope = 0.0;
};

struct MseResult {
    MseConfig config;
    double frob2_x = 0.0;
    std::vector<MseRow> rows;  ///< N-major, sigma-minor
    std::vector<SlopeFit> slopes;
};

MseResult run_mse_validation(const MseConfig& config, int threads = 1);

/// Header `sigma,n,empirical_gram_mse,formula_gram_mse,empirical_rho2,mc_stderr`.
std::string mse_csv(const MseResult& result);

/// Least-squares slope of log(y) against log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------
// Audits of the deterministic and probabilistic bounds.

struct AuditRecord {
    std::string audit_name;
    std::int64_t trials = 0;
    std::int64_t violations = 0;
    /// Largest (observed - bound) over the trials; <= tolerance means no violation.
    double max_slack = 0.0;
    /// Slack tolerance for deterministic audits, allowed violation rate otherwise.
    double tolerance = 0.0;
    bool pass = false;
};

struct AuditOptions {
    std::int64_t trials = 1000;
    std::int64_t concentration_trials = 2000;
    std::uint64_t master_seed = 0;
    /// Halves every bound before comparison so the deterministic audits fail.
    bool inject_fault = false;
};

std::vector<AuditRecord> run_stability_audit(const AuditOptions& options, int threads = 1);

/// One JSON object per line.
std::string audit_jsonl(const std::vector<AuditRecord>& records);

}  // namespace procrustes
