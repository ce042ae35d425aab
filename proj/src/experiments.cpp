#include "procrustes/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>

#include "json.hpp"
#include "parallel.hpp"
#include "procrustes/analysis.hpp"
#include "procrustes/error.hpp"
#include "procrustes/estimator.hpp"
#include "procrustes/io.hpp"
#include "procrustes/metric.hpp"
#include "procrustes/seed.hpp"

namespace procrustes {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double median_of(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

template <class T>
void require_increasing(const std::vector<T>& grid, const char* name) {
    if (grid.empty()) throw ArgumentError(std::string(name) + " must be nonempty");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i - 1] < grid[i])) throw ArgumentError(std::string(name) + " must be strictly increasing");
    }
}

void require_dims(int d, int k) {
    if (d < 1) throw ArgumentError("d must be >= 1");
    if (k < d) throw ArgumentError("k must be >= d");
}

Cloud campaign_cloud(int d, int k, std::uint64_t master, bool unit_frobenius) {
    return sample_cloud(d, k, derive_seed(master, kCloudCell, 0), unit_frobenius);
}

}  // namespace

std::vector<double> log_spaced(double lo, double hi, int count) {
    if (count < 1) throw ArgumentError("grid count must be >= 1");
    if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi)) throw ArgumentError("log grid needs 0 < min <= max");
    std::vector<double> out(static_cast<std::size_t>(count));
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (int i = 0; i < count; ++i) {
        out[static_cast<std::size_t>(i)] = count == 1 ? lo : std::exp(a + (b - a) * i / (count - 1));
    }
    out.front() = lo;
    if (count > 1) out.back() = hi;
    return out;
}

std::vector<std::int64_t> log_spaced_counts(double lo, double hi, int count) {
    std::vector<std::int64_t> out;
    for (double v : log_spaced(lo, hi, count)) out.push_back(std::max<std::int64_t>(1, std::llround(v)));
    return out;
}

// ---------------------------------------------------------------------------
// Phase-transition sweep

void validate(const SweepConfig& config) {
    require_dims(config.d, config.k);
    require_increasing(config.sigma_grid, "sigma_grid");
    require_increasing(config.n_grid, "n_grid");
    if (!(config.sigma_grid.front() > 0.0) || !std::isfinite(config.sigma_grid.back())) {
        throw ArgumentError("sigma_grid entries must be positive and finite");
    }
    if (config.n_grid.front() < 1) throw ArgumentError("n_grid entries must be >= 1");
    if (config.repetitions < 1) throw ArgumentError("repetitions must be >= 1");
    if (!(config.error_cap > 0.0)) throw ArgumentError("error_cap must be positive");
    if (!config.sigma_known && config.k == config.d) throw ArgumentError("unknown sigma requires k > d");
}

GridResult run_phase_transition(const SweepConfig& config, int threads) {
    validate(config);
    const std::size_t n_sigma = config.sigma_grid.size();
    const std::size_t n_n = config.n_grid.size();
    const std::size_t cells = n_sigma * n_n;
    const auto reps = static_cast<std::size_t>(config.repetitions);

    std::optional<Cloud> fixed;
    if (!config.resample_cloud) fixed = campaign_cloud(config.d, config.k, config.master_seed, config.unit_frobenius);

    struct Slot {
        double error = kNaN;
        std::optional<std::string> failure;
    };
    std::vector<Slot> slots(cells * reps);

    detail::parallel_for(slots.size(), threads, [&](std::size_t task) {
        const std::size_t cell = task / reps;
        const std::size_t rep = task % reps;
        const double sigma = config.sigma_grid[cell / n_n];
        const std::int64_t n = config.n_grid[cell % n_n];
        try {
            const Cloud cloud = fixed ? *fixed
                                      : sample_cloud(config.d, config.k,
                                                     derive_seed(config.master_seed, kCloudCell - 1 - cell, rep),
                                                     config.unit_frobenius);
            const GramEstimate m = gram_mean_streamed(cloud, sigma, n, derive_seed(config.master_seed, cell, rep));
            const double sigma_used = config.sigma_known ? sigma : estimate_sigma(m, config.d);
            const EstimateReport report = estimate_from_gram(m, config.d, sigma_used, !config.sigma_known);
            const double err = relative_error(cloud.matrix(), report.cloud_estimate.matrix());
            slots[task].error = std::min(err, config.error_cap);
        } catch (const std::exception& e) {
            slots[task].failure = e.what();
        }
    });

    GridResult result{config, {}};
    result.rows.reserve(cells);
    for (std::size_t cell = 0; cell < cells; ++cell) {
        GridRow row;
        row.sigma = config.sigma_grid[cell / n_n];
        row.n = config.n_grid[cell % n_n];
        std::vector<double> errors;
        for (std::size_t rep = 0; rep < reps; ++rep) {
            const Slot& slot = slots[cell * reps + rep];
            if (slot.failure && !row.error) row.error = slot.failure;
            errors.push_back(slot.error);
        }
        if (row.error) {
            row.mean_rel_error = kNaN;
            row.std_rel_error = kNaN;
            row.repetitions = 0;
        } else {
            row.mean_rel_error = mean_of(errors);
            row.std_rel_error = sample_std(errors, row.mean_rel_error);
            row.repetitions = config.repetitions;
        }
        result.rows.push_back(std::move(row));
    }
    return result;
}

std::string grid_csv(const GridResult& result) {
    std::string out = "sigma,n,mean_rel_error,std_rel_error,repetitions\n";
    for (const GridRow& row : result.rows) {
        out += format17(row.sigma) + ',' + std::to_string(row.n) + ',' + format17(row.mean_rel_error) + ',' +
               format17(row.std_rel_error) + ',' + std::to_string(row.repetitions) + '\n';
    }
    return out;
}

MonotonicityCheck check_sigma_monotone(const GridResult& result, double z) {
    MonotonicityCheck check;
    const std::size_t n_sigma = result.config.sigma_grid.size();
    const std::size_t n_n = result.config.n_grid.size();
    for (std::size_t j = 0; j < n_n; ++j) {
        for (std::size_t i = 0; i + 1 < n_sigma; ++i) {
            const GridRow& a = result.at(i, j);
            const GridRow& b = result.at(i + 1, j);
            ++check.pairs;
            if (a.error || b.error) {
                ++check.violations;
                continue;
            }
            const double se = std::sqrt(a.std_rel_error * a.std_rel_error / a.repetitions +
                                        b.std_rel_error * b.std_rel_error / b.repetitions);
            if (a.mean_rel_error - b.mean_rel_error > z * se) ++check.violations;
        }
    }
    return check;
}

ContourCheck check_quartic_contours(const GridResult& result, double sigma_min) {
    const auto& ns = result.config.n_grid;
    double step = 1.0;
    if (ns.size() > 1) {
        step = (std::log(static_cast<double>(ns.back())) - std::log(static_cast<double>(ns.front()))) /
               static_cast<double>(ns.size() - 1);
    }
    std::map<long long, std::vector<double>> groups;
    for (const GridRow& row : result.rows) {
        if (row.sigma < sigma_min || row.error) continue;
        const double offset = std::log(static_cast<double>(row.n)) - 4.0 * std::log(row.sigma);
        groups[std::llround(offset / (0.5 * step))].push_back(row.mean_rel_error);
    }
    ContourCheck check;
    for (const auto& [key, values] : groups) {
        if (values.size() < 2) continue;
        ++check.contours;
        const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
        const double spread = *hi > 0.0 ? (*hi - *lo) / *hi : 0.0;
        check.max_relative_spread = std::max(check.max_relative_spread, spread);
    }
    return check;
}

// ---------------------------------------------------------------------------
// Noise-level benchmark

void validate(const SigmaBenchConfig& config) {
    require_dims(config.d, config.k);
    if (config.k == config.d) throw ArgumentError("sigma estimation requires k > d");
    if (!(config.sigma > 0.0) || !std::isfinite(config.sigma)) throw ArgumentError("sigma must be positive");
    require_increasing(config.n_grid, "n_grid");
    if (config.n_grid.front() < 1) throw ArgumentError("n_grid entries must be >= 1");
    if (config.repetitions < 1) throw ArgumentError("repetitions must be >= 1");
}

std::vector<SigmaBenchRow> run_sigma_benchmark(const SigmaBenchConfig& config, int threads) {
    validate(config);
    const Cloud cloud = campaign_cloud(config.d, config.k, config.master_seed, config.unit_frobenius);
    const auto reps = static_cast<std::size_t>(config.repetitions);
    const double sigma2 = config.sigma * config.sigma;
    std::vector<double> errors(config.n_grid.size() * reps);

    detail::parallel_for(errors.size(), threads, [&](std::size_t task) {
        const std::size_t cell = task / reps;
        const std::size_t rep = task % reps;
        const GramEstimate m =
            gram_mean_streamed(cloud, config.sigma, config.n_grid[cell], derive_seed(config.master_seed, cell, rep));
        const double sigma_hat = estimate_sigma(m, config.d);
        errors[task] = std::abs(sigma2 - sigma_hat * sigma_hat) / sigma2;
    });

    std::vector<SigmaBenchRow> rows;
    for (std::size_t cell = 0; cell < config.n_grid.size(); ++cell) {
        const std::vector<double> cell_errors(errors.begin() + static_cast<std::ptrdiff_t>(cell * reps),
                                              errors.begin() + static_cast<std::ptrdiff_t>((cell + 1) * reps));
        SigmaBenchRow row;
        row.n = config.n_grid[cell];
        row.mean_rel_err_sigma2 = mean_of(cell_errors);
        row.std_rel_err_sigma2 = sample_std(cell_errors, row.mean_rel_err_sigma2);
        row.median_rel_err_sigma2 = median_of(cell_errors);
        row.repetitions = config.repetitions;
        rows.push_back(row);
    }
    return rows;
}

std::string sigma_bench_csv(const std::vector<SigmaBenchRow>& rows) {
    std::string out = "n,mean_rel_err_sigma2,std_rel_err_sigma2,repetitions\n";
    for (const SigmaBenchRow& row : rows) {
        out += std::to_string(row.n) + ',' + format17(row.mean_rel_err_sigma2) + ',' +
               format17(row.std_rel_err_sigma2) + ',' + std::to_string(row.repetitions) + '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// MSE validation

void validate(const MseConfig& config) {
    require_dims(config.d, config.k);
    if (config.sigma_list.empty()) throw ArgumentError("sigma_list must be nonempty");
    for (double s : config.sigma_list) {
        if (!(s >= 0.0) || !std::isfinite(s)) throw ArgumentError("sigma_list entries must be finite and >= 0");
    }
    if (config.n_list.empty()) throw ArgumentError("n_list must be nonempty");
    for (std::int64_t n : config.n_list) {
        if (n < 1) throw ArgumentError("n_list entries must be >= 1");
    }
    if (config.trials < 100) throw ArgumentError("trials must be >= 100");
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ArgumentError("slope fit needs at least two matching points");
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ArgumentError("slope fit needs positive values");
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    const double mx = mean_of(lx);
    const double my = mean_of(ly);
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (sxx == 0.0) throw ArgumentError("slope fit needs distinct x values");
    return sxy / sxx;
}

MseResult run_mse_validation(const MseConfig& config, int threads) {
    validate(config);
    const Cloud cloud = campaign_cloud(config.d, config.k, config.master_seed, config.unit_frobenius);
    const Matrix& x = cloud.matrix();
    const Matrix g = x.transpose() * x;
    const std::size_t n_sigma = config.sigma_list.size();
    const std::size_t cells = config.n_list.size() * n_sigma;
    const auto trials = static_cast<std::size_t>(config.trials);

    struct Slot {
        double gram_err2 = 0.0;
        double rho2 = 0.0;
    };
    std::vector<Slot> slots(cells * trials);

    detail::parallel_for(slots.size(), threads, [&](std::size_t task) {
        const std::size_t cell = task / trials;
        const std::size_t trial = task % trials;
        const double sigma = config.sigma_list[cell % n_sigma];
        const std::int64_t n = config.n_list[cell / n_sigma];
        const SeedSpec seed = derive_seed(config.master_seed, cell, trial);
        const GramEstimate m = config.sampling == GramSampling::direct
                                   ? gram_mean_streamed(cloud, sigma, n, seed)
                                   : GramEstimate(sample_gram_mean_sufficient(cloud, sigma, n, seed));
        slots[task].gram_err2 = (debias_gram(m, sigma, config.d) - g).squaredNorm();
        const EstimateReport report = estimate_from_gram(m, config.d, sigma, false);
        const double rho = procrustes_distance(x, report.cloud_estimate.matrix());
        slots[task].rho2 = rho * rho;
    });

    MseResult result;
    result.config = config;
    result.frob2_x = x.squaredNorm();
    for (std::size_t cell = 0; cell < cells; ++cell) {
        std::vector<double> gram_err2;
        std::vector<double> rho2;
        for (std::size_t t = 0; t < trials; ++t) {
            gram_err2.push_back(slots[cell * trials + t].gram_err2);
            rho2.push_back(slots[cell * trials + t].rho2);
        }
        MseRow row;
        row.sigma = config.sigma_list[cell % n_sigma];
        row.n = config.n_list[cell / n_sigma];
        row.empirical_gram_mse = mean_of(gram_err2);
        row.formula_gram_mse = expected_gram_mse(config.d, config.k, row.n, row.sigma, result.frob2_x);
        row.exact_gram_mse = exact_gram_mse(config.d, config.k, row.n, row.sigma, result.frob2_x);
        row.empirical_rho2 = mean_of(rho2);
        const double root_trials = std::sqrt(static_cast<double>(trials));
        row.mc_stderr = sample_std(gram_err2, row.empirical_gram_mse) / root_trials;
        row.rho2_stderr = sample_std(rho2, row.empirical_rho2) / root_trials;
        row.trials = config.trials;
        result.rows.push_back(row);
    }

    for (std::size_t ni = 0; ni < config.n_list.size(); ++ni) {
        for (const char* regime : {"low_noise", "high_noise"}) {
            SlopeFit fit;
            fit.n = config.n_list[ni];
            fit.regime = regime;
            std::vector<double> ys;
            for (std::size_t si = 0; si < n_sigma; ++si) {
                const MseRow& row = result.rows[ni * n_sigma + si];
                const bool low = row.sigma > 0.0 && row.sigma <= config.low_noise_max;
                const bool high = row.sigma >= config.high_noise_min;
                if (fit.regime == "low_noise" ? low : high) {
                    fit.sigmas.push_back(row.sigma);
                    ys.push_back(row.empirical_rho2);
                }
            }
            std::vector<double> distinct = fit.sigmas;
            std::sort(distinct.begin(), distinct.end());
            if (std::unique(distinct.begin(), distinct.end()) - distinct.begin() < 2) continue;
            fit.slope = log_log_slope(fit.sigmas, ys);
            result.slopes.push_back(std::move(fit));
        }
    }
    return result;
}

std::string mse_csv(const MseResult& result) {
    std::string out = "sigma,n,empirical_gram_mse,formula_gram_mse,empirical_rho2,mc_stderr\n";
    for (const MseRow& row : result.rows) {
        out += format17(row.sigma) + ',' + std::to_string(row.n) + ',' + format17(row.empirical_gram_mse) + ',' +
               format17(row.formula_gram_mse) + ',' + format17(row.empirical_rho2) + ',' + format17(row.mc_stderr) +
               '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bound audits

namespace {

enum AuditCell : std::uint64_t {
    kGramPairs = 0xa0d17000,
    kGramDiffPairs,
    kConcentrationCloud,
    kConcentrationFirst,
    kConcentrationSecond,
    kSpectrumClouds,
};

constexpr double kSlackTolerance = 1e-8;
constexpr double kConcentrationDelta = 0.1;

// Well-conditioned Gaussian cloud of random shape d in {1,2,3}, k in [d, d+8].
Matrix random_cloud(Engine& engine) {
    std::uniform_int_distribution<int> pick_d(1, 3);
    std::uniform_int_distribution<int> pick_extra(0, 8);
    const int d = pick_d(engine);
    const int k = d + pick_extra(engine);
    for (;;) {
        Matrix x = sample_gaussian(d, k, engine);
        const Cloud cloud = Cloud::unchecked(x);
        if (cloud.sigma_min() > 1e-3 * cloud.operator_norm()) return x;
    }
}

struct PairTrial {
    double sigma_d = 0.0;
    double gap = 0.0;
    double rho = 0.0;
};

// A pair (X, X~) whose Gram gap lies inside gap <= sigma_d^2 / 2. Odd trials
// perturb along u_d w^T with w orthogonal to the rows of X, the direction in
// which the first-order constant 1 / (sqrt 2 sigma_d) is attained.
PairTrial gram_pair(std::uint64_t master, std::uint64_t trial) {
    Engine engine = make_engine(derive_seed(master, kGramPairs, trial));
    const Matrix x = random_cloud(engine);
    const int d = static_cast<int>(x.rows());
    const int k = static_cast<int>(x.cols());
    Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double sigma_d = svd.singularValues()(d - 1);
    const double limit = 0.5 * sigma_d * sigma_d;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double target = unit(engine) * limit;
    const Matrix g = x.transpose() * x;

    Matrix x_tilde;
    if (trial % 2 == 1 && k > d) {
        Vector w = svd.matrixV().rightCols(k - d) * sample_gaussian(k - d, 1, engine);
        w.normalize();
        const double s2 = sigma_d * sigma_d;
        const double eps = std::sqrt(std::sqrt(s2 * s2 + target * target) - s2);
        x_tilde = x + eps * svd.matrixU().col(d - 1) * w.transpose();
    } else {
        Matrix e = sample_gaussian(d, k, engine);
        e /= e.norm();
        double eps = target / (x.transpose() * e + e.transpose() * x).norm();
        x_tilde = x + eps * e;
        while ((x_tilde.transpose() * x_tilde - g).norm() > limit) {
            eps *= 0.5;
            x_tilde = x + eps * e;
        }
    }
    return {sigma_d, (x_tilde.transpose() * x_tilde - g).norm(), procrustes_distance(x, x_tilde)};
}

struct DiffTrial {
    double opnorm = 0.0;
    double rho = 0.0;
    double gap = 0.0;
};

// A pair (X1, X2 = Q (X1 + eps E)) with rho <= ||X1||_op / 4. Odd trials use
// E = u_1 v_1^T, which nearly saturates the bound.
DiffTrial gram_diff_pair(std::uint64_t master, std::uint64_t trial) {
    Engine engine = make_engine(derive_seed(master, kGramDiffPairs, trial));
    const Matrix x1 = random_cloud(engine);
    const int d = static_cast<int>(x1.rows());
    const int k = static_cast<int>(x1.cols());
    Eigen::JacobiSVD<Matrix> svd(x1, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double op = svd.singularValues()(0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Matrix e = trial % 2 == 1 ? Matrix(svd.matrixU().col(0) * svd.matrixV().col(0).transpose())
                              : sample_gaussian(d, k, engine);
    e /= e.norm();
    const Matrix q = sample_haar_orthogonal(d, engine);
    double eps = unit(engine) * op / 4.0;
    Matrix x2 = q * (x1 + eps * e);
    double rho = procrustes_distance(x1, x2);
    while (rho > op / 4.0) {
        eps *= 0.5;
        x2 = q * (x1 + eps * e);
        rho = procrustes_distance(x1, x2);
    }
    return {op, rho, (x2.transpose() * x2 - x1.transpose() * x1).norm()};
}

AuditRecord finish_deterministic(std::string name, const std::vector<double>& slack) {
    AuditRecord record;
    record.audit_name = std::move(name);
    record.trials = static_cast<std::int64_t>(slack.size());
    record.tolerance = kSlackTolerance;
    record.max_slack = -std::numeric_limits<double>::infinity();
    for (double s : slack) {
        record.max_slack = std::max(record.max_slack, s);
        if (s > kSlackTolerance) ++record.violations;
    }
    record.pass = record.violations == 0;
    return record;
}

AuditRecord concentration_audit(const AuditOptions& options, int threads, double sigma, std::int64_t n,
                                std::uint64_t cell, double fault) {
    constexpr int d = 2;
    constexpr int k = 10;
    Engine engine = make_engine(derive_seed(options.master_seed, kConcentrationCloud, 0));
    const Cloud cloud = Cloud::checked(sample_gaussian(d, k, engine));
    const Matrix g = cloud.matrix().transpose() * cloud.matrix();
    const double bound =
        fault * *concentration_bound(d, k, n, sigma, cloud.operator_norm(), kConcentrationDelta).value;
    std::vector<double> slack(static_cast<std::size_t>(options.concentration_trials));
    detail::parallel_for(slack.size(), threads, [&](std::size_t t) {
        const GramEstimate m = gram_mean_streamed(cloud, sigma, n, derive_seed(options.master_seed, cell, t));
        const Matrix projected = psd_rank_d_project(debias_gram(m, sigma, d), d);
        slack[t] = (projected - g).norm() - bound;
    });
    AuditRecord record;
    char name[96];
    std::snprintf(name, sizeof name, "concentration_sigma%g_n%lld", sigma, static_cast<long long>(n));
    record.audit_name = name;
    record.trials = options.concentration_trials;
    record.tolerance = kConcentrationDelta;
    record.max_slack = *std::max_element(slack.begin(), slack.end());
    record.violations = std::count_if(slack.begin(), slack.end(), [](double s) { return s > 0.0; });
    record.pass = static_cast<double>(record.violations) <= kConcentrationDelta * static_cast<double>(record.trials);
    return record;
}

}  // namespace

std::vector<AuditRecord> run_stability_audit(const AuditOptions& options, int threads) {
    if (options.trials < 100) throw ArgumentError("trials must be >= 100");
    if (options.concentration_trials < 100) throw ArgumentError("concentration_trials must be >= 100");
    const double fault = options.inject_fault ? 0.5 : 1.0;
    const auto trials = static_cast<std::size_t>(options.trials);
    std::vector<AuditRecord> records;

    std::vector<PairTrial> pairs(trials);
    detail::parallel_for(trials, threads, [&](std::size_t t) { pairs[t] = gram_pair(options.master_seed, t); });
    std::vector<double> inversion_slack;
    std::vector<double> lipschitz_slack;
    for (const PairTrial& p : pairs) {
        inversion_slack.push_back(p.rho - fault * *gram_inversion_bound(p.sigma_d, p.gap).value);
        lipschitz_slack.push_back(p.rho - fault * *tu_lipschitz_bound(p.sigma_d, p.gap).value);
    }
    records.push_back(finish_deterministic("gram_inversion", inversion_slack));
    records.push_back(finish_deterministic("tu_lipschitz", lipschitz_slack));

    // The Gram-inversion bound is below the Lipschitz bound only for
    // gap / sigma_d^2 up to bound_ordering_limit(); the grid covers that range.
    std::vector<double> ordering_slack;
    const std::vector<double> sigmas = log_spaced(0.1, 10.0, 100);
    for (double s : sigmas) {
        for (int j = 0; j < 100; ++j) {
            const double gap = bound_ordering_limit() * s * s * j / 99.0;
            const double tight = *gram_inversion_bound(s, gap).value;
            const double loose = fault * *tu_lipschitz_bound(s, gap).value;
            ordering_slack.push_back(tight - loose - 1e-12 * std::max(1.0, loose));
        }
    }
    records.push_back(finish_deterministic("bound_ordering", ordering_slack));

    std::vector<double> diff_slack(trials);
    detail::parallel_for(trials, threads, [&](std::size_t t) {
        const DiffTrial p = gram_diff_pair(options.master_seed, t);
        diff_slack[t] = p.gap - fault * *gram_diff_upper_bound(p.opnorm, p.rho).value;
    });
    records.push_back(finish_deterministic("gram_diff", diff_slack));

    records.push_back(concentration_audit(options, threads, 1.0, 1000, kConcentrationFirst, fault));
    records.push_back(concentration_audit(options, threads, 0.5, 100, kConcentrationSecond, fault));

    // Analytic vs assembled spectrum of L_X on 50 clouds over four shapes.
    constexpr int kSpectrumTrials = 50;
    const int shapes[4][2] = {{2, 2}, {2, 5}, {3, 10}, {3, 100}};
    std::vector<double> spectrum_slack(kSpectrumTrials);
    detail::parallel_for(spectrum_slack.size(), threads, [&](std::size_t t) {
        Engine engine = make_engine(derive_seed(options.master_seed, kSpectrumClouds, t));
        const int d = shapes[t % 4][0];
        const int k = shapes[t % 4][1];
        const Cloud cloud = Cloud::checked(sample_gaussian(d, k, engine));
        const OperatorSpectrum spectrum = lx_spectrum(cloud);
        double worst = 0.0;
        for (std::size_t i = 0; i < spectrum.analytic.size(); ++i) {
            const double a = spectrum.analytic[i];
            worst = std::max(worst, std::abs(spectrum.numeric[i] - fault * a) / a);
        }
        // With k == d the sqrt(2) s_i family is empty and the minimum is 2 s_d.
        const double smallest = (k > d ? std::sqrt(2.0) : 2.0) * cloud.sigma_min();
        worst = std::max(worst, std::abs(spectrum.smallest - fault * smallest) / smallest);
        spectrum_slack[t] = worst;
    });
    records.push_back(finish_deterministic("lx_spectrum", spectrum_slack));
    return records;
}

std::string audit_jsonl(const std::vector<AuditRecord>& records) {
    std::string out;
    for (const AuditRecord& r : records) {
        nlohmann::ordered_json line = {
            {"audit_name", r.audit_name}, {"trials", r.trials},       {"violations", r.violations},
            {"max_slack", r.max_slack},   {"tolerance", r.tolerance}, {"pass", r.pass},
        };
        out += line.dump() + '\n';
    }
    return out;
}

}  // namespace procrustes
