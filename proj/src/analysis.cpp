#include "procrustes/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "procrustes/error.hpp"
#include "procrustes/metric.hpp"
#include "procrustes/seed.hpp"

namespace procrustes {

namespace {

void require_positive(double value, const char* what) {
    if (!(value > 0.0) || !std::isfinite(value)) throw ArgumentError(std::string(what) + " must be positive and finite");
}

void require_nonnegative(double value, const char* what) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
        throw ArgumentError(std::string(what) + " must be nonnegative and finite");
    }
}

void require_samples(std::int64_t n, const char* what) {
    if (n < 1) throw ArgumentError(std::string(what) + ": N must be >= 1");
}

Matrix vec_of(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

}  // namespace

Matrix lx_apply(const Matrix& x, const Matrix& x_dot) {
    if (x.rows() != x_dot.rows() || x.cols() != x_dot.cols()) throw DimensionError("lx_apply: shape mismatch");
    const Matrix half = x.transpose() * x_dot;
    return half + half.transpose();
}

Matrix horizontal_project(const Matrix& x, const Matrix& x_dot) {
    if (x.rows() != x_dot.rows() || x.cols() != x_dot.cols()) {
        throw DimensionError("horizontal_project: shape mismatch");
    }
    if (!Cloud::unchecked(x).is_full_rank()) throw DegeneracyError("horizontal_project: X is rank deficient");

    Eigen::SelfAdjointEigenSolver<Matrix> eig(x * x.transpose());
    const Matrix& u = eig.eigenvectors();
    const Vector& lambda = eig.eigenvalues();
    const Matrix rhs = x_dot * x.transpose() - x * x_dot.transpose();
    Matrix omega = u.transpose() * rhs * u;
    for (Eigen::Index i = 0; i < omega.rows(); ++i)
        for (Eigen::Index j = 0; j < omega.cols(); ++j) omega(i, j) /= lambda(i) + lambda(j);
    omega = u * omega * u.transpose();
    omega = 0.5 * (omega - omega.transpose());
    return x_dot - omega * x;
}

int horizontal_dimension(int d, int k) noexcept { return d * k - d * (d - 1) / 2; }

std::vector<double> lx_spectrum_analytic(const Vector& s, int k) {
    const auto d = static_cast<int>(s.size());
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(horizontal_dimension(d, k)));
    for (int i = 0; i < d; ++i) out.push_back(2.0 * s(i));
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) out.push_back(std::sqrt(2.0 * (s(i) * s(i) + s(j) * s(j))));
    for (int i = 0; i < d; ++i)
        for (int r = 0; r < k - d; ++r) out.push_back(std::numbers::sqrt2 * s(i));
    std::sort(out.begin(), out.end());
    return out;
}

Matrix lx_operator_matrix(const Matrix& x) {
    const auto d = static_cast<int>(x.rows());
    const auto k = static_cast<int>(x.cols());
    Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Matrix& u = svd.matrixU();
    const Matrix& v = svd.matrixV();  // k x k; the last k - d columns complete the row space
    const Vector& s = svd.singularValues();

    Matrix op(static_cast<Eigen::Index>(k) * k, horizontal_dimension(d, k));
    Eigen::Index col = 0;
    auto push = [&](const Matrix& x_dot) { op.col(col++) = vec_of(lx_apply(x, x_dot)); };

    for (int i = 0; i < d; ++i) push(u.col(i) * v.col(i).transpose());
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            const double scale = std::sqrt(s(i) * s(i) + s(j) * s(j));
            push((s(i) * u.col(i) * v.col(j).transpose() + s(j) * u.col(j) * v.col(i).transpose()) / scale);
        }
    }
    for (int i = 0; i < d; ++i)
        for (int j = d; j < k; ++j) push(u.col(i) * v.col(j).transpose());
    return op;
}

OperatorSpectrum lx_spectrum(const Cloud& x) {
    if (!x.is_full_rank()) throw DegeneracyError("lx_spectrum: X is rank deficient");
    OperatorSpectrum out;
    out.analytic = lx_spectrum_analytic(x.singular_values(), x.k());

    const Vector numeric = Eigen::JacobiSVD<Matrix>(lx_operator_matrix(x.matrix())).singularValues();
    out.numeric.assign(numeric.data(), numeric.data() + numeric.size());
    std::sort(out.numeric.begin(), out.numeric.end());
    out.smallest = out.numeric.front();
    return out;
}

BoundReport gram_inversion_bound(double sigma_d, double gram_gap) {
    require_positive(sigma_d, "gram_inversion_bound: sigma_d");
    require_nonnegative(gram_gap, "gram_inversion_bound: gap");
    BoundReport report{"gram_inversion", {{"sigma_d", sigma_d}, {"gap", gram_gap}}, std::nullopt};
    const double s2 = sigma_d * sigma_d;
    if (gram_gap <= s2 / 2.0) {
        const double radicand = std::max(0.0, 1.0 - 2.0 * gram_gap / s2);
        report.value = sigma_d / std::numbers::sqrt2 * (1.0 - std::sqrt(radicand));
    }
    return report;
}

double tu_lipschitz_constant() noexcept { return 1.0 / std::sqrt(2.0 * (std::numbers::sqrt2 - 1.0)); }

double bound_ordering_limit() noexcept {
    const double c2 = std::numbers::sqrt2 + 1.0;
    return 2.0 * (std::sqrt(c2) - 1.0) / c2;
}

BoundReport tu_lipschitz_bound(double sigma_d, double gram_gap) {
    require_positive(sigma_d, "tu_lipschitz_bound: sigma_d");
    require_nonnegative(gram_gap, "tu_lipschitz_bound: gap");
    return BoundReport{"tu_lipschitz", {{"sigma_d", sigma_d}, {"gap", gram_gap}},
                       tu_lipschitz_constant() * gram_gap / sigma_d};
}

BoundReport gram_diff_upper_bound(double opnorm_x1, double rho) {
    require_positive(opnorm_x1, "gram_diff_upper_bound: opnorm");
    require_nonnegative(rho, "gram_diff_upper_bound: rho");
    BoundReport report{"gram_diff", {{"opnorm", opnorm_x1}, {"rho", rho}}, std::nullopt};
    if (rho <= opnorm_x1 / 4.0) report.value = 2.25 * opnorm_x1 * rho;
    return report;
}

BoundReport concentration_bound(int d, int k, std::int64_t n, double sigma, double opnorm_x, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw ArgumentError("concentration_bound: delta must lie in (0, 1)");
    require_samples(n, "concentration_bound");
    if (d < 1 || k < d) throw DimensionError("concentration_bound: need k >= d >= 1");
    require_nonnegative(sigma, "concentration_bound: sigma");
    require_nonnegative(opnorm_x, "concentration_bound: opnorm");

    const double nd = static_cast<double>(n);
    const double s2 = sigma * sigma;
    const double log_term = static_cast<double>(k) * std::log(10.0 / delta);
    const double variance = (2.0 * opnorm_x * opnorm_x * s2 + static_cast<double>(d) * s2 * s2) / nd;
    const double value =
        8.0 * std::sqrt(2.0 * d) * (std::sqrt(variance * log_term) + s2 / nd * log_term);
    return BoundReport{"concentration",
                       {{"d", double(d)}, {"k", double(k)}, {"n", nd}, {"sigma", sigma}, {"opnorm", opnorm_x},
                        {"delta", delta}},
                       value};
}

double expected_gram_mse(int d, int k, std::int64_t n, double sigma, double frob2_x) {
    require_samples(n, "expected_gram_mse");
    const double s2 = sigma * sigma;
    return (k + 1.0) * s2 / static_cast<double>(n) * (k * s2 * d + frob2_x);
}

double exact_gram_mse(int d, int k, std::int64_t n, double sigma, double frob2_x) {
    require_samples(n, "exact_gram_mse");
    const double s2 = sigma * sigma;
    return (k + 1.0) * s2 / static_cast<double>(n) * (k * s2 * d + 2.0 * frob2_x);
}

double gram_mean_covariance(const Matrix& g, double sigma, std::int64_t n, int d, int s, int t, int u, int v) {
    require_samples(n, "gram_mean_covariance");
    const auto k = static_cast<int>(g.rows());
    for (int index : {s, t, u, v}) {
        if (index < 0 || index >= k) throw ArgumentError("gram_mean_covariance: index out of range");
    }
    auto delta = [](int a, int b) { return a == b ? 1.0 : 0.0; };
    const double s2 = sigma * sigma;
    const double linear =
        delta(t, v) * g(s, u) + delta(s, v) * g(t, u) + delta(t, u) * g(s, v) + delta(s, u) * g(t, v);
    const double quadratic = d * (delta(s, u) * delta(t, v) + delta(s, v) * delta(t, u));
    return (s2 * linear + s2 * s2 * quadratic) / static_cast<double>(n);
}

double oracle_mle_mse(int d, int k, std::int64_t n, double sigma) {
    require_samples(n, "oracle_mle_mse");
    return sigma * sigma * d * k / static_cast<double>(n);
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double sign_test_error(double norm_x, double sigma) {
    require_positive(sigma, "sign_test_error: sigma");
    require_nonnegative(norm_x, "sign_test_error: norm");
    return standard_normal_cdf(-norm_x / sigma);
}

double sign_test_monte_carlo(const Matrix& x, double sigma, std::int64_t trials, const SeedSpec& seed) {
    require_positive(sigma, "sign_test_monte_carlo: sigma");
    if (trials < 1) throw ArgumentError("sign_test_monte_carlo: trials must be >= 1");
    Engine engine = make_engine(seed);
    std::bernoulli_distribution coin(0.5);
    const auto d = static_cast<int>(x.rows());
    const auto k = static_cast<int>(x.cols());
    std::int64_t errors = 0;
    for (std::int64_t t = 0; t < trials; ++t) {
        const double s = coin(engine) ? 1.0 : -1.0;
        const Matrix qx = sample_haar_orthogonal(d, engine) * x;
        const Matrix y = s * qx + sigma * sample_gaussian(d, k, engine);
        const double decided = y.cwiseProduct(qx).sum() > 0.0 ? 1.0 : -1.0;
        if (decided != s) ++errors;
    }
    return static_cast<double>(errors) / static_cast<double>(trials);
}

double oracle_mle_monte_carlo(const Cloud& cloud, double sigma, int n, int trials, const SeedSpec& seed) {
    if (n < 1 || trials < 1) throw ArgumentError("oracle_mle_monte_carlo: n and trials must be >= 1");
    const Matrix& x = cloud.matrix();
    double total = 0.0;
    Matrix y;
    Matrix q;
    for (int t = 0; t < trials; ++t) {
        ObservationStream stream(cloud, sigma, derive_seed(seed.master_seed, seed.stream_index, static_cast<std::uint64_t>(t)));
        Matrix sum = Matrix::Zero(x.rows(), x.cols());
        for (int i = 0; i < n; ++i) {
            stream.next(y, q);
            sum.noalias() += q.transpose() * y;
        }
        total += (x - sum / n).squaredNorm();
    }
    return total / trials;
}

double delta_l_bound(int d, int l, double rho) {
    if (l < 2) throw ArgumentError("delta_l_bound: l must be >= 2");
    return 12.0 * std::pow(2.0 * d, l) * rho * rho;
}

namespace {

// v^{(x) l}, with the last factor varying fastest.
void tensor_power(const Vector& v, int l, Vector& out, Vector& scratch) {
    out = v;
    for (int r = 1; r < l; ++r) {
        scratch.resize(out.size() * v.size());
        for (Eigen::Index a = 0; a < out.size(); ++a) scratch.segment(a * v.size(), v.size()) = out(a) * v;
        out.swap(scratch);
    }
}

}  // namespace

DeltaEstimate delta_l_monte_carlo(const Matrix& x1, const Matrix& x2, int l, std::int64_t samples,
                                  const SeedSpec& seed) {
    if (l < 1) throw ArgumentError("delta_l_monte_carlo: l must be >= 1");
    if (samples < 2) throw ArgumentError("delta_l_monte_carlo: need at least 2 samples");
    const Alignment alignment = optimal_rotation(x1, x2);
    const Matrix x2_aligned = alignment.rotation * x2;

    const double dim = static_cast<double>(x1.size());
    if (std::pow(dim, l) > static_cast<double>(kDeltaTensorGuard)) {
        throw ResourceError("delta_l_monte_carlo: tensor of size (dk)^l exceeds the 1e6 guard");
    }
    const auto size = static_cast<Eigen::Index>(std::llround(std::pow(dim, l)));

    Engine engine = make_engine(seed);
    const auto d = static_cast<int>(x1.rows());
    Vector sum = Vector::Zero(size);
    Vector sum_sq = Vector::Zero(size);
    Vector p1, p2, scratch;
    for (std::int64_t i = 0; i < samples; ++i) {
        const Matrix q = sample_haar_orthogonal(d, engine);
        const Matrix y1 = q * x1;
        const Matrix y2 = q * x2_aligned;
        tensor_power(Eigen::Map<const Vector>(y1.data(), y1.size()), l, p1, scratch);
        tensor_power(Eigen::Map<const Vector>(y2.data(), y2.size()), l, p2, scratch);
        p1 -= p2;
        sum += p1;
        sum_sq += p1.cwiseAbs2();
    }
    const double ns = static_cast<double>(samples);
    const Vector mean = sum / ns;
    const Vector variance = ((sum_sq / ns - mean.cwiseAbs2()) * (ns / (ns - 1.0))).cwiseMax(0.0);
    return DeltaEstimate{mean.squaredNorm(), variance.sum() / ns};
}

}  // namespace procrustes
