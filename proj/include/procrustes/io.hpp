#pragma once

// File formats: cloud CSV (d rows x k columns, 17 significant digits, no
// header), estimate-report JSON sidecar, and JSON campaign configs.

#include <filesystem>
#include <string>

#include "procrustes/estimator.hpp"
#include "procrustes/experiments.hpp"

namespace procrustes {

/// "%.17g": round-trips every double.
std::string format17(double value);
/// "%.12g": human-facing output.
std::string format12(double value);

std::string cloud_csv(const Matrix& x);
Matrix parse_cloud_csv(const std::string& text);

/// {d, k, N, sigma_used, sigma_estimated, eigengap, alphas[], top_eigenvalues[]}
std::string report_json(const EstimateReport& report, std::int64_t n);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

/// Config documents mirror the structs field by field; every field is optional
/// and unknown keys are rejected. Grids accept either an explicit array or a
/// log-spaced range {"min": a, "max": b, "count": n}. Errors are ConfigError
/// carrying the offending line.
SweepConfig parse_sweep_config(const std::string& text);
SigmaBenchConfig parse_sigma_bench_config(const std::string& text);
MseConfig parse_mse_config(const std::string& text);
AuditOptions parse_audit_config(const std::string& text);

}  // namespace procrustes
