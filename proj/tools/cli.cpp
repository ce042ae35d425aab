#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "procrustes/analysis.hpp"
#include "procrustes/error.hpp"
#include "procrustes/estimator.hpp"
#include "procrustes/experiments.hpp"
#include "procrustes/io.hpp"
#include "procrustes/metric.hpp"
#include "procrustes/seed.hpp"

namespace procrustes::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

// Seeds of the batch persisted by `gen`: the cloud and the observations come
// from two derived streams of the one user seed.
SeedSpec cloud_seed(std::uint64_t seed) { return derive_seed(seed, kCloudCell, 0); }
SeedSpec batch_seed(std::uint64_t seed) { return derive_seed(seed, 0, 0); }

struct BatchMeta {
    int d = 0;
    int k = 0;
    double sigma = 0.0;
    std::int64_t n = 0;
    std::uint64_t seed = 0;
    bool unit_frobenius = false;
};

void validate(const BatchMeta& meta) {
    if (meta.d < 1) throw ArgumentError("d must be >= 1");
    if (meta.k < meta.d) throw DimensionError("k must be >= d");
    if (!(meta.sigma >= 0.0) || !std::isfinite(meta.sigma)) throw ArgumentError("sigma must be finite and >= 0");
    if (meta.n < 1) throw ArgumentError("n must be >= 1");
}

std::string meta_json(const BatchMeta& meta) {
    const ordered_json doc = {
        {"d", meta.d},         {"k", meta.k},       {"sigma", meta.sigma},
        {"n", meta.n},         {"seed", meta.seed}, {"unit_frobenius", meta.unit_frobenius},
    };
    return doc.dump(2) + "\n";
}

BatchMeta parse_meta(const std::string& text) {
    BatchMeta meta;
    try {
        const auto doc = nlohmann::json::parse(text);
        meta.d = doc.at("d").get<int>();
        meta.k = doc.at("k").get<int>();
        meta.sigma = doc.at("sigma").get<double>();
        meta.n = doc.at("n").get<std::int64_t>();
        meta.seed = doc.at("seed").get<std::uint64_t>();
        meta.unit_frobenius = doc.value("unit_frobenius", false);
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("malformed metadata: ") + e.what());
    }
    validate(meta);
    return meta;
}

Cloud regenerate_cloud(const BatchMeta& meta) {
    return sample_cloud(meta.d, meta.k, cloud_seed(meta.seed), meta.unit_frobenius);
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

std::optional<std::string> read_config(const std::string& path) {
    if (path.empty()) return std::nullopt;
    return read_file(path);
}

std::map<std::string, double> parse_params(const std::string& text) {
    std::map<std::string, double> params;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ArgumentError("parameter '" + item + "' is not key=value");
        const std::string key = item.substr(0, eq);
        const std::string value = item.substr(eq + 1);
        std::size_t used = 0;
        double parsed = 0.0;
        try {
            parsed = std::stod(value, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != value.size()) throw ArgumentError("parameter '" + key + "' is not a number");
        params[key] = parsed;
    }
    return params;
}

struct Formula {
    std::vector<std::string> params;
    std::function<std::optional<double>(const std::map<std::string, double>&)> eval;
};

int as_int(double v, const std::string& name) {
    if (v != std::floor(v) || std::abs(v) > 2e9) throw ArgumentError("parameter '" + name + "' must be an integer");
    return static_cast<int>(v);
}

std::int64_t as_count(double v, const std::string& name) {
    if (v != std::floor(v) || v < 1 || v > 9e18) throw ArgumentError("parameter '" + name + "' must be a positive integer");
    return static_cast<std::int64_t>(v);
}

const std::map<std::string, Formula>& formulas() {
    static const std::map<std::string, Formula> table = {
        {"gram_inversion",
         {{"sigma_d", "gap"}, [](const auto& p) { return gram_inversion_bound(p.at("sigma_d"), p.at("gap")).value; }}},
        {"tu_lipschitz",
         {{"sigma_d", "gap"}, [](const auto& p) { return tu_lipschitz_bound(p.at("sigma_d"), p.at("gap")).value; }}},
        {"gram_diff",
         {{"opnorm", "rho"}, [](const auto& p) { return gram_diff_upper_bound(p.at("opnorm"), p.at("rho")).value; }}},
        {"concentration",
         {{"d", "k", "n", "sigma", "opnorm", "delta"},
          [](const auto& p) {
              return concentration_bound(as_int(p.at("d"), "d"), as_int(p.at("k"), "k"), as_count(p.at("n"), "n"),
                                         p.at("sigma"), p.at("opnorm"), p.at("delta"))
                  .value;
          }}},
        {"gram_mse",
         {{"d", "k", "n", "sigma", "frob2"},
          [](const auto& p) -> std::optional<double> {
              return expected_gram_mse(as_int(p.at("d"), "d"), as_int(p.at("k"), "k"), as_count(p.at("n"), "n"),
                                       p.at("sigma"), p.at("frob2"));
          }}},
        {"exact_gram_mse",
         {{"d", "k", "n", "sigma", "frob2"},
          [](const auto& p) -> std::optional<double> {
              return exact_gram_mse(as_int(p.at("d"), "d"), as_int(p.at("k"), "k"), as_count(p.at("n"), "n"),
                                    p.at("sigma"), p.at("frob2"));
          }}},
        {"oracle_mse",
         {{"d", "k", "n", "sigma"},
          [](const auto& p) -> std::optional<double> {
              return oracle_mle_mse(as_int(p.at("d"), "d"), as_int(p.at("k"), "k"), as_count(p.at("n"), "n"),
                                    p.at("sigma"));
          }}},
        {"sign_test_error",
         {{"norm_x", "sigma"},
          [](const auto& p) -> std::optional<double> { return sign_test_error(p.at("norm_x"), p.at("sigma")); }}},
        {"delta_l",
         {{"d", "l", "rho"},
          [](const auto& p) -> std::optional<double> {
              return delta_l_bound(as_int(p.at("d"), "d"), as_int(p.at("l"), "l"), p.at("rho"));
          }}},
    };
    return table;
}

std::string formula_names() {
    std::string names;
    for (const auto& [name, formula] : formulas()) names += (names.empty() ? "" : ", ") + name;
    return names;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Orbit recovery from rotated noisy point clouds via invariant features", "procrustes"};
    app.require_subcommand(1);

    BatchMeta gen_meta;
    std::string out_cloud;
    std::string out_meta;
    auto* gen = app.add_subcommand("gen", "Draw a ground-truth cloud and persist the batch as metadata");
    gen->add_option("--d", gen_meta.d, "Dimension")->required();
    gen->add_option("--k", gen_meta.k, "Number of points")->required();
    gen->add_option("--sigma", gen_meta.sigma, "Noise level")->required();
    gen->add_option("--n", gen_meta.n, "Number of observations")->required();
    gen->add_option("--seed", gen_meta.seed, "Seed")->required();
    gen->add_flag("--unit-frobenius", gen_meta.unit_frobenius, "Scale the cloud to unit Frobenius norm");
    gen->add_option("--out-cloud", out_cloud, "Cloud CSV path")->required();
    gen->add_option("--out-meta", out_meta, "Metadata JSON path")->required();

    std::string meta_path;
    std::string out_prefix;
    bool sigma_known = false;
    bool sigma_unknown = false;
    auto* estimate = app.add_subcommand("estimate", "Regenerate a batch and estimate the cloud class");
    estimate->add_option("--meta", meta_path, "Metadata JSON written by gen")->required();
    auto* known = estimate->add_flag("--sigma-known", sigma_known, "Use the true noise level");
    auto* unknown = estimate->add_flag("--sigma-unknown", sigma_unknown, "Estimate the noise level");
    known->excludes(unknown);
    unknown->excludes(known);
    estimate->add_option("--out", out_prefix, "Write PREFIX.csv (estimated cloud) and PREFIX.json (report)");

    std::string config_path;
    std::string out_dir;
    int threads = 1;
    bool inject_fault = false;
    auto add_campaign = [&](const char* name, const char* description) {
        auto* sub = app.add_subcommand(name, description);
        sub->add_option("--config", config_path, "JSON config; defaults apply when omitted");
        sub->add_option("--out-dir", out_dir, "Output directory")->required();
        sub->add_option("--threads", threads, "Worker threads")->check(CLI::Range(1, 1024));
        return sub;
    };
    auto* sweep = add_campaign("sweep", "Phase-transition grid over (sigma, N)");
    auto* sigma_bench = add_campaign("sigma-bench", "Accuracy of the noise-level estimate");
    auto* mse_check = add_campaign("mse-check", "Gram and estimator MSE against the closed forms");
    auto* verify = add_campaign("verify", "Bound audits; exits 1 if any audit fails");
    verify->add_flag("--inject-fault", inject_fault, "Halve every bound so the audits fail");

    std::string formula;
    std::string params_text;
    auto* bounds = app.add_subcommand("bounds", "Evaluate a closed-form bound or formula");
    bounds->add_option("--formula", formula, "One of: " + formula_names())->required();
    bounds->add_option("--params", params_text, "Comma-separated key=value list");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*gen) {
            validate(gen_meta);
            const Cloud cloud = regenerate_cloud(gen_meta);
            write_file(out_cloud, cloud_csv(cloud.matrix()));
            write_file(out_meta, meta_json(gen_meta));
            return kExitOk;
        }
        if (*estimate) {
            if (!sigma_known && !sigma_unknown) throw ArgumentError("one of --sigma-known or --sigma-unknown is required");
            const BatchMeta meta = parse_meta(read_file(meta_path));
            const Cloud cloud = regenerate_cloud(meta);
            const GramEstimate m = gram_mean_streamed(cloud, meta.sigma, meta.n, batch_seed(meta.seed));
            const double sigma_used = sigma_known ? meta.sigma : estimate_sigma(m, meta.d);
            const EstimateReport report = estimate_from_gram(m, meta.d, sigma_used, sigma_unknown);
            const double rho_rel = relative_error(cloud.matrix(), report.cloud_estimate.matrix());
            if (!out_prefix.empty()) {
                write_file(out_prefix + ".csv", cloud_csv(report.cloud_estimate.matrix()));
                write_file(out_prefix + ".json", report_json(report, meta.n));
            }
            out << "rho_rel=" << format12(rho_rel) << " sigma_hat=" << format12(report.sigma_used)
                << " eigengap=" << format12(report.eigengap) << '\n';
            return kExitOk;
        }
        if (*sweep) {
            const auto text = read_config(config_path);
            const SweepConfig config = text ? parse_sweep_config(*text) : SweepConfig{};
            validate(config);
            ensure_dir(out_dir);
            const GridResult result = run_phase_transition(config, threads);
            write_file(fs::path(out_dir) / "grid.csv", grid_csv(result));
            int failed = 0;
            for (const GridRow& row : result.rows) {
                if (row.error) {
                    ++failed;
                    err << "cell sigma=" << format12(row.sigma) << " n=" << row.n << " failed: " << *row.error << '\n';
                }
            }
            out << "cells=" << result.rows.size() << " failed_cells=" << failed << '\n';
            return kExitOk;
        }
        if (*sigma_bench) {
            const auto text = read_config(config_path);
            const SigmaBenchConfig config = text ? parse_sigma_bench_config(*text) : SigmaBenchConfig{};
            validate(config);
            ensure_dir(out_dir);
            const auto rows = run_sigma_benchmark(config, threads);
            write_file(fs::path(out_dir) / "sigma_bench.csv", sigma_bench_csv(rows));
            for (const SigmaBenchRow& row : rows) {
                out << "n=" << row.n << " mean_rel_err_sigma2=" << format12(row.mean_rel_err_sigma2)
                    << " median_rel_err_sigma2=" << format12(row.median_rel_err_sigma2) << '\n';
            }
            return kExitOk;
        }
        if (*mse_check) {
            const auto text = read_config(config_path);
            const MseConfig config = text ? parse_mse_config(*text) : MseConfig{};
            validate(config);
            ensure_dir(out_dir);
            const MseResult result = run_mse_validation(config, threads);
            write_file(fs::path(out_dir) / "mse.csv", mse_csv(result));
            std::string slopes = "n,regime,slope\n";
            for (const SlopeFit& fit : result.slopes) {
                slopes += std::to_string(fit.n) + ',' + fit.regime + ',' + format17(fit.slope) + '\n';
                out << "n=" << fit.n << ' ' << fit.regime << "_slope=" << format12(fit.slope) << '\n';
            }
            write_file(fs::path(out_dir) / "mse_slopes.csv", slopes);
            for (const MseRow& row : result.rows) {
                out << "sigma=" << format12(row.sigma) << " n=" << row.n
                    << " gram_mse_ratio=" << format12(row.empirical_gram_mse / row.formula_gram_mse) << '\n';
            }
            return kExitOk;
        }
        if (*verify) {
            const auto text = read_config(config_path);
            AuditOptions options = text ? parse_audit_config(*text) : AuditOptions{};
            options.inject_fault = inject_fault;
            ensure_dir(out_dir);
            const auto records = run_stability_audit(options, threads);
            const std::string jsonl = audit_jsonl(records);
            write_file(fs::path(out_dir) / "audit.jsonl", jsonl);
            out << jsonl;
            const bool all_pass =
                std::all_of(records.begin(), records.end(), [](const AuditRecord& r) { return r.pass; });
            return all_pass ? kExitOk : kExitFailure;
        }
        if (*bounds) {
            const auto it = formulas().find(formula);
            if (it == formulas().end()) {
                throw ArgumentError("unknown formula '" + formula + "'; expected one of: " + formula_names());
            }
            const auto params = parse_params(params_text);
            for (const auto& [key, value] : params) {
                const auto& expected = it->second.params;
                if (std::find(expected.begin(), expected.end(), key) == expected.end()) {
                    throw ArgumentError("unknown parameter '" + key + "' for " + formula);
                }
            }
            for (const std::string& key : it->second.params) {
                if (!params.count(key)) throw ArgumentError("missing parameter '" + key + "' for " + formula);
            }
            const std::optional<double> value = it->second.eval(params);
            out << (value ? format12(*value) : std::string("not_applicable")) << '\n';
            return kExitOk;
        }
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const ArgumentError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DimensionError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace procrustes::cli
