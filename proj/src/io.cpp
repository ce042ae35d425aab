#include "procrustes/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <regex>
#include <sstream>

#include "json.hpp"
#include "procrustes/error.hpp"

namespace procrustes {

using nlohmann::json;

std::string format17(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

std::string format12(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.12g", value);
    return buffer;
}

std::string cloud_csv(const Matrix& x) {
    std::string out;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            if (j > 0) out += ',';
            out += format17(x(i, j));
        }
        out += '\n';
    }
    return out;
}

Matrix parse_cloud_csv(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream lines(text);
    std::string line;
    int line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw IoError("cloud CSV line " + std::to_string(line_no) + ": not a number: '" + cell + "'");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw IoError("cloud CSV line " + std::to_string(line_no) + ": ragged row");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError("cloud CSV is empty");
    Matrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return x;
}

std::string report_json(const EstimateReport& report, std::int64_t n) {
    json doc = {
        {"d", report.cloud_estimate.d()},
        {"k", report.cloud_estimate.k()},
        {"N", n},
        {"sigma_used", report.sigma_used},
        {"sigma_estimated", report.sigma_estimated},
        {"eigengap", report.eigengap},
        {"alphas", report.alphas},
        {"top_eigenvalues", report.top_eigenvalues},
    };
    return doc.dump(2) + "\n";
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out.flush()) throw IoError("write failed: " + path.string());
}

namespace {

int line_of_offset(const std::string& text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

int line_of_key(const std::string& text, const std::string& key) {
    const std::regex pattern("\"" + std::regex_replace(key, std::regex(R"([.^$|()\[\]{}*+?\\])"), R"(\$&)") +
                             "\"\\s*:");
    std::smatch match;
    if (std::regex_search(text, match, pattern)) return line_of_offset(text, static_cast<std::size_t>(match.position(0)));
    return 0;
}

// Typed field access over one config object.
class FieldReader {
public:
    FieldReader(const std::string& text, const json& doc, std::initializer_list<const char*> allowed)
        : text_(text), doc_(doc) {
        if (!doc_.is_object()) throw ConfigError("config must be a JSON object", 1);
        for (const auto& item : doc_.items()) {
            const bool known = std::any_of(allowed.begin(), allowed.end(),
                                           [&](const char* name) { return item.key() == name; });
            if (!known) fail(item.key(), "unknown key '" + item.key() + "'");
        }
    }

    void read(const char* key, int& out) const {
        if (const json* v = find(key)) {
            if (!v->is_number_integer()) fail(key, std::string("'") + key + "' must be an integer");
            out = v->get<int>();
        }
    }

    void read(const char* key, std::int64_t& out) const {
        if (const json* v = find(key)) {
            if (!v->is_number_integer()) fail(key, std::string("'") + key + "' must be an integer");
            out = v->get<std::int64_t>();
        }
    }

    void read(const char* key, std::uint64_t& out) const {
        if (const json* v = find(key)) {
            if (!v->is_number_unsigned()) fail(key, std::string("'") + key + "' must be a nonnegative integer");
            out = v->get<std::uint64_t>();
        }
    }

    void read(const char* key, double& out) const {
        if (const json* v = find(key)) {
            if (!v->is_number()) fail(key, std::string("'") + key + "' must be a number");
            out = v->get<double>();
        }
    }

    void read(const char* key, bool& out) const {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) fail(key, std::string("'") + key + "' must be true or false");
            out = v->get<bool>();
        }
    }

    void read(const char* key, std::vector<double>& out) const {
        if (const json* v = find(key)) {
            if (v->is_object()) {
                const auto [lo, hi, count] = range(key, *v);
                out = log_spaced(lo, hi, count);
                return;
            }
            if (!v->is_array()) fail(key, std::string("'") + key + "' must be an array or a {min,max,count} range");
            out.clear();
            for (const auto& e : *v) {
                if (!e.is_number()) fail(key, std::string("'") + key + "' entries must be numbers");
                out.push_back(e.get<double>());
            }
        }
    }

    void read(const char* key, std::vector<std::int64_t>& out) const {
        if (const json* v = find(key)) {
            if (v->is_object()) {
                const auto [lo, hi, count] = range(key, *v);
                out = log_spaced_counts(lo, hi, count);
                return;
            }
            if (!v->is_array()) fail(key, std::string("'") + key + "' must be an array or a {min,max,count} range");
            out.clear();
            for (const auto& e : *v) {
                if (!e.is_number_integer()) fail(key, std::string("'") + key + "' entries must be integers");
                out.push_back(e.get<std::int64_t>());
            }
        }
    }

    void read(const char* key, GramSampling& out) const {
        if (const json* v = find(key)) {
            const std::string name = v->is_string() ? v->get<std::string>() : "";
            if (name == "direct") out = GramSampling::direct;
            else if (name == "sufficient") out = GramSampling::sufficient;
            else fail(key, std::string("'") + key + "' must be \"direct\" or \"sufficient\"");
        }
    }

    [[noreturn]] void fail(const std::string& key, const std::string& message) const {
        throw ConfigError(message, line_of_key(text_, key));
    }

private:
    const json* find(const char* key) const {
        const auto it = doc_.find(key);
        return it == doc_.end() ? nullptr : &*it;
    }

    struct Range {
        double lo;
        double hi;
        int count;
    };

    Range range(const char* key, const json& v) const {
        for (const auto& item : v.items()) {
            if (item.key() != "min" && item.key() != "max" && item.key() != "count") {
                fail(item.key(), "unknown key '" + item.key() + "' in range '" + key + "'");
            }
        }
        if (!v.contains("min") || !v.contains("max") || !v.contains("count") || !v["min"].is_number() ||
            !v["max"].is_number() || !v["count"].is_number_integer()) {
            fail(key, std::string("range '") + key + "' needs numeric min, max and integer count");
        }
        return {v["min"].get<double>(), v["max"].get<double>(), v["count"].get<int>()};
    }

    const std::string& text_;
    const json& doc_;
};

json parse_document(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(e.what(), line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0));
    }
}

template <class Config>
Config validated(Config config) {
    try {
        validate(config);
    } catch (const Error& e) {
        throw ConfigError(e.what(), 0);
    }
    return config;
}

}  // namespace

SweepConfig parse_sweep_config(const std::string& text) {
    const json doc = parse_document(text);
    const FieldReader reader(text, doc,
                             {"d", "k", "sigma_grid", "n_grid", "repetitions", "master_seed", "sigma_known",
                              "error_cap", "resample_cloud", "unit_frobenius"});
    SweepConfig config;
    reader.read("d", config.d);
    reader.read("k", config.k);
    reader.read("sigma_grid", config.sigma_grid);
    reader.read("n_grid", config.n_grid);
    reader.read("repetitions", config.repetitions);
    reader.read("master_seed", config.master_seed);
    reader.read("sigma_known", config.sigma_known);
    reader.read("error_cap", config.error_cap);
    reader.read("resample_cloud", config.resample_cloud);
    reader.read("unit_frobenius", config.unit_frobenius);
    return validated(std::move(config));
}

SigmaBenchConfig parse_sigma_bench_config(const std::string& text) {
    const json doc = parse_document(text);
    const FieldReader reader(text, doc,
                             {"d", "k", "sigma", "n_grid", "repetitions", "master_seed", "unit_frobenius"});
    SigmaBenchConfig config;
    reader.read("d", config.d);
    reader.read("k", config.k);
    reader.read("sigma", config.sigma);
    reader.read("n_grid", config.n_grid);
    reader.read("repetitions", config.repetitions);
    reader.read("master_seed", config.master_seed);
    reader.read("unit_frobenius", config.unit_frobenius);
    return validated(std::move(config));
}

MseConfig parse_mse_config(const std::string& text) {
    const json doc = parse_document(text);
    const FieldReader reader(text, doc,
                             {"d", "k", "sigma_list", "n_list", "trials", "master_seed", "unit_frobenius", "sampling",
                              "low_noise_max", "high_noise_min"});
    MseConfig config;
    reader.read("d", config.d);
    reader.read("k", config.k);
    reader.read("sigma_list", config.sigma_list);
    reader.read("n_list", config.n_list);
    reader.read("trials", config.trials);
    reader.read("master_seed", config.master_seed);
    reader.read("unit_frobenius", config.unit_frobenius);
    reader.read("sampling", config.sampling);
    reader.read("low_noise_max", config.low_noise_max);
    reader.read("high_noise_min", config.high_noise_min);
    return validated(std::move(config));
}

AuditOptions parse_audit_config(const std::string& text) {
    const json doc = parse_document(text);
    const FieldReader reader(text, doc, {"trials", "concentration_trials", "master_seed"});
    AuditOptions options;
    reader.read("trials", options.trials);
    reader.read("concentration_trials", options.concentration_trials);
    reader.read("master_seed", options.master_seed);
    if (options.trials < 100) reader.fail("trials", "'trials' must be >= 100");
    if (options.concentration_trials < 100) reader.fail("concentration_trials", "'concentration_trials' must be >= 100");
    return options;
}

}  // namespace procrustes
