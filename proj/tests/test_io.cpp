#include <algorithm>
#include <filesystem>
#include <functional>
#include <limits>

#include <gtest/gtest.h>

#include "json.hpp"
#include "procrustes/error.hpp"
#include "procrustes/io.hpp"

using namespace procrustes;

namespace {

int config_error_line(const std::function<void()>& parse) {
    try {
        parse();
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

}  // namespace

TEST(Format, RoundTripsDoubles) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e308, std::numeric_limits<double>::min()}) {
        EXPECT_EQ(std::stod(format17(v)), v);
    }
    EXPECT_EQ(format12(0.1 + 0.2), "0.3");
}

TEST(CloudCsv, RoundTrip) {
    Engine e = make_engine({1, 0});
    const Matrix x = sample_gaussian(3, 7, e);
    const std::string text = cloud_csv(x);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
    EXPECT_TRUE(parse_cloud_csv(text) == x);
}

TEST(CloudCsv, AcceptsCrLfAndRejectsGarbage) {
    const Matrix x = parse_cloud_csv("1,2\r\n3,4\r\n");
    EXPECT_EQ(x.rows(), 2);
    EXPECT_EQ(x(1, 0), 3.0);
    EXPECT_THROW(parse_cloud_csv("1,2\n3\n"), IoError);
    EXPECT_THROW(parse_cloud_csv("1,abc\n"), IoError);
    EXPECT_THROW(parse_cloud_csv("1,2x\n"), IoError);
    EXPECT_THROW(parse_cloud_csv(""), IoError);
}

TEST(ReportJson, Fields) {
    Matrix x(1, 2);
    x << 1, 0;
    EstimateReport r{Cloud::checked(x), {1.0}, 0.5, true, 0.75, {1.25}};
    const nlohmann::json j = nlohmann::json::parse(report_json(r, 42));
    EXPECT_EQ(j["d"], 1);
    EXPECT_EQ(j["k"], 2);
    EXPECT_EQ(j["N"], 42);
    EXPECT_EQ(j["sigma_used"], 0.5);
    EXPECT_EQ(j["sigma_estimated"], true);
    EXPECT_EQ(j["eigengap"], 0.75);
    EXPECT_EQ(j["alphas"][0], 1.0);
    EXPECT_EQ(j["top_eigenvalues"][0], 1.25);
}

TEST(Files, ReadWriteAndErrors) {
    const auto path = std::filesystem::temp_directory_path() / "procrustes_io_test.txt";
    write_file(path, "hello\n");
    EXPECT_EQ(read_file(path), "hello\n");
    std::filesystem::remove(path);
    EXPECT_THROW(read_file(path), IoError);
    EXPECT_THROW(write_file("/nonexistent-dir/x/y.txt", "z"), IoError);
}

TEST(SweepConfigParse, DefaultsAndOverrides) {
    const SweepConfig defaults = parse_sweep_config("{}");
    EXPECT_EQ(defaults.d, 3);
    EXPECT_EQ(defaults.sigma_grid.size(), 16u);
    const SweepConfig c = parse_sweep_config(R"({
  "d": 2,
  "k": 8,
  "sigma_grid": [0.1, 1.0],
  "n_grid": {"min": 10, "max": 1000, "count": 3},
  "repetitions": 5,
  "master_seed": 9,
  "sigma_known": false,
  "resample_cloud": true
})");
    EXPECT_EQ(c.d, 2);
    EXPECT_EQ(c.k, 8);
    EXPECT_EQ(c.sigma_grid, (std::vector<double>{0.1, 1.0}));
    EXPECT_EQ(c.n_grid, (std::vector<std::int64_t>{10, 100, 1000}));
    EXPECT_EQ(c.repetitions, 5);
    EXPECT_EQ(c.master_seed, 9u);
    EXPECT_FALSE(c.sigma_known);
    EXPECT_TRUE(c.resample_cloud);
}

TEST(SweepConfigParse, ErrorsCarryLineNumbers) {
    EXPECT_EQ(config_error_line([] { parse_sweep_config("{\n  \"d\": 2,\n  \"bogus\": 1\n}"); }), 3);
    EXPECT_EQ(config_error_line([] { parse_sweep_config("{\n  \"d\": 2,\n  \"k\": \"ten\"\n}"); }), 3);
    EXPECT_EQ(config_error_line([] { parse_sweep_config("{\n  \"d\": 2.5\n}"); }), 2);
    EXPECT_EQ(config_error_line([] { parse_sweep_config("{\n  \"d\": 2,\n  \"k\": ,\n}"); }), 3);
    EXPECT_EQ(config_error_line([] { parse_sweep_config("{\n\"n_grid\": {\"min\": 1, \"max\": 2}\n}"); }), 2);
    EXPECT_EQ(config_error_line([] { parse_sweep_config("[1, 2]"); }), 1);
    // Semantic errors have no single line.
    EXPECT_EQ(config_error_line([] { parse_sweep_config(R"({"sigma_grid": [1.0, 0.5]})"); }), 0);
    EXPECT_EQ(config_error_line([] { parse_sweep_config(R"({"d": 2})"); }), -1);
}

TEST(SweepConfigParse, MessageMentionsLine) {
    try {
        parse_sweep_config("{\n\"zzz\": 1}");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("zzz"), std::string::npos);
    }
}

TEST(OtherConfigs, Parse) {
    const SigmaBenchConfig s = parse_sigma_bench_config(R"({"k": 50, "sigma": 2, "n_grid": [10, 20]})");
    EXPECT_EQ(s.k, 50);
    EXPECT_EQ(s.sigma, 2.0);
    EXPECT_THROW(parse_sigma_bench_config(R"({"d": 3, "k": 3})"), ConfigError);

    const MseConfig m = parse_mse_config(R"({"sampling": "sufficient", "sigma_list": {"min": 1, "max": 4, "count": 3}})");
    EXPECT_EQ(m.sampling, GramSampling::sufficient);
    ASSERT_EQ(m.sigma_list.size(), 3u);
    EXPECT_NEAR(m.sigma_list[1], 2.0, 1e-12);
    EXPECT_THROW(parse_mse_config(R"({"sampling": "magic"})"), ConfigError);
    EXPECT_THROW(parse_mse_config(R"({"trials": 10})"), ConfigError);

    const AuditOptions a = parse_audit_config(R"({"trials": 300, "master_seed": 4})");
    EXPECT_EQ(a.trials, 300);
    EXPECT_EQ(a.master_seed, 4u);
    EXPECT_FALSE(a.inject_fault);
    EXPECT_THROW(parse_audit_config(R"({"trials": 5})"), ConfigError);
    EXPECT_THROW(parse_audit_config(R"({"inject_fault": true})"), ConfigError);
    EXPECT_THROW(parse_audit_config(R"({"master_seed": -1})"), ConfigError);
}
