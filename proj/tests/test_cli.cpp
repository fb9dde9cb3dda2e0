#include "switchstab/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

/// Run the CLI entry point in-process with captured streams.
CliResult RunCli(std::vector<std::string> args) {
    args.insert(args.begin(), "switchstab");
    std::vector<char*> argv;
    argv.reserve(args.size());
    for (auto& arg : args) argv.push_back(arg.data());

    std::ostringstream out;
    std::ostringstream err;
    std::streambuf* old_out = std::cout.rdbuf(out.rdbuf());
    std::streambuf* old_err = std::cerr.rdbuf(err.rdbuf());
    CliResult result;
    result.code = switchstab::cli::run(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    result.out = out.str();
    result.err = err.str();
    return result;
}

std::string FixturePath(const std::string& name) {
    return std::string(SWITCHSTAB_DATA_DIR) + "/" + name;
}

std::string TempPath(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::string ReadFile(const std::string& path) {
    std::ifstream in(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

TEST(CliCheck, StableFixtureReportsVerdictAndMargin) {
    const auto result = RunCli({"check", "--model", FixturePath("case1.json"), "--d", "3,3"});
    EXPECT_EQ(result.code, 0);
    EXPECT_NE(result.out.find("verdict: Stable"), std::string::npos);
    EXPECT_NE(result.out.find("margin: "), std::string::npos);
    EXPECT_NE(result.out.find("marginal: false"), std::string::npos);
}

TEST(CliCheck, MarginMatchesLibraryComputation) {
    const auto result = RunCli({"check", "--model", FixturePath("case2.json"), "--d", "10,0"});
    ASSERT_EQ(result.code, 0);

    auto sys = switchstab::load_system(FixturePath("case2.json"));
    sys.d = {10.0, 0.0};
    const auto verdict =
        switchstab::check_stochastic_stability(switchstab::validate(std::move(sys)));
    ASSERT_TRUE(verdict.stable());
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& p : verdict.certificate->P) {
        margin = std::min(margin, switchstab::min_eig_sym(p));
    }
    EXPECT_NE(result.out.find("margin: " + switchstab::to_string_17(margin) + "\n"),
              std::string::npos)
        << result.out;
}

TEST(CliCheck, FailOnUnstableExitsTwo) {
    const auto result = RunCli({"check", "--model", FixturePath("case2.json"), "--d", "0,0",
                                "--fail-on-unstable"});
    EXPECT_EQ(result.code, 2);
    EXPECT_NE(result.out.find("verdict: Unstable"), std::string::npos);

    // Without the flag the same analysis succeeds with exit 0.
    const auto plain = RunCli({"check", "--model", FixturePath("case2.json"), "--d", "0,0"});
    EXPECT_EQ(plain.code, 0);
}

TEST(CliCheck, CertificateRoundTripThroughVerify) {
    const std::string cert = TempPath("switchstab_cli_cert.json");
    const auto write = RunCli({"check", "--model", FixturePath("case1.json"), "--d", "3,3",
                               "--cert", cert});
    ASSERT_EQ(write.code, 0);
    ASSERT_TRUE(std::filesystem::exists(cert));

    const auto good =
        RunCli({"verify", "--model", FixturePath("case1.json"), "--d", "3,3", "--cert", cert});
    EXPECT_EQ(good.code, 0);
    EXPECT_NE(good.out.find("certificate: valid"), std::string::npos);

    // The same matrices do not certify the zero-dwell system.
    const auto stale =
        RunCli({"verify", "--model", FixturePath("case1.json"), "--d", "0,0", "--cert", cert});
    EXPECT_EQ(stale.code, 0);
    EXPECT_NE(stale.out.find("certificate: INVALID"), std::string::npos);

    std::remove(cert.c_str());
}

TEST(CliCheck, RefusesCertificateForUnstableSystem) {
    const std::string cert = TempPath("switchstab_cli_no_cert.json");
    const auto result = RunCli({"check", "--model", FixturePath("case2.json"), "--d", "0,0",
                                "--cert", cert});
    EXPECT_EQ(result.code, 1);
    EXPECT_NE(result.err.find("no certificate"), std::string::npos);
    EXPECT_FALSE(std::filesystem::exists(cert));
}

TEST(CliSweep, WritesCsvAndSvgMatchingLibrarySweep) {
    const std::string prefix = TempPath("switchstab_cli_region");
    const auto result = RunCli({"sweep", "--model", FixturePath("case2.json"), "--grid",
                                "0:1.5:0.5,0:1.5:0.5", "--out", prefix, "--threads", "2"});
    ASSERT_EQ(result.code, 0);
    EXPECT_NE(result.out.find("cells: 16"), std::string::npos);

    switchstab::SweepConfig config;
    config.base = switchstab::load_system(FixturePath("case2.json"));
    config.axis1 = switchstab::SweepAxis{0, 0.0, 1.5, 0.5};
    config.axis2 = switchstab::SweepAxis{1, 0.0, 1.5, 0.5};
    std::ostringstream expected;
    switchstab::write_region_csv(switchstab::sweep(config), expected);
    EXPECT_EQ(ReadFile(prefix + ".csv"), expected.str());

    const std::string svg = ReadFile(prefix + ".svg");
    EXPECT_NE(svg.find("</svg>"), std::string::npos);

    std::remove((prefix + ".csv").c_str());
    std::remove((prefix + ".svg").c_str());
}

TEST(CliSweep, ModesFlagSelectsSweptAxes) {
    const std::string prefix = TempPath("switchstab_cli_region_swapped");
    const auto result = RunCli({"sweep", "--model", FixturePath("case2.json"), "--grid",
                                "0:1:1,0:1:1", "--modes", "2,1", "--out", prefix});
    ASSERT_EQ(result.code, 0);

    std::ifstream csv(prefix + ".csv");
    const auto rows = switchstab::read_region_csv(csv);
    ASSERT_EQ(rows.size(), 4u);
    // d1 column now tracks mode 2's dwell; cell (1, 0) means d_2 = 1, d_1 = 0.
    const auto direct = switchstab::check_stochastic_stability(switchstab::validate(
        [&] {
            auto sys = switchstab::load_system(FixturePath("case2.json"));
            sys.d = {0.0, 1.0};
            return sys;
        }()));
    EXPECT_EQ(rows[2].stable, direct.stable());

    std::remove((prefix + ".csv").c_str());
    std::remove((prefix + ".svg").c_str());
}

TEST(CliSimulate, PrintsEstimateJsonAndMatchesLibrary) {
    const auto result = RunCli({"simulate", "--model", FixturePath("case1.json"), "--x0", "1,0",
                                "--r0", "1", "--runs", "64", "--horizon", "10", "--seed", "42"});
    ASSERT_EQ(result.code, 0);

    const auto parsed = nlohmann::json::parse(result.out);
    ASSERT_EQ(parsed.size(), 6u);
    for (const char* key :
         {"mean", "std_error", "runs", "horizon", "half_horizon_mean", "seed"}) {
        EXPECT_TRUE(parsed.contains(key)) << key;
    }
    EXPECT_EQ(parsed.at("runs").get<int>(), 64);
    EXPECT_EQ(parsed.at("seed").get<std::uint64_t>(), 42u);

    const auto v = switchstab::validate(switchstab::load_system(FixturePath("case1.json")));
    const auto est = switchstab::estimate_cost(v, {1.0, 0.0}, 0, 64, 10.0, 42);
    EXPECT_EQ(parsed.at("mean").get<double>(), est.mean);
    EXPECT_EQ(parsed.at("half_horizon_mean").get<double>(), est.half_horizon_mean);
}

TEST(CliSimulate, OutFlagWritesSameEstimate) {
    const std::string path = TempPath("switchstab_cli_estimate.json");
    const auto result =
        RunCli({"simulate", "--model", FixturePath("case1.json"), "--x0", "1,0", "--runs", "32",
                "--horizon", "5", "--seed", "9", "--out", path});
    ASSERT_EQ(result.code, 0);
    const auto from_stdout = nlohmann::json::parse(result.out);
    const auto from_file = nlohmann::json::parse(ReadFile(path));
    EXPECT_EQ(from_stdout, from_file);
    std::remove(path.c_str());
}

TEST(CliLemmas, SpotChecksAgree) {
    const auto result = RunCli({"lemmas", "--seed", "3", "--samples", "5000"});
    EXPECT_EQ(result.code, 0);
    EXPECT_NE(result.out.find("bound holds"), std::string::npos);
    EXPECT_NE(result.out.find("all within 4 standard errors"), std::string::npos);
}

TEST(CliErrors, UsageAndValidationFailuresExitOne) {
    EXPECT_EQ(RunCli({}).code, 1);                                   // missing subcommand
    EXPECT_EQ(RunCli({"frobnicate"}).code, 1);                       // unknown subcommand
    EXPECT_EQ(RunCli({"check"}).code, 1);                            // missing --model
    EXPECT_EQ(RunCli({"check", "--model", "/missing.json"}).code, 1);

    const auto unknown_flag = RunCli({"check", "--bogus"});
    EXPECT_EQ(unknown_flag.code, 1);
    EXPECT_NE(unknown_flag.err.find("--help"), std::string::npos);

    EXPECT_EQ(RunCli({"check", "--model", FixturePath("case1.json"), "--d", "1,2,3"}).code, 1);
    EXPECT_EQ(RunCli({"check", "--model", FixturePath("case1.json"), "--d", "1,-1"}).code, 1);
    EXPECT_EQ(RunCli({"simulate", "--model", FixturePath("case1.json"), "--x0", "1,0", "--r0",
                      "3"})
                  .code,
              1);
    EXPECT_EQ(RunCli({"simulate", "--model", FixturePath("case1.json"), "--x0", "oops"}).code,
              1);
    EXPECT_EQ(RunCli({"sweep", "--model", FixturePath("case1.json"), "--grid", "0:1",
                      "--out", TempPath("switchstab_cli_bad")})
                  .code,
              1);
    EXPECT_EQ(RunCli({"sweep", "--model", FixturePath("case1.json"), "--grid",
                      "0:1:0.5,0:1:0.5", "--modes", "1,1", "--out",
                      TempPath("switchstab_cli_bad")})
                  .code,
              1);
}

TEST(CliErrors, EmptyOptionValuesAreRejected) {
    const auto empty_d = RunCli({"check", "--model", FixturePath("case1.json"), "--d", ""});
    EXPECT_EQ(empty_d.code, 1);
    EXPECT_NE(empty_d.err.find("non-empty"), std::string::npos);

    EXPECT_EQ(RunCli({"check", "--model", FixturePath("case1.json"), "--cert", ""}).code, 1);
    EXPECT_EQ(RunCli({"sweep", "--model", FixturePath("case1.json"), "--grid",
                      "0:1:0.5,0:1:0.5", "--modes", "", "--out",
                      TempPath("switchstab_cli_bad")})
                  .code,
              1);
    EXPECT_EQ(RunCli({"sweep", "--model", FixturePath("case1.json"), "--grid",
                      "0:1:0.5,0:1:0.5", "--out", ""})
                  .code,
              1);
    EXPECT_EQ(RunCli({"simulate", "--model", FixturePath("case1.json"), "--x0", "1,0", "--out",
                      ""})
                  .code,
              1);
}

TEST(CliErrors, HelpExitsZero) {
    EXPECT_EQ(RunCli({"--help"}).code, 0);
    const auto sub = RunCli({"check", "--help"});
    EXPECT_EQ(sub.code, 0);
    EXPECT_NE(sub.out.find("--fail-on-unstable"), std::string::npos);
}

TEST(CliErrors, VersionFlagPrintsVersionAndExitsZero) {
    const auto result = RunCli({"--version"});
    EXPECT_EQ(result.code, 0);
    EXPECT_NE(result.out.find("switchstab 1.0.0"), std::string::npos);
}
