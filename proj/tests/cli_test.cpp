#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "test_support.hpp"

using namespace skyreg;

namespace {

namespace fs = std::filesystem;

std::string g_cli;  // set from argv[1] in main()

int run_cli(const std::string& args) {
    const std::string cmd = "\"" + g_cli + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    return WEXITSTATUS(status);
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("skyreg_cli_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string file_contents(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

TEST(Cli, RegisterSelfIsIdentity) {
    const fs::path dir = fresh_dir("register");
    write_pgm(dir / "scene.pgm", make_synthetic_scene(128, 3));
    const fs::path report = dir / "report.txt";
    const int rc = run_cli("register " + (dir / "scene.pgm").string() + " " + (dir / "scene.pgm").string() +
                           " --size 128 --report " + report.string() + " --out " + dir.string());
    ASSERT_EQ(rc, 0);
    const auto fields = parse_report(report);
    EXPECT_NEAR(std::stod(fields.at("s")), 1.0, 0.02);
    EXPECT_NEAR(std::stod(fields.at("theta_deg")), 0.0, 1.0);
    EXPECT_LT(std::abs(std::stod(fields.at("tx"))), 0.5);
    EXPECT_LT(std::abs(std::stod(fields.at("ty"))), 0.5);
    EXPECT_TRUE(fs::exists(dir / "overlay.pgm"));
    EXPECT_TRUE(fs::exists(dir / "aligned.pgm"));
}

TEST(Cli, SynthThenEvalRoundTrip) {
    const fs::path dir = fresh_dir("synth_eval");
    const fs::path data = dir / "data";
    int rc = run_cli("synth --out " + data.string() +
                     " --n 4 --theta-min 10 --theta-max 40 --scale-min 0.9 --scale-max 1.15"
                     " --trans 10 --noise 0.03 --size 128 --seed 7");
    ASSERT_EQ(rc, 0);
    ASSERT_TRUE(fs::exists(data / "manifest.csv"));
    ASSERT_TRUE(fs::exists(data / "template.pgm"));
    ASSERT_TRUE(fs::exists(data / "source_0003.pgm"));

    const fs::path report = dir / "eval_report.txt";
    rc = run_cli("eval " + (data / "manifest.csv").string() + " --size 128 --threads 2 --report " +
                 report.string());
    ASSERT_EQ(rc, 0);
    const auto fields = parse_report(report);
    EXPECT_GE(std::stod(fields.at("acc_rot")), 0.85);
    EXPECT_GE(std::stod(fields.at("acc_scale")), 0.80);
    EXPECT_EQ(std::stoi(fields.at("n")), 4);
}

TEST(Cli, SimulateIsDeterministic) {
    const fs::path dir = fresh_dir("simulate");
    const fs::path scenario = dir / "scenario.txt";
    {
        std::ofstream out(scenario);
        out << "seed = 5\n"
            << "episodes = 2\n"
            << "tile_size = 128\n"
            << "sensor_noise_sigma = 0.02\n"
            << "gps_heading_range_deg = 60\n";
    }
    const fs::path report_a = dir / "report_a.txt";
    const fs::path report_b = dir / "report_b.txt";
    ASSERT_EQ(run_cli("simulate " + scenario.string() + " --size 128 --report " + report_a.string() +
                      " --out " + dir.string()),
              0);
    ASSERT_EQ(run_cli("simulate " + scenario.string() + " --size 128 --report " + report_b.string()),
              0);
    const std::string a = file_contents(report_a);
    ASSERT_FALSE(a.empty());
    EXPECT_EQ(a, file_contents(report_b));
    EXPECT_TRUE(fs::exists(dir / "feasible_region.pgm"));
    const auto fields = parse_report(report_a);
    EXPECT_EQ(std::stoi(fields.at("episodes")), 2);
    EXPECT_EQ(std::stoi(fields.at("protocol_errors")), 0);
}

TEST(Cli, BenchReportsPercentiles) {
    const fs::path dir = fresh_dir("bench");
    const fs::path report = dir / "bench.txt";
    const int rc = run_cli("bench --iters 3 --size 128 --report " + report.string());
    ASSERT_EQ(rc, 0);
    const auto fields = parse_report(report);
    EXPECT_GT(std::stod(fields.at("p50_ms")), 0.0);
    EXPECT_GE(std::stod(fields.at("max_ms")), std::stod(fields.at("p50_ms")));
    EXPECT_EQ(fields.at("within_budget"), "1");
}

TEST(Cli, ConfigFileControlsThePipeline) {
    const fs::path dir = fresh_dir("config");
    write_pgm(dir / "scene.pgm", make_synthetic_scene(128, 9));
    {
        std::ofstream out(dir / "pipeline.cfg");
        out << "working_size=128\n"
            << "feature_mode=identity\n"
            << "window_radius=6\n"
            << "highpass=1\n"
            << "min_confidence=4\n";
    }
    const fs::path report = dir / "report.txt";
    ASSERT_EQ(run_cli("register " + (dir / "scene.pgm").string() + " " + (dir / "scene.pgm").string() +
                      " --config " + (dir / "pipeline.cfg").string() + " --report " + report.string()),
              0);
    EXPECT_NEAR(std::stod(parse_report(report).at("s")), 1.0, 0.02);
    {
        std::ofstream out(dir / "bad.cfg");
        out << "no_such_key=1\n";
    }
    EXPECT_NE(run_cli("register " + (dir / "scene.pgm").string() + " " + (dir / "scene.pgm").string() +
                      " --config " + (dir / "bad.cfg").string()),
              0);
}

TEST(Cli, BadInvocationsFail) {
    EXPECT_NE(run_cli(""), 0);
    EXPECT_NE(run_cli("register"), 0);
    EXPECT_NE(run_cli("register missing_a.pgm missing_b.pgm"), 0);
    EXPECT_NE(run_cli("register a.pgm b.pgm --no-such-flag"), 0);
    EXPECT_NE(run_cli("eval /nonexistent/manifest.csv"), 0);
    EXPECT_NE(run_cli("simulate /nonexistent/scenario.txt"), 0);
}

}  // namespace

int main(int argc, char** argv) {
    ::testing::InitGoogleTest(&argc, argv);
    if (argc > 1) g_cli = argv[1];
    if (g_cli.empty()) {
        std::fprintf(stderr, "usage: cli_tests <path-to-skyreg-binary>\n");
        return 1;
    }
    return RUN_ALL_TESTS();
}
