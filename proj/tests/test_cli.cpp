#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "scalarforge/scalarforge.hpp"

using namespace sf;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    nlohmann::json out;
};

Result cli(const std::string& args) {
    std::string cmd = std::string(SCALARFORGE_CLI) + " " + args + " 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    std::string text;
    char buf[4096];
    while (std::size_t k = fread(buf, 1, sizeof buf, p)) text.append(buf, k);
    int st = pclose(p);
    Result r;
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    r.out = nlohmann::json::parse(text, nullptr, false);
    return r;
}

std::string tmp(const std::string& name) {
    auto d = fs::temp_directory_path() / ("sf_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d.string();
}

std::string write_config(const std::string& dir, const nlohmann::json& j) {
    std::string p = dir + "/config.json";
    std::ofstream(p) << j.dump(2);
    return p;
}

} // namespace

TEST(Cli, DiagnoseZeroSnapshotIsAllZero) {
    auto d = tmp("zero");
    sfld::save(d + "/zero.sfld", Field(Grid(32)));
    auto r = cli("diagnose " + d + "/zero.sfld --symbol sqg");
    ASSERT_EQ(r.code, 0);
    const auto& rec = r.out["reports"][0]["records"][0];
    EXPECT_EQ(rec["c0"], 0.0);
    EXPECT_EQ(rec["grad_c0"], 0.0);
    EXPECT_EQ(rec["mean"], 0.0);
    EXPECT_EQ(rec["energy"], 0.0);
    EXPECT_EQ(rec["hamiltonian"], 0.0);
    for (auto& [k, v] : rec["holder"].items()) EXPECT_EQ(v, 0.0) << k;
}

TEST(Cli, ValidateMicrolocalWritesSlopes) {
    auto d = tmp("micro");
    auto r = cli("validate-microlocal --out " + d);
    ASSERT_EQ(r.code, 0) << r.out;
    std::ifstream is(d + "/decay.csv");
    std::string header;
    std::getline(is, header);
    EXPECT_EQ(header, "lambda,delta_theta,delta_u,slope_theta,slope_u");
    EXPECT_NEAR(r.out["slope_u"].get<double>(), -1.0, 0.3);
}

TEST(Cli, SmoothRunAndGlue) {
    auto d = tmp("smooth");
    auto cfg = write_config(d, {{"symbol", "sqg"}, {"grid", 64}, {"smooth", {{"dt", 1e-3}, {"t_end", 0.2}}},
                                {"glue", {{"T", 0.1}}}});
    auto r = cli("smooth-run --config " + cfg + " --out " + d + "/run --seed 5");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_TRUE(fs::exists(d + "/run/trajectory.sfld"));
    std::ifstream is(d + "/run/conservation.csv");
    std::string header;
    std::getline(is, header);
    EXPECT_EQ(header, "t,E,H,mean");

    // same seed, same thread count: identical bytes
    auto r2 = cli("smooth-run --config " + cfg + " --out " + d + "/run2 --seed 5 --threads 1");
    auto r3 = cli("smooth-run --config " + cfg + " --out " + d + "/run3 --seed 5 --threads 1");
    ASSERT_EQ(r2.code, 0);
    ASSERT_EQ(r3.code, 0);
    auto slurp = [](const std::string& p) {
        std::ifstream f(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(f), {});
    };
    EXPECT_EQ(slurp(d + "/run2/trajectory.sfld"), slurp(d + "/run3/trajectory.sfld"));
    auto a = sfld::load(d + "/run/trajectory.sfld"), b = sfld::load(d + "/run2/trajectory.sfld");
    double diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, sup(a[i] - b[i]));
    EXPECT_LE(diff, 1e-12);

    auto g = cli("glue --config " + cfg + " --out " + d + "/glue");
    ASSERT_EQ(g.code, 0) << g.out;
    EXPECT_GT(g.out["R_c0"].get<double>(), 0.0);
    auto diag = cli("diagnose " + d + "/glue/glued --symbol sqg");
    ASSERT_EQ(diag.code, 0);
    EXPECT_EQ(diag.out["reports"][0]["state"]["support_violation"], 0.0);
}

TEST(Cli, ErrorsAreJson) {
    auto d = tmp("errors");
    auto bad = write_config(d, {{"grid", 64}, {"sede", 1}});
    auto r = cli("run --config " + bad);
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(r.out["status"], "error");
    EXPECT_EQ(r.out["error"]["kind"], "ConfigError");

    auto sqg = write_config(d, {{"symbol", "sqg"}, {"grid", 32}, {"seed", {{"slices", 9}}}});
    r = cli("run --config " + sqg + " --out " + d + "/out");
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(r.out["error"]["kind"], "OddMultiplier");

    r = cli("diagnose " + d + "/missing.sfld");
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(r.out["error"]["kind"], "IoError");

    r = cli("step --resolution 48");
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(r.out["error"]["kind"], "SizeMismatch");
}

TEST(Cli, RunWritesManifestAndPartialManifestOnFailure) {
    // coarse grid: stage 0 cannot place its waves, the manifest records that
    auto d = tmp("run");
    auto cfg = write_config(d, {{"grid", 32}, {"seed", {{"window", {-4, 4}}, {"slices", 33}}}, {"k_max", 1}});
    auto r = cli("run --config " + cfg + " --out " + d + "/out");
    EXPECT_EQ(r.code, 2);
    auto m = read_json(d + "/out/manifest.json");
    EXPECT_EQ(m["status"], "error");
    EXPECT_EQ(m["error"]["kind"], r.out["error"]["kind"]);
    EXPECT_EQ(m["error"]["message"].get<std::string>().rfind("stage 0: ", 0), 0u);
    EXPECT_EQ(m["stages"].size(), 0u);
}
