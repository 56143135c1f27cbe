#include "bcstab/cli.hpp"

#include <gtest/gtest.h>

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const std::string kReference = std::string(BCSTAB_CONFIG_DIR) + "/reference.ini";

struct CliRun {
    int code;
    std::string out, err;
};

CliRun cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "bcstab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = bcstab::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& text)
{
    std::ofstream(p, std::ios::binary) << text;
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override
    {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("bcstab_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    /// Reference instance with one line replaced (matched by its key).
    fs::path variant(const std::string& key, const std::string& line)
    {
        std::string text = slurp(kReference);
        text = std::regex_replace(text, std::regex("(^|\n)" + key + " = [^\n]*"), "$1" + line);
        const fs::path p = dir_ / ("variant_" + std::to_string(counter_++) + ".ini");
        write(p, text);
        return p;
    }

    fs::path dir_;
    int counter_ = 0;
};

}  // namespace

TEST_F(CliTest, SolveWritesPointAndResiduals)
{
    const CliRun r = cli({"solve", "--config", kReference, "--out", dir_.string()});
    ASSERT_EQ(r.code, bcstab::kExitOk) << r.err;
    ASSERT_TRUE(fs::exists(dir_ / "point.txt"));
    const auto j = nlohmann::json::parse(slurp(dir_ / "residuals.json"));
    for (const char* k : {"r_state", "r_adjoint", "r_stationarity", "r_comp", "r_feas"}) {
        EXPECT_LE(j.at("residuals").at(k).get<double>(), 1e-8) << k;
    }
    EXPECT_GT(j.at("sigma1").get<double>(), 0.0);
    EXPECT_EQ(nlohmann::json::parse(r.out), j);
    EXPECT_EQ(slurp(dir_ / "point.txt").rfind("kktpoint v1 mesh=", 0), 0u);
}

TEST_F(CliTest, VerifyRoundTrip)
{
    ASSERT_EQ(cli({"solve", "--config", kReference, "--out", dir_.string(), "--quiet"}).code, 0);
    const CliRun r = cli({"verify", "--config", kReference, "--point", (dir_ / "point.txt").string()});
    EXPECT_EQ(r.code, bcstab::kExitOk) << r.err;
    EXPECT_TRUE(nlohmann::json::parse(r.out).at("ok").get<bool>());
}

TEST_F(CliTest, VerifyRejectsTamperedPoints)
{
    ASSERT_EQ(cli({"solve", "--config", kReference, "--out", dir_.string(), "--quiet"}).code, 0);
    std::vector<std::string> lines;
    {
        std::istringstream is(slurp(dir_ / "point.txt"));
        for (std::string l; std::getline(is, l);) lines.push_back(l);
    }
    std::smatch m;
    ASSERT_TRUE(std::regex_search(lines[0], m, std::regex("vertices=(\\d+) boundary=(\\d+)")));
    const int nv = std::stoi(m[1]), nb = std::stoi(m[2]);
    auto save = [&](const std::vector<std::string>& ls, const std::string& name) {
        std::string text;
        for (const auto& l : ls) text += l + "\n";
        write(dir_ / name, text);
        return (dir_ / name).string();
    };

    std::vector<std::string> neg = lines;
    neg[1 + 2 * nv + nb] = "-1";  // first value of e_1
    EXPECT_EQ(cli({"verify", "--config", kReference, "--point", save(neg, "neg.txt"), "--quiet"}).code,
              bcstab::kExitCheckFailed);

    std::vector<std::string> raised = lines;
    for (int k = 0; k < nb; ++k) raised[1 + nv + k] = std::to_string(std::stod(lines[1 + nv + k]) + 0.5);
    EXPECT_EQ(cli({"verify", "--config", kReference, "--point", save(raised, "raised.txt"), "--quiet"}).code,
              bcstab::kExitCheckFailed);

    std::vector<std::string> truncated(lines.begin(), lines.end() - 3);
    EXPECT_EQ(cli({"verify", "--config", kReference, "--point", save(truncated, "short.txt")}).code,
              bcstab::kExitInvalid);

    const fs::path other = variant("n_boundary", "n_boundary = 32");
    EXPECT_EQ(cli({"verify", "--config", other.string(), "--point", (dir_ / "point.txt").string()}).code,
              bcstab::kExitInvalid);
    EXPECT_EQ(cli({"verify", "--config", kReference, "--point", (dir_ / "missing.txt").string()}).code,
              bcstab::kExitInvalid);
}

TEST_F(CliTest, InvalidInstancesExitTwo)
{
    const CliRun single = cli({"solve", "--config", variant("g2", "").string(), "--out", dir_.string()});
    EXPECT_EQ(single.code, bcstab::kExitInvalid);
    EXPECT_NE(single.err.find("m>=2"), std::string::npos) << single.err;

    const CliRun antitone = cli({"solve", "--config", variant("h", "h = -y").string(), "--out", dir_.string()});
    EXPECT_EQ(antitone.code, bcstab::kExitInvalid);
    EXPECT_NE(antitone.err.find("H4"), std::string::npos) << antitone.err;

    const CliRun short_sweep = cli({"sweep", "--config", variant("t", "t = 1e-3, 1e-2").string(), "--out", dir_.string()});
    EXPECT_EQ(short_sweep.code, bcstab::kExitInvalid);

    EXPECT_EQ(cli({"solve", "--config", variant("r", "r = 3\nbogus = 1").string()}).code, bcstab::kExitInvalid);
    EXPECT_EQ(cli({"solve", "--config", variant("L", "L = min(y, 0)").string()}).code, bcstab::kExitInvalid);
    EXPECT_EQ(cli({"solve", "--config", variant("gamma", "gamma = 2").string()}).code, bcstab::kExitInvalid);
    EXPECT_EQ(cli({"solve", "--config", (dir_ / "nope.ini").string()}).code, bcstab::kExitInvalid);
    EXPECT_EQ(cli({"solve", "--config", kReference, "--tol", "-1"}).code, bcstab::kExitInvalid);
}

TEST_F(CliTest, ArgumentErrors)
{
    EXPECT_EQ(cli({}).code, bcstab::kExitInvalid);
    EXPECT_EQ(cli({"solve"}).code, bcstab::kExitInvalid);
    EXPECT_EQ(cli({"frobnicate", "--config", kReference}).code, bcstab::kExitInvalid);
    EXPECT_EQ(cli({"verify", "--config", kReference}).code, bcstab::kExitInvalid);
    const CliRun help = cli({"--help"});
    EXPECT_EQ(help.code, bcstab::kExitOk);
    EXPECT_NE(help.out.find("sweep"), std::string::npos);
}

TEST_F(CliTest, SolveFailureExitsThree)
{
    const CliRun r = cli({"solve", "--config", variant("max_outer", "max_outer = 2").string(), "--out", dir_.string()});
    EXPECT_EQ(r.code, bcstab::kExitSolveFailed);
    EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, SscReportsPositiveCurvature)
{
    const CliRun r = cli({"ssc", "--config", kReference, "--out", dir_.string()});
    ASSERT_EQ(r.code, bcstab::kExitOk) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_GT(j.at("min_rayleigh").get<double>(), 0.0);
    EXPECT_GE(j.at("n_samples").get<int>(), 100);
}

TEST_F(CliTest, SweepOutputsAreDeterministic)
{
    const fs::path a = dir_ / "a", b = dir_ / "b";
    const CliRun ra = cli({"sweep", "--config", kReference, "--out", a.string(), "--quiet"});
    const CliRun rb = cli({"sweep", "--config", kReference, "--out", b.string(), "--quiet"});
    EXPECT_EQ(ra.code, bcstab::kExitOk) << ra.err;
    EXPECT_EQ(rb.code, bcstab::kExitOk) << rb.err;
    const std::string csv = slurp(a / "sweep.csv");
    EXPECT_EQ(csv, slurp(b / "sweep.csv"));
    EXPECT_EQ(slurp(a / "sweep.json"), slurp(b / "sweep.json"));
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 8);
    const auto j = nlohmann::json::parse(slurp(a / "sweep.json"));
    EXPECT_EQ(j.at("seed").get<int>(), 7);
    EXPECT_GE(j.at("fit").at("d_Linf").at("exponent").get<double>(), 0.45);
}

TEST_F(CliTest, SolveIsDeterministic)
{
    ASSERT_EQ(cli({"solve", "--config", kReference, "--out", (dir_ / "a").string(), "--quiet"}).code, 0);
    ASSERT_EQ(cli({"solve", "--config", kReference, "--out", (dir_ / "b").string(), "--quiet"}).code, 0);
    EXPECT_EQ(slurp(dir_ / "a" / "point.txt"), slurp(dir_ / "b" / "point.txt"));
}

TEST_F(CliTest, MeshDump)
{
    const CliRun r = cli({"mesh-dump", "--config", kReference, "--out", "-"});
    ASSERT_EQ(r.code, 0);
    std::istringstream is(r.out);
    int nv = 0, nt = 0, nb = 0;
    is >> nv >> nt >> nb;
    EXPECT_EQ(nb, 64);
    EXPECT_EQ(nv - (nv + nt - 1) + nt, 1);
    ASSERT_EQ(cli({"mesh-dump", "--config", kReference, "--out", dir_.string()}).code, 0);
    EXPECT_EQ(slurp(dir_ / "mesh.txt"), r.out);
}

TEST_F(CliTest, InstalledBinaryMatchesInProcessRun)
{
    const std::string cmd = std::string("\"") + BCSTAB_CLI_PATH + "\" solve --quiet --config \"" + kReference +
                            "\" --out \"" + (dir_ / "bin").string() + "\"";
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    ASSERT_EQ(cli({"solve", "--config", kReference, "--out", (dir_ / "lib").string(), "--quiet"}).code, 0);
    EXPECT_EQ(slurp(dir_ / "bin" / "point.txt"), slurp(dir_ / "lib" / "point.txt"));
    const std::string bad = std::string("\"") + BCSTAB_CLI_PATH + "\" solve --config \"" + (dir_ / "x.ini").string() +
                            "\" 2>/dev/null";
    const int status = std::system(bad.c_str());
    EXPECT_EQ(WEXITSTATUS(status), 2);
}
