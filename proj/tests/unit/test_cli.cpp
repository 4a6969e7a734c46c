#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hpl/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path base_dir()
{
    static fs::path const dir = [] {
        auto const d = fs::temp_directory_path() / "hpl_test_cli"
                       / ::testing::UnitTest::GetInstance()->current_test_info()->name();
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int run_cli(std::string const& args)
{
    std::string const command =
        std::string(HPL_CLI_PATH) + " " + args + " >>" + (base_dir() / "cli.log").string() + " 2>&1";
    int const status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(fs::path const& path)
{
    std::ifstream in(path, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path dir(std::string const& name)
{
    return base_dir() / name;
}

std::string fbm_args(std::string const& out, int replicas = 50)
{
    return "simulate --seed 5 --replicas " + std::to_string(replicas) + " --out " + dir(out).string()
           + " --set run.kind=fbm --set fbm.H=0.7 --set run.t_grid=0.25,0.5,1,2";
}

}  // namespace

TEST(Cli, SimulateWritesEnsembleAndMetadata)
{
    ASSERT_EQ(run_cli(fbm_args("sim")), 0);
    auto const e = hpl::read_ensemble_csv(dir("sim") / "ensemble.csv");
    EXPECT_EQ(e.replicas(), 50u);
    EXPECT_EQ(e.times(), 4u);
    auto const lines = std::count(std::istreambuf_iterator<char>(std::ifstream(dir("sim") / "ensemble.csv").rdbuf()),
                                  std::istreambuf_iterator<char>(), '\n');
    EXPECT_EQ(lines, 1 + 50 * 4);
    auto const meta = hpl::read_json(dir("sim") / "metadata.json");
    EXPECT_EQ(meta.at("seed"), 5);
    EXPECT_EQ(meta.at("kind"), "fbm");
    EXPECT_EQ(meta.at("config").at("fbm").at("H"), "0.69999999999999996");
}

TEST(Cli, ExitCodesForBadInput)
{
    EXPECT_EQ(run_cli(""), 2);
    EXPECT_EQ(run_cli("nonsense"), 2);
    EXPECT_EQ(run_cli("simulate --out " + dir("bad1").string() + " --set run.kind=fbm --set run.t_grid="), 2);
    EXPECT_EQ(run_cli("simulate --out " + dir("bad2").string() + " --set run.kind=fbm --set fbm.nope=1"), 2);
    EXPECT_EQ(run_cli("simulate --out " + dir("bad3").string() + " --set run.kind=fbm --set fbm.H=1.5"), 2);
    EXPECT_EQ(run_cli("simulate --out " + dir("bad4").string() + " --set run.kind=unknown"), 2);
    EXPECT_EQ(run_cli("simulate --out " + dir("bad5").string() + " --set run.kind=fbm --replicas 0"), 2);
    EXPECT_EQ(run_cli("verify --out " + dir("bad6").string() + " --set verify.ensemble=/nonexistent.csv"
                      + " --set verify.target_H=0.7"),
              2);
    EXPECT_EQ(run_cli("--help"), 0);
}

TEST(Cli, OutputIndependentOfThreads)
{
    for (std::string const kind : {"fbm", "eta", "field"}) {
        std::string const common = " --seed 9 --replicas 12 --set run.kind=" + kind
                                   + " --set run.t_grid=0.5,1 --set eta.T=3 --set field.T=3";
        ASSERT_EQ(run_cli("simulate --threads 1 --out " + dir("t1_" + kind).string() + common), 0) << kind;
        ASSERT_EQ(run_cli("simulate --threads 3 --out " + dir("t3_" + kind).string() + common), 0) << kind;
        EXPECT_EQ(slurp(dir("t1_" + kind) / "ensemble.csv"), slurp(dir("t3_" + kind) / "ensemble.csv")) << kind;
        EXPECT_EQ(slurp(dir("t1_" + kind) / "metadata.json"), slurp(dir("t3_" + kind) / "metadata.json")) << kind;
    }
}

TEST(Cli, ReproducibleFromMetadata)
{
    ASSERT_EQ(run_cli(fbm_args("orig")), 0);
    ASSERT_EQ(run_cli("simulate --config " + (dir("orig") / "metadata.json").string() + " --out "
                      + dir("again").string()),
              0);
    EXPECT_EQ(slurp(dir("orig") / "ensemble.csv"), slurp(dir("again") / "ensemble.csv"));
}

TEST(Cli, VerifyAgainstItselfAndTolerance)
{
    ASSERT_EQ(run_cli(fbm_args("v_src", 400)), 0);
    std::string const ens = (dir("v_src") / "ensemble.csv").string();
    EXPECT_EQ(run_cli("verify --out " + dir("v_self").string() + " --set verify.ensemble=" + ens
                      + " --set verify.reference=" + ens + " --set verify.permutations=49"),
              0);
    auto const report = hpl::read_json(dir("v_self") / "verify.json");
    EXPECT_EQ(report.at("pass"), true);
    EXPECT_EQ(report.at("energy").at("p_value"), 1.0);
    EXPECT_EQ(run_cli("verify --out " + dir("v_hurst").string() + " --set verify.ensemble=" + ens
                      + " --set verify.hurst_times=0.25,0.5,1,2 --set verify.hurst_target=0.7"),
              0);
    EXPECT_EQ(run_cli("verify --out " + dir("v_wrong").string() + " --set verify.ensemble=" + ens
                      + " --set verify.hurst_times=0.25,0.5,1,2 --set verify.hurst_target=0.3"),
              1);
    EXPECT_EQ(hpl::read_json(dir("v_wrong") / "verify.json").at("pass"), false);
    EXPECT_EQ(run_cli("verify --out " + dir("v_none").string() + " --set verify.ensemble=" + ens), 2);
}

TEST(Cli, SingleRungStudyMatchesVerify)
{
    std::string const checks = " --set verify.target_H=0.7 --set verify.pairs=0.25:2,0.5:1";
    ASSERT_EQ(run_cli(fbm_args("s_sim", 200)), 0);
    ASSERT_EQ(run_cli("verify --seed 5 --out " + dir("s_ver").string() + " --set verify.ensemble="
                      + (dir("s_sim") / "ensemble.csv").string() + checks),
              0);
    ASSERT_EQ(run_cli("convergence-study --seed 5 --replicas 200 --out " + dir("s_study").string()
                      + " --set run.kind=fbm --set run.t_grid=0.25,0.5,1,2 --set study.parameter=H"
                      + " --set study.ladder=0.7" + checks),
              0);
    EXPECT_EQ(slurp(dir("s_sim") / "ensemble.csv"), slurp(dir("s_study") / "rung_0" / "ensemble.csv"));
    EXPECT_EQ(hpl::read_json(dir("s_ver") / "verify.json").at("checks"),
              hpl::read_json(dir("s_study") / "rung_0" / "verify.json").at("checks"));
}

TEST(Cli, LadderStudyAndReport)
{
    std::string const common = "convergence-study --seed 3 --replicas 100 --set run.kind=fbm"
                               " --set run.t_grid=0.5,1,2 --set study.parameter=H"
                               " --set verify.hurst_times=0.5,1,2 --set verify.hurst_target=0.7"
                               " --set verify.hurst_tol=0.5";
    ASSERT_EQ(run_cli(common + " --out " + dir("ladder").string() + " --set study.ladder=0.6,0.65,0.7"), 0);
    for (int i = 0; i < 3; ++i) {
        EXPECT_TRUE(fs::exists(dir("ladder") / ("rung_" + std::to_string(i)) / "verify.json")) << i;
        EXPECT_TRUE(fs::exists(dir("ladder") / ("rung_" + std::to_string(i)) / "ensemble.csv")) << i;
    }
    auto const summary = hpl::read_json(dir("ladder") / "summary.json");
    EXPECT_EQ(summary.at("rungs").size(), 3u);
    EXPECT_EQ(summary.at("trends").size(), 1u);
    EXPECT_TRUE(fs::exists(dir("ladder") / "summary.csv"));
    EXPECT_EQ(run_cli("report --out " + dir("ladder").string()), 0);
    EXPECT_TRUE(fs::exists(dir("ladder") / "report.csv"));
    EXPECT_EQ(run_cli(common + " --out " + dir("dup").string() + " --set study.ladder=0.6,0.6"), 2);
    EXPECT_EQ(run_cli(common + " --out " + dir("empty").string() + " --set study.ladder="), 2);
}
