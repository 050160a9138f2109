#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "symfit/cli.hpp"
#include "symfit/error.hpp"
#include "symfit/solver.hpp"

using namespace symfit;
using namespace symfit::cli;
using symfit::testing::data_path;

namespace {

struct CliRun {
    int status = -1;
    std::string out;
};

CliRun run_cli(const std::string& args) {
    std::string cmd = std::string(SYMFIT_CLI_PATH) + " " + args + " 2>&1";
    CliRun run;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return run;
    std::array<char, 4096> buf{};
    while (std::size_t got = std::fread(buf.data(), 1, buf.size(), pipe)) run.out.append(buf.data(), got);
    int raw = pclose(pipe);
    run.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return run;
}

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << text;
    return path;
}

}  // namespace

TEST(ModelLabel, Formats) {
    EXPECT_EQ(model_label("poqs"), "POQS");
    EXPECT_EQ(model_label("oqsf:pearson"), "OQS[pearson]");
    EXPECT_EQ(model_label("oqs+me"), "OQS+ME");
    EXPECT_EQ(split_csv("s, poqs,,me"), (std::vector<std::string>{"s", "poqs", "me"}));
}

TEST(CmdFit, BundledTableMatchesLibraryFits) {
    FitOptions opts;
    opts.input = data_path("dysmenorrhea.tbl");
    AnalysisReport rep = cmd_fit(opts);
    EXPECT_EQ(rep.command, "fit");
    EXPECT_EQ(rep.n, 86);
    ASSERT_EQ(rep.models.size(), 4u);
    EXPECT_TRUE(rep.all_converged());
    Table t = symfit::testing::dysmenorrhea();
    auto u = ScoreVector::equal_interval(3);
    for (const auto& m : rep.models) {
        FitResult f = fit(t, build_model(m.tag, 3, 3, u));
        EXPECT_NEAR(m.g_squared, f.g_squared, 1e-9) << m.tag;
        EXPECT_EQ(m.df, f.df);
    }
    EXPECT_EQ(rep.find("poqs")->label, "POQS");
    EXPECT_NEAR(rep.find("mh")->g_squared, 46.28, 0.01);
    EXPECT_NEAR(rep.find("me")->g_squared, 44.81, 0.01);

    const ModelSummary* poqs = rep.find("poqs");
    ASSERT_FALSE(poqs->params.empty());
    EXPECT_EQ(poqs->params[0].label, "beta_1");
    EXPECT_EQ(poqs->params[0].value, 0.0);

    ASSERT_EQ(rep.conditional.size(), 3u);
    EXPECT_EQ(rep.conditional[0].label, "S|POQS");
    EXPECT_NEAR(rep.conditional[0].statistic, rep.find("s")->g_squared - poqs->g_squared, 1e-12);
    EXPECT_EQ(rep.conditional[0].df, 17 - 15);

    EXPECT_EQ(rep.provenance.sha256, sha256_file(opts.input));
    EXPECT_EQ(rep.provenance.sha256.size(), 64u);
}

TEST(CmdFit, LogitModelReportsShifts) {
    FitOptions opts;
    opts.input = data_path("dysmenorrhea.tbl");
    opts.models = {"ml"};
    AnalysisReport rep = cmd_fit(opts);
    ASSERT_EQ(rep.models.size(), 1u);
    EXPECT_NEAR(rep.models[0].g_squared, 0.52, 0.01);
    ASSERT_GE(rep.models[0].params.size(), 2u);
    EXPECT_EQ(rep.models[0].params[0].label, "delta_1");
    EXPECT_NEAR(rep.models[0].params[0].value, 2.04, 0.01);
    EXPECT_NEAR(rep.models[0].params[1].value, 2.43, 0.01);
    EXPECT_TRUE(rep.conditional.empty());
}

TEST(CmdFit, SymmetricTableGivesZeroStatistics) {
    auto path = write_temp("symfit_symmetric.tbl", R"({"T": 2, "r": 3, "counts": [5, 2, 7, 2, 9, 1, 7, 1, 4]})");
    FitOptions opts;
    opts.input = path;
    AnalysisReport rep = cmd_fit(opts);
    for (const auto& m : rep.models) EXPECT_NEAR(m.g_squared, 0.0, 1e-9) << m.tag;
}

TEST(Report, JsonRoundTripAndHumanLayout) {
    FitOptions opts;
    opts.input = data_path("dysmenorrhea.tbl");
    AnalysisReport rep = cmd_fit(opts);
    AnalysisReport back = report_from_json(nlohmann::json::parse(to_json(rep).dump()));
    EXPECT_EQ(back, rep);

    std::ostringstream out;
    render_human(rep, out);
    const std::string text = out.str();
    EXPECT_NE(text.find("POQS"), std::string::npos);
    EXPECT_NE(text.find("46.28*"), std::string::npos);
    EXPECT_NE(text.find("S|POQS"), std::string::npos);
    EXPECT_NE(text.find("significant at the 5% level"), std::string::npos);
}

TEST(CmdDescribe, MarginsAndOrbits) {
    DescribeReport d = cmd_describe(data_path("dysmenorrhea.tbl"));
    EXPECT_EQ(d.orbits, 10u);
    EXPECT_EQ(d.n, 86);
    EXPECT_EQ(d.margins[0], (std::vector<long long>{64, 17, 5}));
    EXPECT_NEAR(d.moments[0], (64 + 2 * 17 + 3 * 5) / 86.0, 1e-12);
    EXPECT_EQ(to_json(d)["orbits"], 10);
}

TEST(CmdPartition, GapEqualsAdditivityDefect) {
    AnalysisReport rep = cmd_partition(data_path("dysmenorrhea.tbl"), "kl");
    ASSERT_TRUE(rep.partition.has_value());
    const auto& p = *rep.partition;
    EXPECT_NEAR(p.additivity_gap, p.g2_s - p.g2_oqsf - p.g2_me, 1e-12);
    EXPECT_EQ(p.fspec, "kl");
    EXPECT_THROW(cmd_partition(data_path("dysmenorrhea.tbl"), "bogus"), InputError);
}

TEST(CmdSimulate, SmokeConfigAndSeedOverride) {
    SimulateResult a = cmd_simulate(data_path("smoke_r1.cfg"));
    ASSERT_EQ(a.runs.size(), 1u);
    EXPECT_EQ(a.runs[0].replications, 1);
    EXPECT_FALSE(a.failed());
    SimulateResult b = cmd_simulate(data_path("smoke_r1.cfg"), 8);
    EXPECT_EQ(b.config.seed, 8u);
    EXPECT_NE(a.runs[0].find("G2(s)")->mean, b.runs[0].find("G2(s)")->mean);
    EXPECT_EQ(to_json(a)["runs"].size(), 1u);
}

TEST(Executable, TableTwoCommand) {
    CliRun run = run_cli("fit --input " + data_path("dysmenorrhea.tbl") + " --models s,poqs,mh,me");
    EXPECT_EQ(run.status, 0) << run.out;
    EXPECT_NE(run.out.find("MH"), std::string::npos);
    EXPECT_NE(run.out.find("46.28"), std::string::npos);
}

TEST(Executable, MachineOutputParses) {
    auto out = std::filesystem::temp_directory_path() / "symfit_report.json";
    CliRun run = run_cli("fit --input " + data_path("dysmenorrhea.tbl") + " --format machine --out " + out.string());
    ASSERT_EQ(run.status, 0) << run.out;
    std::ifstream in(out);
    nlohmann::json j = nlohmann::json::parse(in);
    EXPECT_EQ(report_from_json(j).models.size(), 4u);
}

TEST(Executable, ExitCodes) {
    EXPECT_EQ(run_cli("fit --input /nonexistent.tbl").status, 2);
    EXPECT_EQ(run_cli("fit").status, 2);
    EXPECT_EQ(run_cli("fit --input " + data_path("dysmenorrhea.tbl") + " --models bogus").status, 2);
    auto bad = write_temp("symfit_bad.tbl", R"({"T": 2, "r": 2, "counts": [3, -1, 0, 4]})");
    EXPECT_EQ(run_cli("fit --input " + bad.string()).status, 2);
    EXPECT_EQ(run_cli("fit --input " + data_path("dysmenorrhea.tbl") + " --ref-axis 7").status, 2);
    EXPECT_EQ(run_cli("simulate --input " + data_path("smoke_r1.cfg")).status, 0);
    EXPECT_EQ(run_cli("describe --input " + data_path("dysmenorrhea.tbl")).status, 0);
}
