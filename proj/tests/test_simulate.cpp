#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "support.hpp"
#include "symfit/error.hpp"
#include "symfit/philox.hpp"
#include "symfit/simulate.hpp"

using namespace symfit;
using Eigen::VectorXd;

TEST(Philox, KnownAnswerVectors) {
    using B = Philox4x32::Block;
    EXPECT_EQ(Philox4x32::bijection(B{0, 0, 0, 0}, {0, 0}), (B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(Philox4x32::bijection(B{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
              (B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(Philox4x32::bijection(B{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
              (B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, StreamsAreDistinctAndReproducible) {
    Philox4x32 a(42, 0), b(42, 0), c(42, 1), d(43, 0);
    int same_c = 0, same_d = 0;
    for (int i = 0; i < 64; ++i) {
        auto x = a();
        EXPECT_EQ(x, b());
        same_c += x == c();
        same_d += x == d();
    }
    EXPECT_LT(same_c, 2);
    EXPECT_LT(same_d, 2);
}

TEST(SampleTable, EdgeCases) {
    auto lat = Lattice::get(3, 2);
    ProbVector uniform = ProbVector::uniform(lat);
    Table one = sample_table(uniform, 1, 3);
    EXPECT_EQ(one.total(), 1);

    VectorXd point = VectorXd::Zero(9);
    point[4] = 1.0;
    Table degenerate = sample_table(ProbVector(lat, point), 250, 3);
    EXPECT_EQ(degenerate.counts()[4], 250);
    EXPECT_EQ(degenerate.total(), 250);

    VectorXd last = VectorXd::Zero(9);
    last[8] = 1.0;
    EXPECT_EQ(sample_table(ProbVector(lat, last), 10, 1).counts()[8], 10);

    EXPECT_THROW(sample_table(uniform, 0, 1), InputError);
}

TEST(SampleTable, CellFrequenciesWithinThreeStandardErrors) {
    std::mt19937_64 rng(12);
    ProbVector p = symfit::testing::random_prob(3, 2, rng);
    const std::int64_t n = 100000;
    Table t = sample_table(p, n, 99, 5);
    for (std::size_t i = 0; i < 9; ++i) {
        double se = std::sqrt(n * p[i] * (1 - p[i]));
        EXPECT_LT(std::abs(static_cast<double>(t.counts()[i]) - n * p[i]), 3.5 * se) << i;
    }
    Table again = sample_table(p, n, 99, 5);
    EXPECT_EQ(t.counts(), again.counts());
    EXPECT_NE(t.counts(), sample_table(p, n, 99, 6).counts());
}

namespace {

SimConfig symmetric_config(int replications, std::int64_t n) {
    std::mt19937_64 rng(13);
    SimConfig cfg{symfit::testing::random_symmetric(3, 3, rng)};
    cfg.sample_size = n;
    cfg.replications = replications;
    cfg.seed = 2024;
    return cfg;
}

void expect_same(const SimSummary& a, const SimSummary& b) {
    ASSERT_EQ(a.statistics.size(), b.statistics.size());
    for (std::size_t i = 0; i < a.statistics.size(); ++i) {
        EXPECT_EQ(a.statistics[i].name, b.statistics[i].name);
        EXPECT_EQ(a.statistics[i].mean, b.statistics[i].mean);
        EXPECT_EQ(a.statistics[i].variance, b.statistics[i].variance);
        EXPECT_EQ(a.statistics[i].rejection_rate, b.statistics[i].rejection_rate);
    }
    EXPECT_EQ(a.mean_abs_residual, b.mean_abs_residual);
    EXPECT_EQ(a.failed_replicates, b.failed_replicates);
}

}  // namespace

TEST(AdditivityStudy, DeterministicAcrossThreadCounts) {
    SimConfig cfg = symmetric_config(40, 500);
    cfg.threads = 1;
    SimSummary one = run_additivity_study(cfg);
    cfg.threads = 4;
    SimSummary four = run_additivity_study(cfg);
    expect_same(one, four);
    expect_same(one, run_additivity_study(cfg));
    cfg.seed = 2025;
    EXPECT_NE(one.find("G2(s)")->mean, run_additivity_study(cfg).find("G2(s)")->mean);
}

TEST(AdditivityStudy, SingleReplicate) {
    SimConfig cfg = symmetric_config(1, 500);
    SimSummary s = run_additivity_study(cfg);
    EXPECT_EQ(s.replications, 1);
    ASSERT_NE(s.find("G2(s)"), nullptr);
    EXPECT_EQ(s.find("G2(s)")->count, 1u);
    EXPECT_EQ(s.find("G2(s)")->variance, 0.0);
    EXPECT_TRUE(s.mean_abs_residual.has_value());
}

TEST(AdditivityStudy, NullMeanMatchesDegreesOfFreedom) {
    const int R = 300;
    SimSummary s = run_additivity_study(symmetric_config(R, 2000));
    const StatisticSummary* g = s.find("G2(s)");
    ASSERT_NE(g, nullptr);
    EXPECT_EQ(g->df, 17);
    EXPECT_EQ(g->count, static_cast<std::size_t>(R));
    EXPECT_NEAR(g->mean, 17.0, 3 * std::sqrt(34.0 / R));
    const StatisticSummary* o = s.find("G2(oqs)");
    const StatisticSummary* e = s.find("G2(me)");
    ASSERT_NE(o, nullptr);
    ASSERT_NE(e, nullptr);
    EXPECT_EQ(o->df, 15);
    EXPECT_EQ(e->df, 2);
    EXPECT_NEAR(e->mean, 2.0, 3 * std::sqrt(4.0 / R));
    EXPECT_LT(*s.mean_abs_residual, 0.2);
    EXPECT_EQ(s.failed_replicates, 0);
    EXPECT_FALSE(s.failed());
}

TEST(AdditivityStudy, DetectsAsymmetry) {
    std::mt19937_64 rng(14);
    SimConfig cfg{symfit::testing::random_prob(3, 3, rng)};
    cfg.sample_size = 2000;
    cfg.replications = 30;
    SimSummary s = run_additivity_study(cfg);
    EXPECT_GT(s.find("G2(s)")->rejection_rate, 0.9);
}

TEST(CalibrationStudy, ReportsLikelihoodRatioAndWald) {
    SimConfig cfg = symmetric_config(60, 1500);
    cfg.models = {"s", "me"};
    SimSummary s = run_calibration_study(cfg);
    for (const char* name : {"G2(s)", "wald(s)", "G2(me)", "wald(me)"}) {
        const StatisticSummary* st = s.find(name);
        ASSERT_NE(st, nullptr) << name;
        EXPECT_GT(st->count, 0u);
        EXPECT_GE(st->rejection_rate, 0.0);
        EXPECT_LE(st->rejection_rate, 1.0);
    }
    EXPECT_EQ(s.find("wald(me)")->df, 2);
    EXPECT_FALSE(s.mean_abs_residual.has_value());
}

TEST(Simulation, RejectsBadConfig) {
    SimConfig cfg = symmetric_config(0, 100);
    EXPECT_THROW(run_additivity_study(cfg), InputError);
    cfg.replications = 5;
    cfg.fspec = "nonsense";
    EXPECT_THROW(run_additivity_study(cfg), InputError);
    cfg.fspec = "kl";
    EXPECT_THROW(run_calibration_study(cfg), InputError);  // no models
}

TEST(Simulation, ResolveThreads) {
    EXPECT_EQ(resolve_threads(3), 3);
    setenv("SYMFIT_THREADS", "2", 1);
    EXPECT_EQ(resolve_threads(0), 2);
    unsetenv("SYMFIT_THREADS");
    EXPECT_GE(resolve_threads(0), 1);
}
