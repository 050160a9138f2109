#pragma once

// Monte Carlo checks of the asymptotic claims: additivity of the G^2
// partition under symmetry and chi-squared calibration of G^2 and Wald
// statistics. Replicate k draws from stream k of the seeded generator, so
// results do not depend on thread count or completion order.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "symfit/solver.hpp"
#include "symfit/table.hpp"

namespace symfit {

/// One multinomial draw of size n.
Table sample_table(const ProbVector& pi0, std::int64_t n, std::uint64_t seed, std::uint64_t stream = 0);

struct SimConfig {
    ProbVector generator;
    std::int64_t sample_size = 1000;
    int replications = 100;
    std::uint64_t seed = 1;
    std::string fspec = "kl";         // OQS[f] member for the additivity study
    std::vector<std::string> models;  // tags for the calibration study
    std::optional<ScoreVector> scores;
    int threads = 0;                  // 0: SYMFIT_THREADS or hardware concurrency
    SolverConfig solver;
};

struct StatisticSummary {
    std::string name;
    int df = 0;
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;
    double rejection_rate = 0.0;  // at nominal 0.05
    double rejection_se = 0.0;
};

struct SimSummary {
    std::int64_t sample_size = 0;
    int replications = 0;
    std::vector<StatisticSummary> statistics;
    std::optional<double> mean_abs_residual;  // |G2(S) - G2(OQS[f]) - G2(ME)|
    double residual_se = 0.0;
    int nonconvergence_failures = 0;
    int singularity_failures = 0;
    int domain_failures = 0;
    int failed_replicates = 0;

    double failure_rate() const { return replications > 0 ? double(failed_replicates) / replications : 0.0; }
    bool failed() const { return failure_rate() > 0.01; }
    const StatisticSummary* find(const std::string& name) const;
};

SimSummary run_additivity_study(const SimConfig& cfg);
SimSummary run_calibration_study(const SimConfig& cfg);

/// Worker count: cfg value if positive, else SYMFIT_THREADS, else hardware concurrency.
int resolve_threads(int requested);

}  // namespace symfit
