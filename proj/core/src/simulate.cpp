#include "symfit/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <thread>

#include "symfit/constraints.hpp"
#include "symfit/divergence.hpp"
#include "symfit/error.hpp"
#include "symfit/inference.hpp"
#include "symfit/philox.hpp"

namespace symfit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum class Failure { none, nonconvergence, singular, domain };

struct Replicate {
    std::vector<double> values;
    Failure failure = Failure::none;
};

struct Statistic {
    std::string name;
    int df;
};

void check_config(const SimConfig& cfg) {
    if (cfg.sample_size < 1) throw InputError("simulation sample size must be at least 1");
    if (cfg.replications < 1) throw InputError("simulation replication count must be at least 1");
}

// Runs body(k) for k in [0, count) on a small pool; results are indexed by k.
template <typename Body>
std::vector<Replicate> run_replicates(int count, int threads, Body body) {
    std::vector<Replicate> out(static_cast<std::size_t>(count));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int k = next++; k < count; k = next++) out[static_cast<std::size_t>(k)] = body(k);
    };
    int workers = std::max(1, std::min(threads, count));
    if (workers == 1) {
        worker();
        return out;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return out;
}

SimSummary summarize(const SimConfig& cfg, const std::vector<Statistic>& stats, const std::vector<Replicate>& reps,
                     bool additivity) {
    SimSummary s;
    s.sample_size = cfg.sample_size;
    s.replications = cfg.replications;
    for (const auto& rep : reps) {
        switch (rep.failure) {
            case Failure::none: continue;
            case Failure::nonconvergence: ++s.nonconvergence_failures; break;
            case Failure::singular: ++s.singularity_failures; break;
            case Failure::domain: ++s.domain_failures; break;
        }
        ++s.failed_replicates;
    }
    for (std::size_t j = 0; j < stats.size(); ++j) {
        StatisticSummary out{stats[j].name, stats[j].df};
        double sum = 0.0;
        std::size_t rejections = 0;
        for (const auto& rep : reps) {
            if (rep.failure != Failure::none) continue;
            double v = rep.values[j];
            sum += v;
            ++out.count;
            if (stats[j].df > 0 && chisq_sf(v, stats[j].df) < 0.05) ++rejections;
        }
        if (out.count > 0) {
            out.mean = sum / static_cast<double>(out.count);
            double ss = 0.0;
            for (const auto& rep : reps)
                if (rep.failure == Failure::none) ss += (rep.values[j] - out.mean) * (rep.values[j] - out.mean);
            out.variance = out.count > 1 ? ss / static_cast<double>(out.count - 1) : 0.0;
            out.rejection_rate = static_cast<double>(rejections) / static_cast<double>(out.count);
            out.rejection_se = std::sqrt(out.rejection_rate * (1.0 - out.rejection_rate) / static_cast<double>(out.count));
        }
        s.statistics.push_back(out);
    }
    if (additivity) {
        std::vector<double> resid;
        for (const auto& rep : reps)
            if (rep.failure == Failure::none) resid.push_back(std::abs(rep.values[0] - rep.values[1] - rep.values[2]));
        if (!resid.empty()) {
            double mean = 0.0;
            for (double v : resid) mean += v;
            mean /= static_cast<double>(resid.size());
            double ss = 0.0;
            for (double v : resid) ss += (v - mean) * (v - mean);
            s.mean_abs_residual = mean;
            s.residual_se = resid.size() > 1 ? std::sqrt(ss / static_cast<double>(resid.size() - 1) /
                                                         static_cast<double>(resid.size()))
                                             : 0.0;
        }
    }
    return s;
}

Failure classify(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::singular: return Failure::singular;
        case ErrorKind::convergence: return Failure::nonconvergence;
        default: return Failure::domain;
    }
}

}  // namespace

const StatisticSummary* SimSummary::find(const std::string& name) const {
    for (const auto& s : statistics)
        if (s.name == name) return &s;
    return nullptr;
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SYMFIT_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

Table sample_table(const ProbVector& pi0, std::int64_t n, std::uint64_t seed, std::uint64_t stream) {
    if (n < 1) throw InputError("sample size must be at least 1");
    Philox4x32 engine(seed, stream);
    const Lattice& lat = pi0.lattice();
    std::vector<std::int64_t> counts(lat.size(), 0);
    std::int64_t remaining = n;
    double mass = 1.0;
    // Conditional binomial decomposition of the multinomial.
    for (std::size_t i = 0; i + 1 < lat.size() && remaining > 0; ++i) {
        double p = pi0[i];
        if (p <= 0.0) continue;
        double q = mass > 0.0 ? std::min(1.0, p / mass) : 1.0;
        std::binomial_distribution<std::int64_t> draw(remaining, q);
        std::int64_t k = q >= 1.0 ? remaining : draw(engine);
        counts[i] = k;
        remaining -= k;
        mass -= p;
    }
    counts.back() += remaining;
    return Table(lat.axes(), lat.categories(), std::move(counts));
}

SimSummary run_additivity_study(const SimConfig& cfg) {
    check_config(cfg);
    const Lattice& lat = cfg.generator.lattice();
    const int r = lat.categories();
    const int T = lat.axes();
    const ScoreVector u = cfg.scores.value_or(ScoreVector::equal_interval(r));
    const ConstraintSystem s_model = constraint_s(r, T);
    const ConstraintSystem oqsf_model = constraint_oqsf(r, T, u, fspec_by_name(cfg.fspec));
    const ConstraintSystem me_model = constraint_me(r, T, u);

    const std::vector<Statistic> stats = {{"G2(s)", s_model.dim()},
                                          {"G2(" + oqsf_model.tag() + ")", oqsf_model.dim()},
                                          {"G2(me)", me_model.dim()}};

    auto body = [&](int k) {
        Replicate rep;
        rep.values.assign(3, kNaN);
        Table table = sample_table(cfg.generator, cfg.sample_size, cfg.seed, static_cast<std::uint64_t>(k));
        const ConstraintSystem* systems[] = {&s_model, &oqsf_model, &me_model};
        for (std::size_t j = 0; j < 3; ++j) {
            try {
                FitResult f = fit(table, *systems[j], cfg.solver);
                if (!f.converged) {
                    rep.failure = Failure::nonconvergence;
                    return rep;
                }
                rep.values[j] = f.g_squared;
            } catch (const Error& e) {
                rep.failure = classify(e);
                return rep;
            }
        }
        return rep;
    };
    auto reps = run_replicates(cfg.replications, resolve_threads(cfg.threads), body);
    return summarize(cfg, stats, reps, true);
}

SimSummary run_calibration_study(const SimConfig& cfg) {
    check_config(cfg);
    if (cfg.models.empty()) throw InputError("calibration study needs at least one model");
    const Lattice& lat = cfg.generator.lattice();
    const int r = lat.categories();
    const int T = lat.axes();
    const ScoreVector u = cfg.scores.value_or(ScoreVector::equal_interval(r));

    std::vector<ConstraintSystem> systems;
    std::vector<Statistic> stats;
    for (const auto& tag : cfg.models) {
        systems.push_back(build_model(tag, r, T, u));
        stats.push_back({"G2(" + tag + ")", systems.back().dim()});
        stats.push_back({"wald(" + tag + ")", systems.back().dim()});
    }

    auto body = [&](int k) {
        Replicate rep;
        rep.values.assign(stats.size(), kNaN);
        Table table = sample_table(cfg.generator, cfg.sample_size, cfg.seed, static_cast<std::uint64_t>(k));
        for (std::size_t j = 0; j < systems.size(); ++j) {
            try {
                FitResult f = fit(table, systems[j], cfg.solver);
                if (!f.converged) {
                    rep.failure = Failure::nonconvergence;
                    return rep;
                }
                rep.values[2 * j] = f.g_squared;
                rep.values[2 * j + 1] = wald_delta(table, systems[j]).statistic;
            } catch (const Error& e) {
                rep.failure = classify(e);
                return rep;
            }
        }
        return rep;
    };
    auto reps = run_replicates(cfg.replications, resolve_threads(cfg.threads), body);
    return summarize(cfg, stats, reps, false);
}

}  // namespace symfit
