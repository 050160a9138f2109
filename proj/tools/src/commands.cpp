#include <algorithm>
#include <sstream>

#include "symfit/cli.hpp"
#include "symfit/constraints.hpp"
#include "symfit/error.hpp"
#include "symfit/inference.hpp"
#include "symfit/simulate.hpp"
#include "symfit/solver.hpp"

#ifndef SYMFIT_VERSION
#define SYMFIT_VERSION "unknown"
#endif

namespace symfit::cli {

namespace {

ScoreVector resolve_scores(const std::string& option, const TableDocument& doc) {
    const int r = doc.table.categories();
    if (option == "equal") return doc.scores.value_or(ScoreVector::equal_interval(r));
    return load_scores(option, r);
}

std::vector<ParamEntry> param_entries(const FitResult& f, const ConstraintSystem& cs, int reference_axis) {
    std::vector<ParamEntry> out;
    if (!f.converged) return out;
    if (std::holds_alternative<std::monostate>(cs.recovery())) return out;
    FitParams params = recover_params(f, cs, reference_axis);
    if (auto* p = std::get_if<OrbitRatioParams>(&params)) {
        for (std::size_t t = 0; t < p->beta.size(); ++t)
            out.push_back({"beta_" + std::to_string(t + 1), p->beta[t]});
        const auto& orbits = cs.lattice().orbits();
        for (std::size_t k = 0; k < p->psi.size(); ++k)
            out.push_back({"psi" + orbits[k].representative.to_string(), p->psi[k]});
    } else if (auto* d = std::get_if<LogitShiftParams>(&params)) {
        for (std::size_t t = 0; t < d->delta.size(); ++t)
            out.push_back({"delta_" + std::to_string(t + 1), d->delta[t]});
    }
    return out;
}

ModelSummary summarize(const std::string& tag, const FitResult& f, std::vector<ParamEntry> params) {
    ModelSummary m;
    m.tag = tag;
    m.label = model_label(tag);
    m.g_squared = f.g_squared;
    m.df = f.df;
    m.p_value = f.p_value;
    m.converged = f.converged;
    m.iterations = f.iterations;
    m.max_constraint_residual = f.max_constraint_residual;
    m.params = std::move(params);
    m.warnings = f.warnings;
    return m;
}

ConditionalSummary conditional_summary(const std::string& tag, const FitResult& s, const FitResult& sub) {
    TestReport t = conditional_test(s, sub);
    return {"S|" + model_label(tag), t.statistic, t.df, t.p_value};
}

Provenance provenance(const std::filesystem::path& input, nlohmann::json config) {
    return {input.string(), sha256_file(input), SYMFIT_VERSION, std::move(config)};
}

}  // namespace

std::string model_label(const std::string& tag) {
    auto plus = tag.find('+');
    if (plus != std::string::npos) return model_label(tag.substr(0, plus)) + "+" + model_label(tag.substr(plus + 1));
    if (tag.rfind("oqsf:", 0) == 0) return "OQS[" + tag.substr(5) + "]";
    std::string up = tag;
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return up;
}

std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto b = item.find_first_not_of(" \t");
        auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

bool AnalysisReport::all_converged() const {
    return std::all_of(models.begin(), models.end(), [](const ModelSummary& m) { return m.converged; });
}

const ModelSummary* AnalysisReport::find(const std::string& tag) const {
    for (const auto& m : models)
        if (m.tag == tag) return &m;
    return nullptr;
}

AnalysisReport cmd_fit(const FitOptions& opts) {
    TableDocument doc = load_table_document(opts.input);
    const Table& table = doc.table;
    if (opts.models.empty()) throw InputError("no models requested");
    if (opts.reference_axis < 1 || opts.reference_axis > table.axes())
        throw InputError("--ref-axis must be between 1 and T = " + std::to_string(table.axes()));
    ScoreVector u = resolve_scores(opts.scores, doc);

    AnalysisReport report;
    report.command = "fit";
    report.T = table.axes();
    report.r = table.categories();
    report.n = table.total();

    std::optional<FitResult> s_fit;
    std::vector<std::pair<std::string, FitResult>> fits;
    for (const auto& tag : opts.models) {
        ConstraintSystem cs = build_model(tag, table.categories(), table.axes(), u);
        FitResult f = fit(table, cs);
        report.models.push_back(summarize(tag, f, param_entries(f, cs, opts.reference_axis)));
        if (tag == "s") s_fit = f;
        fits.emplace_back(tag, std::move(f));
    }
    if (s_fit && s_fit->converged) {
        for (const auto& [tag, f] : fits)
            if (tag != "s" && f.converged) report.conditional.push_back(conditional_summary(tag, *s_fit, f));
    }
    report.provenance = provenance(opts.input, {{"models", opts.models},
                                                {"scores", opts.scores},
                                                {"score_values", u.values()},
                                                {"ref_axis", opts.reference_axis}});
    return report;
}

AnalysisReport cmd_partition(const std::filesystem::path& input, const std::string& fspec, const std::string& scores) {
    TableDocument doc = load_table_document(input);
    const Table& table = doc.table;
    ScoreVector u = resolve_scores(scores, doc);
    const int r = table.categories();
    const int T = table.axes();

    ConstraintSystem s_cs = constraint_s(r, T);
    ConstraintSystem o_cs = constraint_oqsf(r, T, u, fspec_by_name(fspec));
    ConstraintSystem me_cs = constraint_me(r, T, u);
    FitResult fs = fit(table, s_cs);
    FitResult fo = fit(table, o_cs);
    FitResult fm = fit(table, me_cs);

    AnalysisReport report;
    report.command = "partition";
    report.T = T;
    report.r = r;
    report.n = table.total();
    report.models.push_back(summarize(s_cs.tag(), fs, {}));
    report.models.push_back(summarize(o_cs.tag(), fo, param_entries(fo, o_cs, 1)));
    report.models.push_back(summarize(me_cs.tag(), fm, {}));
    if (fs.converged && fo.converged) report.conditional.push_back(conditional_summary(o_cs.tag(), fs, fo));
    report.partition = PartitionSummary{fspec, fs.g_squared, fo.g_squared, fm.g_squared,
                                        fs.g_squared - fo.g_squared - fm.g_squared};
    report.provenance = provenance(input, {{"fspec", fspec}, {"scores", scores}, {"score_values", u.values()}});
    return report;
}

DescribeReport cmd_describe(const std::filesystem::path& input, const std::string& scores) {
    TableDocument doc = load_table_document(input);
    const Table& table = doc.table;
    ScoreVector u = resolve_scores(scores, doc);
    DescribeReport d;
    d.T = table.axes();
    d.r = table.categories();
    d.n = table.total();
    d.orbits = table.lattice().orbit_count();
    d.axis_names = doc.axis_names;
    ProbVector p = table.proportions();
    Eigen::VectorXd counts = table.count_vector();
    for (int t = 1; t <= d.T; ++t) {
        Eigen::VectorXd m = marginal_dist(table.lattice(), counts, t);
        std::vector<long long> row;
        for (Eigen::Index j = 0; j < m.size(); ++j) row.push_back(std::llround(m[j]));
        d.margins.push_back(std::move(row));
        d.moments.push_back(marginal_moment(p, t, u));
    }
    return d;
}

bool SimulateResult::failed() const {
    return std::any_of(runs.begin(), runs.end(), [](const SimSummary& s) { return s.failed(); });
}

SimulateResult cmd_simulate(const std::filesystem::path& config, std::optional<std::uint64_t> seed_override,
                            int threads) {
    SimulateResult result{load_study_config(config)};
    if (seed_override) result.config.seed = *seed_override;
    for (std::int64_t n : result.config.n_ladder) {
        SimConfig cfg = result.config.sim_config(n);
        cfg.threads = threads;
        result.runs.push_back(result.config.kind == StudyKind::additivity ? run_additivity_study(cfg)
                                                                          : run_calibration_study(cfg));
    }
    return result;
}

}  // namespace symfit::cli
