#include <cstdio>
#include <iomanip>
#include <ostream>

#include "symfit/cli.hpp"
#include "symfit/error.hpp"

namespace symfit::cli {

using nlohmann::json;

namespace {

std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string pvalue(double p) {
    char buf[64];
    std::snprintf(buf, sizeof buf, p < 1e-4 ? "%.2e" : "%.4f", p);
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

}  // namespace

json to_json(const AnalysisReport& report) {
    json models = json::array();
    for (const auto& m : report.models) {
        json params = json::array();
        for (const auto& p : m.params) params.push_back({{"label", p.label}, {"value", p.value}});
        models.push_back({{"tag", m.tag},
                          {"label", m.label},
                          {"g_squared", m.g_squared},
                          {"df", m.df},
                          {"p_value", m.p_value},
                          {"significant", m.significant()},
                          {"converged", m.converged},
                          {"iterations", m.iterations},
                          {"max_constraint_residual", m.max_constraint_residual},
                          {"params", params},
                          {"warnings", m.warnings}});
    }
    json conditional = json::array();
    for (const auto& c : report.conditional)
        conditional.push_back({{"label", c.label},
                               {"statistic", c.statistic},
                               {"df", c.df},
                               {"p_value", c.p_value},
                               {"significant", c.significant()}});
    json j{{"command", report.command},
           {"table", {{"T", report.T}, {"r", report.r}, {"n", report.n}}},
           {"models", models},
           {"conditional", conditional},
           {"provenance",
            {{"input", report.provenance.input},
             {"sha256", report.provenance.sha256},
             {"version", report.provenance.version},
             {"config", report.provenance.config}}}};
    if (report.partition) {
        const auto& p = *report.partition;
        j["partition"] = {{"fspec", p.fspec},
                          {"g2_s", p.g2_s},
                          {"g2_oqsf", p.g2_oqsf},
                          {"g2_me", p.g2_me},
                          {"additivity_gap", p.additivity_gap}};
    }
    return j;
}

AnalysisReport report_from_json(const json& j) {
    AnalysisReport r;
    try {
        r.command = j.at("command").get<std::string>();
        r.T = j.at("table").at("T").get<int>();
        r.r = j.at("table").at("r").get<int>();
        r.n = j.at("table").at("n").get<long long>();
        for (const auto& m : j.at("models")) {
            ModelSummary s;
            s.tag = m.at("tag").get<std::string>();
            s.label = m.at("label").get<std::string>();
            s.g_squared = m.at("g_squared").get<double>();
            s.df = m.at("df").get<int>();
            s.p_value = m.at("p_value").get<double>();
            s.converged = m.at("converged").get<bool>();
            s.iterations = m.at("iterations").get<int>();
            s.max_constraint_residual = m.at("max_constraint_residual").get<double>();
            for (const auto& p : m.at("params")) s.params.push_back({p.at("label"), p.at("value").get<double>()});
            s.warnings = m.at("warnings").get<std::vector<std::string>>();
            r.models.push_back(std::move(s));
        }
        for (const auto& c : j.at("conditional"))
            r.conditional.push_back({c.at("label").get<std::string>(), c.at("statistic").get<double>(),
                                     c.at("df").get<int>(), c.at("p_value").get<double>()});
        if (j.contains("partition")) {
            const json& p = j.at("partition");
            r.partition = PartitionSummary{p.at("fspec").get<std::string>(), p.at("g2_s").get<double>(),
                                           p.at("g2_oqsf").get<double>(), p.at("g2_me").get<double>(),
                                           p.at("additivity_gap").get<double>()};
        }
        const json& pv = j.at("provenance");
        r.provenance = {pv.at("input").get<std::string>(), pv.at("sha256").get<std::string>(),
                        pv.at("version").get<std::string>(), pv.at("config")};
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed analysis report: ") + e.what());
    }
    return r;
}

void render_human(const AnalysisReport& report, std::ostream& out) {
    out << "Goodness-of-fit statistics (T=" << report.T << ", r=" << report.r << ", n=" << report.n << ")\n\n";
    out << pad("Model", 14) << pad("G2", 12) << pad("df", 6) << "p-value\n";
    for (const auto& m : report.models) {
        std::string g2 = fixed2(m.g_squared) + (m.significant() ? "*" : "");
        if (!m.converged) g2 += " (not converged)";
        out << pad(m.label, 14) << pad(g2, 12) << pad(std::to_string(m.df), 6) << pvalue(m.p_value) << "\n";
    }
    if (!report.conditional.empty()) {
        out << "\nConditional tests\n";
        for (const auto& c : report.conditional) {
            std::string g2 = fixed2(c.statistic) + (c.significant() ? "*" : "");
            out << pad(c.label, 14) << pad(g2, 12) << pad(std::to_string(c.df), 6) << pvalue(c.p_value) << "\n";
        }
    }
    if (report.partition) {
        const auto& p = *report.partition;
        out << "\nPartition (" << p.fspec << "): G2(S) - G2(OQS[f]) - G2(ME) = " << fixed2(p.additivity_gap) << "\n";
    }
    out << "\n* significant at the 5% level\n";
    for (const auto& m : report.models) {
        if (!m.params.empty()) {
            out << "\n" << m.label << " parameters\n";
            for (const auto& p : m.params) out << "  " << pad(p.label, 14) << fixed2(p.value) << "\n";
        }
        for (const auto& w : m.warnings) out << "warning (" << m.label << "): " << w << "\n";
    }
    out << "\ninput " << report.provenance.input << " sha256 " << report.provenance.sha256 << "\n";
}

json to_json(const DescribeReport& d) {
    return json{{"T", d.T},         {"r", d.r},           {"n", d.n}, {"orbits", d.orbits},
                {"axis_names", d.axis_names}, {"margins", d.margins}, {"moments", d.moments}};
}

void render_human(const DescribeReport& d, std::ostream& out) {
    out << "T=" << d.T << " r=" << d.r << " n=" << d.n << " orbits=" << d.orbits << "\n";
    for (std::size_t t = 0; t < d.margins.size(); ++t) {
        std::string name = t < d.axis_names.size() ? d.axis_names[t] : "axis " + std::to_string(t + 1);
        out << pad(name, 10) << "margin (";
        for (std::size_t j = 0; j < d.margins[t].size(); ++j) out << (j ? ", " : "") << d.margins[t][j];
        out << ")  mean score " << std::fixed << std::setprecision(4) << d.moments[t] << std::defaultfloat << "\n";
    }
}

json to_json(const SimulateResult& result) {
    const StudyConfig& c = result.config;
    json runs = json::array();
    for (const auto& s : result.runs) runs.push_back(symfit::to_json(s));
    return json{{"study", c.kind == StudyKind::additivity ? "additivity" : "calibration"},
                {"generator", c.generator_description},
                {"fspec", c.fspec},
                {"models", c.models},
                {"replications", c.replications},
                {"seed", c.seed},
                {"n_ladder", c.n_ladder},
                {"runs", runs},
                {"failed", result.failed()}};
}

void render_human(const SimulateResult& result, std::ostream& out) {
    const StudyConfig& c = result.config;
    out << (c.kind == StudyKind::additivity ? "Additivity" : "Calibration") << " study, generator "
        << c.generator_description << ", R=" << c.replications << ", seed " << c.seed << "\n";
    for (const auto& s : result.runs) {
        out << "\nn=" << s.sample_size << "  failed replicates " << s.failed_replicates << "\n";
        if (s.mean_abs_residual)
            out << "  mean |G2(S) - G2(OQS[f]) - G2(ME)| = " << *s.mean_abs_residual << " (se " << s.residual_se
                << ")\n";
        for (const auto& st : s.statistics)
            out << "  " << pad(st.name, 14) << "df " << pad(std::to_string(st.df), 4) << "mean " << pad(fixed2(st.mean), 9)
                << "var " << pad(fixed2(st.variance), 9) << "reject " << st.rejection_rate << " (se " << st.rejection_se
                << ")\n";
    }
    if (result.failed()) out << "\nstudy FAILED: replicate failure rate above 1%\n";
}

}  // namespace symfit::cli
