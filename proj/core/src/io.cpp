#include "symfit/io.hpp"

#include <fstream>
#include <sstream>

#include "symfit/constraints.hpp"
#include "symfit/error.hpp"
#include "symfit/solver.hpp"

namespace symfit {

using nlohmann::json;

namespace {

std::string where(const std::string& source, const std::string& field) { return source + ": field '" + field + "'"; }

const json& require(const json& doc, const std::string& field, const std::string& source) {
    auto it = doc.find(field);
    if (it == doc.end()) throw InputError(where(source, field) + " is missing");
    return *it;
}

std::int64_t as_integer(const json& v, const std::string& field, const std::string& source) {
    if (!v.is_number_integer()) throw InputError(where(source, field) + " must be an integer");
    return v.get<std::int64_t>();
}

std::vector<double> as_reals(const json& v, const std::string& field, const std::string& source) {
    if (!v.is_array()) throw InputError(where(source, field) + " must be an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number())
            throw InputError(where(source, field) + " entry " + std::to_string(i) + " is not a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

std::optional<ScoreVector> scores_field(const json& doc, int r, const std::string& source) {
    auto it = doc.find("scores");
    if (it == doc.end() || it->is_null()) return std::nullopt;
    auto u = as_reals(*it, "scores", source);
    if (static_cast<int>(u.size()) != r)
        throw InputError(where(source, "scores") + " has " + std::to_string(u.size()) + " entries, expected r = " +
                         std::to_string(r));
    try {
        return ScoreVector(std::move(u));
    } catch (const Error& e) {
        throw InputError(where(source, "scores") + ": " + e.what());
    }
}

TableDocument table_from_json(const json& doc, const std::string& source) {
    if (!doc.is_object()) throw InputError(source + ": table document must be a JSON object");
    const auto T = as_integer(require(doc, "T", source), "T", source);
    const auto r = as_integer(require(doc, "r", source), "r", source);
    if (T < 2) throw InputError(where(source, "T") + " must be at least 2");
    if (r < 2) throw InputError(where(source, "r") + " must be at least 2");
    const json& c = require(doc, "counts", source);
    if (!c.is_array()) throw InputError(where(source, "counts") + " must be an array");
    std::vector<std::int64_t> counts;
    counts.reserve(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (!c[i].is_number_integer())
            throw InputError(where(source, "counts") + " entry " + std::to_string(i) + " is not an integer");
        counts.push_back(c[i].get<std::int64_t>());
    }
    std::size_t expected = lattice_size(static_cast<int>(r), static_cast<int>(T));
    if (counts.size() != expected)
        throw InputError(where(source, "counts") + " has " + std::to_string(counts.size()) + " entries, expected " +
                         std::to_string(expected));
    std::optional<Table> table;
    try {
        table.emplace(static_cast<int>(T), static_cast<int>(r), std::move(counts));
    } catch (const Error& e) {
        throw InputError(where(source, "counts") + ": " + e.what());
    }
    TableDocument out{*table, scores_field(doc, static_cast<int>(r), source), {}};
    if (auto it = doc.find("axis_names"); it != doc.end() && !it->is_null()) {
        if (!it->is_array() || static_cast<std::int64_t>(it->size()) != T)
            throw InputError(where(source, "axis_names") + " must be an array of T strings");
        for (const auto& name : *it) {
            if (!name.is_string()) throw InputError(where(source, "axis_names") + " must hold strings");
            out.axis_names.push_back(name.get<std::string>());
        }
    }
    return out;
}

ProbVector generator_from_json(const json& g, const std::filesystem::path& base_dir, const std::string& source,
                               std::string& description) {
    if (!g.is_object()) throw InputError(where(source, "generator") + " must be an object");
    if (auto t = g.find("table"); t != g.end()) {
        if (!t->is_string()) throw InputError(where(source, "generator.table") + " must be a path string");
        std::filesystem::path path = t->get<std::string>();
        if (path.is_relative()) path = base_dir / path;
        TableDocument doc = load_table_document(path);
        std::string model = "s";
        if (auto m = g.find("model"); m != g.end()) {
            if (!m->is_string()) throw InputError(where(source, "generator.model") + " must be a string");
            model = m->get<std::string>();
        }
        double pseudo = 0.0;
        if (auto p = g.find("pseudocount"); p != g.end()) {
            if (!p->is_number() || p->get<double>() < 0.0)
                throw InputError(where(source, "generator.pseudocount") + " must be a nonnegative number");
            pseudo = p->get<double>();
        }
        const Table& table = doc.table;
        Eigen::VectorXd weights = table.count_vector().array() + pseudo;
        ProbVector base = ProbVector::normalized(table.lattice_ptr(), weights);
        description = model + " fit of " + t->get<std::string>();
        if (pseudo > 0.0) description += " (+" + json(pseudo).dump() + " per cell)";
        if (model == "s") return symmetrize(base);
        if (pseudo > 0.0)
            throw InputError(where(source, "generator.pseudocount") + " is only supported with model 's'");
        ScoreVector u = doc.scores.value_or(ScoreVector::equal_interval(table.categories()));
        ConstraintSystem cs = build_model(model, table.categories(), table.axes(), u);
        FitResult f = fit(table, cs);
        if (!f.converged) throw ConvergenceError(source + ": generator fit of model '" + model + "' did not converge");
        return f.pi_hat;
    }
    if (auto p = g.find("probs"); p != g.end()) {
        const auto T = as_integer(require(g, "T", source), "generator.T", source);
        const auto r = as_integer(require(g, "r", source), "generator.r", source);
        auto probs = as_reals(*p, "generator.probs", source);
        if (T < 2 || r < 2) throw InputError(where(source, "generator") + " needs T >= 2 and r >= 2");
        if (probs.size() != lattice_size(static_cast<int>(r), static_cast<int>(T)))
            throw InputError(where(source, "generator.probs") + " must have r^T entries");
        description = "explicit probabilities";
        try {
            return ProbVector(Lattice::get(static_cast<int>(r), static_cast<int>(T)),
                              Eigen::Map<Eigen::VectorXd>(probs.data(), static_cast<Eigen::Index>(probs.size())));
        } catch (const Error& e) {
            throw InputError(where(source, "generator.probs") + ": " + e.what());
        }
    }
    throw InputError(where(source, "generator") + " needs either 'table' or 'probs'");
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, column = 1;
        std::size_t end = std::min(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw InputError(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": malformed JSON");
    }
}

TableDocument parse_table_document(const std::string& text, const std::string& source) {
    return table_from_json(parse_json(text, source), source);
}

TableDocument load_table_document(const std::filesystem::path& path) {
    return parse_table_document(read_file(path), path.string());
}

json table_document_to_json(const TableDocument& doc) {
    const Table& t = doc.table;
    json j{{"T", t.axes()}, {"r", t.categories()}, {"counts", t.counts()}};
    if (doc.scores) j["scores"] = doc.scores->values();
    if (!doc.axis_names.empty()) j["axis_names"] = doc.axis_names;
    return j;
}

ScoreVector load_scores(const std::filesystem::path& path, int r) {
    const std::string source = path.string();
    json j = parse_json(read_file(path), source);
    if (j.is_array()) j = json{{"scores", j}};
    if (!j.is_object()) throw InputError(source + ": expected an array of scores");
    auto u = scores_field(j, r, source);
    if (!u) throw InputError(where(source, "scores") + " is missing");
    return *u;
}

SimConfig StudyConfig::sim_config(std::int64_t n) const {
    SimConfig cfg{generator};
    cfg.sample_size = n;
    cfg.replications = replications;
    cfg.seed = seed;
    cfg.fspec = fspec;
    cfg.models = models;
    cfg.scores = scores;
    return cfg;
}

StudyConfig parse_study_config(const std::string& text, const std::filesystem::path& base_dir,
                               const std::string& source) {
    json doc = parse_json(text, source);
    if (!doc.is_object()) throw InputError(source + ": study configuration must be a JSON object");

    StudyKind kind = StudyKind::additivity;
    if (auto s = doc.find("study"); s != doc.end()) {
        if (*s == "additivity") kind = StudyKind::additivity;
        else if (*s == "calibration") kind = StudyKind::calibration;
        else throw InputError(where(source, "study") + " must be \"additivity\" or \"calibration\"");
    }

    std::string description;
    ProbVector generator = generator_from_json(require(doc, "generator", source), base_dir, source, description);
    StudyConfig cfg{generator};
    cfg.kind = kind;
    cfg.generator_description = description;

    if (auto f = doc.find("fspec"); f != doc.end()) {
        if (!f->is_string()) throw InputError(where(source, "fspec") + " must be a string");
        cfg.fspec = f->get<std::string>();
        try {
            (void)fspec_by_name(cfg.fspec);
        } catch (const Error& e) {
            throw InputError(where(source, "fspec") + ": " + e.what());
        }
    }

    const json& ladder = require(doc, "n_ladder", source);
    if (!ladder.is_array() || ladder.empty()) throw InputError(where(source, "n_ladder") + " must be a nonempty array");
    for (const auto& n : ladder) {
        auto v = as_integer(n, "n_ladder", source);
        if (v < 1) throw InputError(where(source, "n_ladder") + " entries must be at least 1");
        cfg.n_ladder.push_back(v);
    }

    auto reps = as_integer(require(doc, "replications", source), "replications", source);
    if (reps < 1) throw InputError(where(source, "replications") + " must be at least 1");
    cfg.replications = static_cast<int>(reps);

    const json& seed = require(doc, "seed", source);
    if (!seed.is_number_integer() || (seed.is_number_integer() && !seed.is_number_unsigned() && seed.get<std::int64_t>() < 0))
        throw InputError(where(source, "seed") + " must be a nonnegative integer");
    cfg.seed = seed.get<std::uint64_t>();

    if (auto m = doc.find("models"); m != doc.end()) {
        if (!m->is_array()) throw InputError(where(source, "models") + " must be an array of model tags");
        for (const auto& tag : *m) {
            if (!tag.is_string()) throw InputError(where(source, "models") + " must hold strings");
            try {
                (void)parse_model_tag(tag.get<std::string>());
            } catch (const Error& e) {
                throw InputError(where(source, "models") + ": " + e.what());
            }
            cfg.models.push_back(tag.get<std::string>());
        }
    }
    if (kind == StudyKind::calibration && cfg.models.empty())
        throw InputError(where(source, "models") + " is required for a calibration study");

    cfg.scores = scores_field(doc, generator.lattice().categories(), source);
    return cfg;
}

StudyConfig load_study_config(const std::filesystem::path& path) {
    return parse_study_config(read_file(path), path.parent_path(), path.string());
}

json to_json(const StatisticSummary& s) {
    return json{{"name", s.name},
                {"df", s.df},
                {"count", s.count},
                {"mean", s.mean},
                {"variance", s.variance},
                {"rejection_rate", s.rejection_rate},
                {"rejection_se", s.rejection_se}};
}

json to_json(const SimSummary& s) {
    json stats = json::array();
    for (const auto& st : s.statistics) stats.push_back(to_json(st));
    json j{{"sample_size", s.sample_size},
           {"replications", s.replications},
           {"statistics", stats},
           {"failures",
            {{"nonconvergence", s.nonconvergence_failures},
             {"singularity", s.singularity_failures},
             {"domain", s.domain_failures},
             {"replicates", s.failed_replicates},
             {"rate", s.failure_rate()},
             {"study_failed", s.failed()}}}};
    if (s.mean_abs_residual) {
        j["mean_abs_residual"] = *s.mean_abs_residual;
        j["residual_se"] = s.residual_se;
    }
    return j;
}

SimSummary sim_summary_from_json(const json& j) {
    SimSummary s;
    try {
        s.sample_size = j.at("sample_size").get<std::int64_t>();
        s.replications = j.at("replications").get<int>();
        for (const auto& st : j.at("statistics")) {
            StatisticSummary x;
            x.name = st.at("name").get<std::string>();
            x.df = st.at("df").get<int>();
            x.count = st.at("count").get<std::size_t>();
            x.mean = st.at("mean").get<double>();
            x.variance = st.at("variance").get<double>();
            x.rejection_rate = st.at("rejection_rate").get<double>();
            x.rejection_se = st.at("rejection_se").get<double>();
            s.statistics.push_back(x);
        }
        const json& f = j.at("failures");
        s.nonconvergence_failures = f.at("nonconvergence").get<int>();
        s.singularity_failures = f.at("singularity").get<int>();
        s.domain_failures = f.at("domain").get<int>();
        s.failed_replicates = f.at("replicates").get<int>();
        if (j.contains("mean_abs_residual")) {
            s.mean_abs_residual = j.at("mean_abs_residual").get<double>();
            s.residual_se = j.at("residual_se").get<double>();
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed simulation summary: ") + e.what());
    }
    return s;
}

}  // namespace symfit
