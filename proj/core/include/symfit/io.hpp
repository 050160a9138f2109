#pragma once
// JSON documents: contingency tables, study configurations and simulation
// summaries. Parse failures raise InputError with line/column or field context.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "symfit/simulate.hpp"
#include "symfit/table.hpp"

namespace symfit {

struct TableDocument {
    Table table;
    std::optional<ScoreVector> scores;
    std::vector<std::string> axis_names;  // empty when absent
};

TableDocument parse_table_document(const std::string& text, const std::string& source = "<input>");
TableDocument load_table_document(const std::filesystem::path& path);
nlohmann::json table_document_to_json(const TableDocument& doc);

/// Scores file: either a bare array of r reals or {"scores": [...]}.
ScoreVector load_scores(const std::filesystem::path& path, int r);

enum class StudyKind { additivity, calibration };

struct StudyConfig {
    ProbVector generator;
    StudyKind kind = StudyKind::additivity;
    std::string generator_description;
    std::string fspec = "kl";
    std::vector<std::int64_t> n_ladder;
    int replications = 1;
    std::uint64_t seed = 1;
    std::vector<std::string> models;
    std::optional<ScoreVector> scores;

    SimConfig sim_config(std::int64_t n) const;
};

/// Relative table paths inside the config resolve against base_dir.
StudyConfig parse_study_config(const std::string& text, const std::filesystem::path& base_dir,
                               const std::string& source = "<config>");
StudyConfig load_study_config(const std::filesystem::path& path);

nlohmann::json to_json(const StatisticSummary& s);
nlohmann::json to_json(const SimSummary& s);
SimSummary sim_summary_from_json(const nlohmann::json& j);

/// Parses JSON text, translating syntax errors into InputError with line and column.
nlohmann::json parse_json(const std::string& text, const std::string& source);
std::string read_file(const std::filesystem::path& path);

}  // namespace symfit
