#pragma once
// Command implementations behind the symfit executable. Each command returns
// a report value; rendering and exit-code mapping live in main.cpp.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "symfit/io.hpp"

namespace symfit::cli {

struct ParamEntry {
    std::string label;  // "beta_2", "psi(1,1,2)", "delta_1"
    double value = 0.0;
    bool operator==(const ParamEntry&) const = default;
};

struct ModelSummary {
    std::string tag;
    std::string label;  // display name, e.g. "POQS"
    double g_squared = 0.0;
    int df = 0;
    double p_value = 1.0;
    bool converged = false;
    int iterations = 0;
    double max_constraint_residual = 0.0;
    std::vector<ParamEntry> params;
    std::vector<std::string> warnings;
    bool significant() const { return p_value < 0.05; }
    bool operator==(const ModelSummary&) const = default;
};

struct ConditionalSummary {
    std::string label;  // "S|POQS"
    double statistic = 0.0;
    int df = 0;
    double p_value = 1.0;
    bool significant() const { return p_value < 0.05; }
    bool operator==(const ConditionalSummary&) const = default;
};

struct PartitionSummary {
    std::string fspec;
    double g2_s = 0.0;
    double g2_oqsf = 0.0;
    double g2_me = 0.0;
    double additivity_gap = 0.0;  // G2(S) - G2(OQS[f]) - G2(ME)
    bool operator==(const PartitionSummary&) const = default;
};

struct Provenance {
    std::string input;
    std::string sha256;
    std::string version;
    nlohmann::json config;
    bool operator==(const Provenance&) const = default;
};

struct AnalysisReport {
    std::string command;
    int T = 0;
    int r = 0;
    long long n = 0;
    std::vector<ModelSummary> models;
    std::vector<ConditionalSummary> conditional;
    std::optional<PartitionSummary> partition;
    Provenance provenance;

    bool all_converged() const;
    const ModelSummary* find(const std::string& tag) const;
    bool operator==(const AnalysisReport&) const = default;
};

nlohmann::json to_json(const AnalysisReport& report);
AnalysisReport report_from_json(const nlohmann::json& j);
/// Goodness-of-fit listing: statistics to 2 decimals, '*' when p < 0.05.
void render_human(const AnalysisReport& report, std::ostream& out);

struct FitOptions {
    std::filesystem::path input;
    std::vector<std::string> models{"s", "poqs", "mh", "me"};
    std::string scores = "equal";  // "equal" or a path to a scores file
    int reference_axis = 1;
};

AnalysisReport cmd_fit(const FitOptions& opts);
AnalysisReport cmd_partition(const std::filesystem::path& input, const std::string& fspec,
                             const std::string& scores = "equal");

struct DescribeReport {
    int T = 0;
    int r = 0;
    long long n = 0;
    std::size_t orbits = 0;
    std::vector<std::string> axis_names;
    std::vector<std::vector<long long>> margins;  // per axis, counts by category
    std::vector<double> moments;                  // per axis, mean score
};

DescribeReport cmd_describe(const std::filesystem::path& input, const std::string& scores = "equal");
nlohmann::json to_json(const DescribeReport& report);
void render_human(const DescribeReport& report, std::ostream& out);

struct SimulateResult {
    StudyConfig config;
    std::vector<SimSummary> runs;  // one per n in the ladder
    bool failed() const;
};

/// seed_override replaces the configured seed when present.
SimulateResult cmd_simulate(const std::filesystem::path& config, std::optional<std::uint64_t> seed_override = {},
                            int threads = 0);
nlohmann::json to_json(const SimulateResult& result);
void render_human(const SimulateResult& result, std::ostream& out);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string model_label(const std::string& tag);
std::vector<std::string> split_csv(const std::string& text);

}  // namespace symfit::cli
