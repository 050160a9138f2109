#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "symfit/cli.hpp"
#include "symfit/error.hpp"

namespace {

enum Exit { ok = 0, failure = 1, input = 2, convergence = 3, singular = 4 };

int exit_code(const symfit::Error& e) {
    switch (e.kind()) {
        case symfit::ErrorKind::input:
        case symfit::ErrorKind::domain: return input;
        case symfit::ErrorKind::convergence: return convergence;
        case symfit::ErrorKind::singular: return singular;
        case symfit::ErrorKind::inconsistent: return failure;
    }
    return failure;
}

struct Output {
    std::string path;
    std::string format = "human";
};

template <typename Report>
void emit(const Report& report, const Output& out) {
    auto write = [&](std::ostream& os) {
        if (out.format == "machine")
            os << symfit::cli::to_json(report).dump(2) << "\n";
        else
            symfit::cli::render_human(report, os);
    };
    if (out.path.empty()) {
        write(std::cout);
        return;
    }
    std::ofstream file(out.path);
    if (!file) throw symfit::InputError("cannot write " + out.path);
    write(file);
}

void add_output(CLI::App* cmd, Output& out) {
    cmd->add_option("--out", out.path, "Write the report to PATH instead of stdout");
    cmd->add_option("--format", out.format, "Report format")->check(CLI::IsMember({"human", "machine"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Symmetry-family model fitting for square contingency tables"};
    app.require_subcommand(1);

    symfit::cli::FitOptions fit_opts;
    std::string models_csv = "s,poqs,mh,me";
    Output fit_out;
    auto* fit = app.add_subcommand("fit", "Fit a list of models and report G2, df and parameters");
    fit->add_option("--input", fit_opts.input, "Table file")->required();
    fit->add_option("--models", models_csv, "Comma-separated model tags")->capture_default_str();
    fit->add_option("--scores", fit_opts.scores, "equal or a scores file")->capture_default_str();
    fit->add_option("--ref-axis", fit_opts.reference_axis, "Axis whose beta is fixed at 0")->capture_default_str();
    add_output(fit, fit_out);

    std::string part_input, part_fspec = "pearson", part_scores = "equal";
    Output part_out;
    auto* part = app.add_subcommand("partition", "G2(S) = G2(S|OQS[f]) + G2(OQS[f]) decomposition");
    part->add_option("--input", part_input, "Table file")->required();
    part->add_option("--fspec", part_fspec, "kl, pearson or a registered name")->capture_default_str();
    part->add_option("--scores", part_scores, "equal or a scores file")->capture_default_str();
    add_output(part, part_out);

    std::string sim_config;
    std::optional<std::uint64_t> sim_seed;
    Output sim_out;
    auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo study from a configuration file");
    sim->add_option("--input", sim_config, "Study configuration file")->required();
    sim->add_option("--seed", sim_seed, "Override the configured seed");
    add_output(sim, sim_out);

    std::string desc_input, desc_scores = "equal";
    Output desc_out;
    auto* desc = app.add_subcommand("describe", "Dimensions, margins and orbit count of a table");
    desc->add_option("--input", desc_input, "Table file")->required();
    desc->add_option("--scores", desc_scores, "equal or a scores file")->capture_default_str();
    add_output(desc, desc_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? ok : input;
    }

    try {
        if (*fit) {
            fit_opts.models = symfit::cli::split_csv(models_csv);
            auto report = symfit::cli::cmd_fit(fit_opts);
            emit(report, fit_out);
            return report.all_converged() ? ok : convergence;
        }
        if (*part) {
            auto report = symfit::cli::cmd_partition(part_input, part_fspec, part_scores);
            emit(report, part_out);
            return report.all_converged() ? ok : convergence;
        }
        if (*sim) {
            auto result = symfit::cli::cmd_simulate(sim_config, sim_seed);
            emit(result, sim_out);
            return result.failed() ? convergence : ok;
        }
        if (*desc) {
            emit(symfit::cli::cmd_describe(desc_input, desc_scores), desc_out);
            return ok;
        }
    } catch (const symfit::Error& e) {
        std::cerr << "symfit: " << e.what() << "\n";
        return exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "symfit: " << e.what() << "\n";
        return failure;
    }
    return ok;
}
