#ifndef LNM_COMMANDS_HPP
#define LNM_COMMANDS_HPP

// Workflows behind the lnmclust subcommands. Each command throws
// ValidationError for bad input and other lnm::Error subclasses for runtime
// failures; exit_code_for maps them to the process exit status.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "lnm/io.hpp"
#include "lnm/mixture.hpp"

namespace lnm {

struct SimulateOptions {
    std::string spec;  // path to a JSON spec, or a built-in name
    std::filesystem::path out;
    std::optional<std::uint64_t> seed;
    TableFormat format = TableFormat::tsv;
};

struct FitOptions {
    std::filesystem::path input;
    std::filesystem::path out;  // result JSON; labels go to <stem>.labels.csv beside it
    FitConfig config;
    unsigned threads = 0;  // 0 = hardware concurrency
    bool hybrid = false;
    int mcmc_samples = 10000;
    int burn_in = 2000;
    std::optional<std::filesystem::path> truth;
    TableFormat format = TableFormat::tsv;
};

struct EvaluateOptions {
    std::filesystem::path predicted;  // labels CSV or result JSON
    std::filesystem::path truth;
};

struct ExportOptions {
    std::filesystem::path result;
    std::filesystem::path input;
    std::filesystem::path out;
    TableFormat format = TableFormat::tsv;
};

void cmd_simulate(const SimulateOptions& opts, std::ostream& log);
ResultDocument cmd_fit(const FitOptions& opts, std::ostream& log);
double cmd_evaluate(const EvaluateOptions& opts, std::ostream& log);
void cmd_export_viz(const ExportOptions& opts, std::ostream& log);

/// Path of the labels CSV written next to a result document.
std::filesystem::path labels_path_for(const std::filesystem::path& result_path);

/// 0 for no exception, 2 for validation failures, 1 otherwise.
int exit_code_for(const std::exception_ptr& error);

}  // namespace lnm

#endif
