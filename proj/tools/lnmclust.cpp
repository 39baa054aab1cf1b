// lnmclust: clustering of compositional count data with logistic normal
// multinomial mixtures.

#include <cstdint>
#include <exception>
#include <functional>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "lnm/commands.hpp"
#include "lnm/log.hpp"
#include "lnm/version.hpp"

namespace {

int run(const std::function<void()>& body) {
    try {
        body();
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return lnm::exit_code_for(std::current_exception());
    }
}

}  // namespace

int main(int argc, char** argv) {
    lnm::init_logging();

    CLI::App app{"Model-based clustering of compositional count data"};
    app.set_version_flag("--version", std::string(lnm::kVersion));
    app.require_subcommand(1);

    std::string format = "tsv";

    lnm::SimulateOptions sim;
    std::uint64_t sim_seed = 0;
    auto* simulate = app.add_subcommand("simulate", "Generate a labelled synthetic dataset");
    simulate->add_option("--spec", sim.spec, "Spec JSON file or built-in name (sim1, sim2, grid_k10_n200, ...)")
        ->required();
    simulate->add_option("--out", sim.out, "Output directory")->required();
    auto* seed_opt = simulate->add_option("--seed", sim_seed, "Override the spec seed");
    simulate->add_option("--format", format, "Count table format")->check(CLI::IsMember({"tsv", "csv"}));

    lnm::FitOptions fit;
    std::string truth;
    auto* fitcmd = app.add_subcommand("fit", "Fit mixtures over a range of G and select by BIC");
    fitcmd->add_option("--input", fit.input, "Count table")->required();
    fitcmd->add_option("--out", fit.out, "Result JSON path")->required();
    fitcmd->add_option("--gmin", fit.config.gmin, "Smallest G")->capture_default_str();
    fitcmd->add_option("--gmax", fit.config.gmax, "Largest G")->capture_default_str();
    fitcmd->add_option("--epsilon", fit.config.epsilon, "Aitken tolerance")->capture_default_str();
    fitcmd->add_option("--max-iter", fit.config.max_iter, "Iteration cap")->capture_default_str();
    fitcmd->add_option("--seed", fit.config.seed, "Root seed")->capture_default_str();
    fitcmd->add_option("--threads", fit.threads, "Worker threads (0 = all cores)")->capture_default_str();
    fitcmd->add_option("--pseudocount", fit.config.pseudocount, "Zero replacement for initialization")
        ->capture_default_str();
    fitcmd->add_flag("--hybrid", fit.hybrid, "Refine the selected model with MCMC moments");
    fitcmd->add_option("--mcmc-samples", fit.mcmc_samples, "Retained samples per chain")->capture_default_str();
    fitcmd->add_option("--burn-in", fit.burn_in, "Discarded samples per chain")->capture_default_str();
    fitcmd->add_option("--truth", truth, "Labels CSV; adds ARI to the summary");
    fitcmd->add_option("--format", format, "Count table format")->check(CLI::IsMember({"tsv", "csv"}));

    lnm::EvaluateOptions eval;
    auto* evaluate = app.add_subcommand("evaluate", "Adjusted Rand index of predicted against true labels");
    evaluate->add_option("--input", eval.predicted, "Predicted labels CSV or result JSON")->required();
    evaluate->add_option("--truth", eval.truth, "True labels CSV")->required();

    lnm::ExportOptions viz;
    auto* export_viz = app.add_subcommand("export-viz", "Per-sample CSV for plotting");
    export_viz->add_option("--result", viz.result, "Result JSON")->required();
    export_viz->add_option("--input", viz.input, "Count table")->required();
    export_viz->add_option("--out", viz.out, "Output CSV")->required();
    export_viz->add_option("--format", format, "Count table format")->check(CLI::IsMember({"tsv", "csv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (*simulate) {
        return run([&] {
            if (*seed_opt) sim.seed = sim_seed;
            sim.format = lnm::parse_format(format);
            lnm::cmd_simulate(sim, std::cout);
        });
    }
    if (*fitcmd) {
        return run([&] {
            if (!truth.empty()) fit.truth = truth;
            fit.format = lnm::parse_format(format);
            lnm::cmd_fit(fit, std::cout);
        });
    }
    if (*evaluate) {
        return run([&] { lnm::cmd_evaluate(eval, std::cout); });
    }
    return run([&] {
        viz.format = lnm::parse_format(format);
        lnm::cmd_export_viz(viz, std::cout);
    });
}
