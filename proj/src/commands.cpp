#include "lnm/commands.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <ostream>
#include <unordered_map>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "lnm/error.hpp"
#include "lnm/hybrid.hpp"
#include "lnm/parallel.hpp"
#include "lnm/pca.hpp"
#include "lnm/simulate.hpp"
#include "lnm/version.hpp"

namespace lnm {

using nlohmann::json;

namespace {

SimSpec resolve_spec(const std::string& spec) {
    if (std::filesystem::exists(spec)) return read_spec(spec);
    if (spec.size() > 5 && spec.ends_with(".json")) throw ValidationError("cannot open '" + spec + "'");
    return builtin_spec(spec);
}

std::string sample_id(std::size_t index, std::size_t n) {
    const auto width = std::to_string(n).size();
    return fmt::format("S{:0{}d}", index + 1, width);
}

void require_positive_totals(const CountTable& table) {
    for (std::size_t i = 0; i < table.counts.n(); ++i) {
        if (table.counts.row(i).total() <= 0.0) {
            throw ValidationError("sample '" + table.sample_ids[i] + "' (row " + std::to_string(i + 1) +
                                  ") has zero total count");
        }
    }
}

// Labels of `truth` reordered to match `ids`; throws listing the IDs missing on
// either side.
std::vector<std::string> align_labels(const std::vector<std::string>& ids, const LabelTable& truth,
                                      const std::string& left_name, const std::string& right_name) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < truth.sample_ids.size(); ++i) index.emplace(truth.sample_ids[i], i);

    std::vector<std::string> missing_right;
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        auto it = index.find(id);
        if (it == index.end()) {
            missing_right.push_back(id);
        } else {
            out.push_back(truth.labels[it->second]);
            index.erase(it);
        }
    }
    if (missing_right.empty() && index.empty()) return out;

    std::vector<std::string> missing_left;
    for (const auto& id : truth.sample_ids) {
        if (index.count(id) != 0) missing_left.push_back(id);
    }
    auto list = [](const std::vector<std::string>& v) {
        constexpr std::size_t kShown = 10;
        std::string s;
        for (std::size_t i = 0; i < std::min(v.size(), kShown); ++i) s += (i ? ", " : "") + v[i];
        if (v.size() > kShown) s += fmt::format(", ... ({} total)", v.size());
        return s;
    };
    std::string msg = "sample IDs do not match";
    if (!missing_right.empty()) msg += "; missing from " + right_name + ": " + list(missing_right);
    if (!missing_left.empty()) msg += "; missing from " + left_name + ": " + list(missing_left);
    throw ValidationError(msg);
}

ComponentBlock to_block(const MixtureFit& f) {
    ComponentBlock b;
    b.g = f.g;
    b.pi = f.pi;
    for (const auto& c : f.components) {
        b.mu.push_back(c.mu());
        b.sigma.push_back(c.sigma());
    }
    b.bic = f.bic;
    b.trace = f.elbo_trace;
    b.iterations = f.iterations;
    b.converged = f.converged;
    return b;
}

json config_echo(const FitOptions& opts) {
    const FitConfig& c = opts.config;
    return {{"epsilon", c.epsilon},
            {"max_iter", c.max_iter},
            {"gmin", c.gmin},
            {"gmax", c.gmax},
            {"kmeans_restarts", c.kmeans_restarts},
            {"pseudocount", c.pseudocount},
            {"ridge", c.ridge},
            {"shared_xi", c.shared_xi},
            {"hybrid", opts.hybrid},
            {"mcmc_samples", opts.mcmc_samples},
            {"burn_in", opts.burn_in}};
}

std::string num(double x) {
    return fmt::format("{}", x);
}

}  // namespace

std::filesystem::path labels_path_for(const std::filesystem::path& result_path) {
    std::filesystem::path p = result_path;
    p.replace_filename(result_path.stem().string() + ".labels.csv");
    return p;
}

void cmd_simulate(const SimulateOptions& opts, std::ostream& log) {
    SimSpec spec = resolve_spec(opts.spec);
    if (opts.seed) spec.seed = *opts.seed;
    const LabeledDataset data = simulate_dataset(spec);

    CountTable table;
    table.counts = data.counts;
    for (int j = 1; j <= spec.k; ++j) table.taxa.push_back("T" + std::to_string(j));
    table.taxa.emplace_back("Others");
    LabelTable labels;
    const std::size_t n = data.counts.n();
    for (std::size_t i = 0; i < n; ++i) {
        table.sample_ids.push_back(sample_id(i, n));
        labels.sample_ids.push_back(table.sample_ids.back());
        labels.labels.push_back(std::to_string(data.labels[i]));
    }

    std::filesystem::create_directories(opts.out);
    const auto counts_path = opts.out / (opts.format == TableFormat::tsv ? "counts.tsv" : "counts.csv");
    write_count_table(counts_path, table, opts.format);
    write_labels(opts.out / "labels.csv", labels, "true_label");
    write_json(opts.out / "provenance.json",
               {{"spec", spec_to_json(spec)}, {"seed", spec.seed}, {"software_version", kVersion}});
    log << "wrote " << n << " samples to " << counts_path.string() << '\n';
}

ResultDocument cmd_fit(const FitOptions& opts, std::ostream& log) {
    opts.config.validate();
    if (opts.hybrid) {
        if (opts.mcmc_samples < 1) throw ValidationError("--mcmc-samples must be positive");
        if (opts.burn_in < 0) throw ValidationError("--burn-in must be nonnegative");
    }
    const CountTable table = read_count_table(opts.input, opts.format);
    require_positive_totals(table);
    const std::size_t n = table.counts.n();
    if (static_cast<std::size_t>(opts.config.gmax) > n) {
        throw ValidationError("--gmax (" + std::to_string(opts.config.gmax) + ") exceeds the number of samples (" +
                              std::to_string(n) + ")");
    }

    std::optional<std::vector<int>> truth;
    if (opts.truth) {
        const LabelTable t = read_labels(*opts.truth);
        truth = encode_labels(align_labels(table.sample_ids, t, "input", "truth"));
    }

    const int count = opts.config.gmax - opts.config.gmin + 1;
    std::vector<std::optional<MixtureFit>> fits(static_cast<std::size_t>(count));
    std::vector<std::string> errors(static_cast<std::size_t>(count));
    parallel_for(fits.size(), opts.threads, [&](std::size_t idx) {
        const int g = opts.config.gmin + static_cast<int>(idx);
        try {
            fits[idx] = fit(table.counts, g, opts.config);
        } catch (const DegenerateError& e) {
            errors[idx] = e.what();
            spdlog::warn("G={} failed: {}", g, e.what());
        }
    });

    ResultDocument doc;
    doc.schema_version = kSchemaVersion;
    doc.software_version = kVersion;
    doc.seed = opts.config.seed;
    doc.config = config_echo(opts);
    doc.sample_ids = table.sample_ids;

    std::vector<MixtureFit> ok;
    for (std::size_t idx = 0; idx < fits.size(); ++idx) {
        const int g = opts.config.gmin + static_cast<int>(idx);
        if (!fits[idx]) {
            doc.failed.push_back({g, errors[idx]});
            log << fmt::format("G={}  failed: {}\n", g, errors[idx]);
            continue;
        }
        const MixtureFit& f = *fits[idx];
        std::string line = fmt::format("G={}  bic={:.4f}  iterations={}  converged={}", g, f.bic, f.iterations,
                                       f.converged ? "yes" : "no");
        if (truth) {
            const std::vector<int> labels = f.hard_labels();
            line += fmt::format("  ari={:.4f}", ari(labels, *truth));
        }
        log << line << '\n';
        doc.blocks.push_back(to_block(f));
        ok.push_back(std::move(*fits[idx]));
    }
    if (ok.empty()) throw DegenerateError("no G value could be fitted");

    const MixtureFit& best = select_model(ok);
    doc.selected_g = best.g;
    doc.zhat = best.zhat;
    for (int l : best.hard_labels()) doc.labels.push_back(l + 1);
    log << "selected G=" << best.g << '\n';
    if (truth) log << fmt::format("ARI={:.4f}\n", ari(doc.labels, *truth));

    if (opts.hybrid) {
        if (!best.converged) throw Error("selected model did not converge; hybrid refinement needs a converged fit");
        ChainConfig chain;
        chain.r = opts.mcmc_samples;
        chain.burn_in = opts.burn_in;
        chain.seed = opts.config.seed;
        chain.threads = opts.threads;
        const HybridResult h = hybrid_refit(table.counts, best, chain, opts.config.ridge);
        HybridBlock hb;
        hb.pi = h.pi;
        for (const auto& c : h.components) {
            hb.mu.push_back(c.mu());
            hb.sigma.push_back(c.sigma());
        }
        hb.samples = chain.r;
        hb.burn_in = chain.burn_in;
        double acc = 0.0;
        for (double a : h.acceptance) acc += a;
        hb.mean_acceptance = acc / static_cast<double>(h.acceptance.size());
        log << fmt::format("hybrid refinement: mean acceptance {:.3f}\n", hb.mean_acceptance);
        doc.hybrid = std::move(hb);
    }

    if (!opts.out.empty()) {
        write_result(opts.out, doc);
        LabelTable labels;
        labels.sample_ids = doc.sample_ids;
        for (int l : doc.labels) labels.labels.push_back(std::to_string(l));
        write_labels(labels_path_for(opts.out), labels, "label");
    }
    return doc;
}

double cmd_evaluate(const EvaluateOptions& opts, std::ostream& log) {
    LabelTable predicted;
    if (opts.predicted.extension() == ".json") {
        const ResultDocument doc = read_result(opts.predicted);
        predicted.sample_ids = doc.sample_ids;
        for (int l : doc.labels) predicted.labels.push_back(std::to_string(l));
    } else {
        predicted = read_labels(opts.predicted);
    }
    const LabelTable truth = read_labels(opts.truth);
    const std::vector<std::string> aligned = align_labels(predicted.sample_ids, truth, "predictions", "truth");
    const double value = ari(encode_labels(predicted.labels), encode_labels(aligned));
    log << fmt::format("{:.4f}\n", value);
    return value;
}

void cmd_export_viz(const ExportOptions& opts, std::ostream& log) {
    const ResultDocument doc = read_result(opts.result);
    const CountTable table = read_count_table(opts.input, opts.format);
    require_positive_totals(table);

    LabelTable predicted;
    predicted.sample_ids = doc.sample_ids;
    for (int l : doc.labels) predicted.labels.push_back(std::to_string(l));
    const std::vector<std::string> labels = align_labels(table.sample_ids, predicted, "input", "result");

    double pseudocount = 1.0;
    if (doc.config.contains("pseudocount") && doc.config["pseudocount"].is_number()) {
        pseudocount = doc.config["pseudocount"].get<double>();
    }

    const std::size_t n = table.counts.n();
    const Eigen::Index k = table.counts.k();
    Eigen::MatrixXd alr_coords(static_cast<Eigen::Index>(n), k);
    for (std::size_t i = 0; i < n; ++i) {
        alr_coords.row(static_cast<Eigen::Index>(i)) =
            counts_to_latent(table.counts.row(i), pseudocount).eta.head(k).transpose();
    }

    std::optional<PcaResult> pcs;
    if (k < 2) {
        spdlog::warn("export-viz: K < 2, principal components omitted");
        log << "warning: K < 2, principal components omitted\n";
    } else if (n < 2) {
        spdlog::warn("export-viz: fewer than two samples, principal components omitted");
        log << "warning: fewer than two samples, principal components omitted\n";
    } else {
        pcs = pca(alr_coords, 2);
    }

    std::vector<std::string> header{"sample_id", "label"};
    for (const auto& t : table.taxa) header.push_back("rel_" + t);
    for (Eigen::Index j = 0; j < k; ++j) header.push_back("alr_" + table.taxa[static_cast<std::size_t>(j)]);
    if (pcs) {
        header.emplace_back("PC1");
        header.emplace_back("PC2");
    }

    if (opts.out.has_parent_path()) std::filesystem::create_directories(opts.out.parent_path());
    std::ofstream out(opts.out, std::ios::binary);
    if (!out) throw Error("cannot write '" + opts.out.string() + "'");
    out << join_record(header, TableFormat::csv) << '\n';
    std::vector<std::string> row;
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const CountVector& w = table.counts.row(i);
        row.assign({table.sample_ids[i], labels[i]});
        for (Eigen::Index j = 0; j <= k; ++j) row.push_back(num(w[j] / w.total()));
        for (Eigen::Index j = 0; j < k; ++j) row.push_back(num(alr_coords(ii, j)));
        if (pcs) {
            row.push_back(num(pcs->scores(ii, 0)));
            row.push_back(num(pcs->scores(ii, 1)));
        }
        out << join_record(row, TableFormat::csv) << '\n';
    }
    log << "wrote " << n << " rows to " << opts.out.string() << '\n';
}

int exit_code_for(const std::exception_ptr& error) {
    if (!error) return 0;
    try {
        std::rethrow_exception(error);
    } catch (const ValidationError&) {
        return 2;
    } catch (...) {
        return 1;
    }
}

}  // namespace lnm
