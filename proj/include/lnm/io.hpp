#ifndef LNM_IO_HPP
#define LNM_IO_HPP

// File formats.
//
// Count tables: one header row of taxon names, one row per sample. The first
// column holds sample IDs and the last column is the reference taxon.
// Label files: CSV with a header and two columns, sample ID and label.
// Result documents: versioned JSON.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lnm/compositions.hpp"
#include "lnm/simulate.hpp"

namespace lnm {

enum class TableFormat { tsv, csv };

/// "tsv" or "csv"; anything else is a ValidationError.
TableFormat parse_format(const std::string& name);

struct CountTable {
    std::vector<std::string> sample_ids;
    std::vector<std::string> taxa;  // K+1 names, reference last
    CountMatrix counts;
};

/// Splits one delimited line. CSV fields may be double-quoted with "" as an
/// escaped quote; TSV fields are taken verbatim.
std::vector<std::string> split_record(const std::string& line, TableFormat format);
std::string join_record(const std::vector<std::string>& fields, TableFormat format);

CountTable parse_count_table(std::istream& in, TableFormat format);
CountTable read_count_table(const std::filesystem::path& path, TableFormat format);
void write_count_table(std::ostream& out, const CountTable& table, TableFormat format);
void write_count_table(const std::filesystem::path& path, const CountTable& table, TableFormat format);

struct LabelTable {
    std::vector<std::string> sample_ids;
    std::vector<std::string> labels;
};

LabelTable parse_labels(std::istream& in);
LabelTable read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const LabelTable& table, const std::string& label_header);

/// Maps arbitrary label strings to 0-based integers in order of first
/// appearance.
std::vector<int> encode_labels(const std::vector<std::string>& labels);

nlohmann::json spec_to_json(const SimSpec& spec);
/// Throws ValidationError naming the missing or malformed field.
SimSpec spec_from_json(const nlohmann::json& j);
SimSpec read_spec(const std::filesystem::path& path);

struct ComponentBlock {
    int g = 0;
    Eigen::VectorXd pi;
    std::vector<Eigen::VectorXd> mu;
    std::vector<Eigen::MatrixXd> sigma;
    double bic = 0.0;
    std::vector<double> trace;
    int iterations = 0;
    bool converged = false;
};

struct HybridBlock {
    Eigen::VectorXd pi;
    std::vector<Eigen::VectorXd> mu;
    std::vector<Eigen::MatrixXd> sigma;
    int samples = 0;
    int burn_in = 0;
    double mean_acceptance = 0.0;
};

struct FailedFit {
    int g = 0;
    std::string error;
};

struct ResultDocument {
    std::string schema_version;
    std::string software_version;
    std::uint64_t seed = 0;
    nlohmann::json config;
    std::vector<ComponentBlock> blocks;
    std::vector<FailedFit> failed;
    int selected_g = 0;
    std::vector<std::string> sample_ids;
    Eigen::MatrixXd zhat;
    std::vector<int> labels;  // 1-based
    std::optional<HybridBlock> hybrid;

    const ComponentBlock& selected() const;
};

nlohmann::json result_to_json(const ResultDocument& doc);
/// Rejects documents whose schema major version differs from ours, and
/// documents whose selected_g has no block.
ResultDocument result_from_json(const nlohmann::json& j);
void write_result(const std::filesystem::path& path, const ResultDocument& doc);
ResultDocument read_result(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace lnm

#endif
