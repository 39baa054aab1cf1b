#include "lnm/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "lnm/error.hpp"
#include "lnm/version.hpp"

namespace lnm {

using nlohmann::json;

namespace {

char delimiter(TableFormat format) {
    return format == TableFormat::tsv ? '\t' : ',';
}

bool next_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

std::optional<std::int64_t> parse_count(const std::string& s) {
    std::int64_t value = 0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || s.empty() || value < 0) return std::nullopt;
    return value;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    return out;
}

json vector_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json matrix_json(const Eigen::MatrixXd& m) {
    json a = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vector_json(m.row(i).transpose()));
    return a;
}

const json& field(const json& j, const char* name, const std::string& context) {
    if (!j.is_object() || !j.contains(name)) throw ValidationError(context + ": missing field '" + name + "'");
    return j.at(name);
}

Eigen::VectorXd vector_from(const json& j, const std::string& what) {
    if (!j.is_array()) throw ValidationError(what + " must be an array of numbers");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ValidationError(what + " must be an array of numbers");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

Eigen::MatrixXd matrix_from(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw ValidationError(what + " must be a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const Eigen::VectorXd first = vector_from(j[0], what);
    Eigen::MatrixXd m(rows, first.size());
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Eigen::VectorXd r = vector_from(j[static_cast<std::size_t>(i)], what);
        if (r.size() != first.size()) throw ValidationError(what + " rows must have equal length");
        m.row(i) = r.transpose();
    }
    return m;
}

template <typename T>
T scalar_from(const json& j, const std::string& what) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ValidationError(what + " has the wrong type");
    }
}

int major_version(const std::string& version) {
    const auto dot = version.find('.');
    int major = -1;
    const std::string head = version.substr(0, dot);
    auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), major);
    if (ec != std::errc() || ptr != head.data() + head.size()) return -1;
    return major;
}

}  // namespace

TableFormat parse_format(const std::string& name) {
    if (name == "tsv") return TableFormat::tsv;
    if (name == "csv") return TableFormat::csv;
    throw ValidationError("unknown format '" + name + "' (expected tsv or csv)");
}

std::vector<std::string> split_record(const std::string& line, TableFormat format) {
    const char delim = delimiter(format);
    std::vector<std::string> fields;
    std::string current;
    if (format == TableFormat::tsv) {
        std::istringstream ss(line);
        while (std::getline(ss, current, delim)) fields.push_back(current);
        if (!line.empty() && line.back() == delim) fields.emplace_back();
        return fields;
    }
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                current += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                current += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == delim) {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current += c;
        }
    }
    if (quoted) throw ValidationError("unterminated quote in '" + line + "'");
    fields.push_back(std::move(current));
    return fields;
}

std::string join_record(const std::vector<std::string>& fields, TableFormat format) {
    const char delim = delimiter(format);
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) out += delim;
        const std::string& f = fields[i];
        if (format == TableFormat::tsv) {
            if (f.find_first_of("\t\n") != std::string::npos) {
                throw ValidationError("field '" + f + "' cannot be written to TSV");
            }
            out += f;
        } else if (f.find_first_of(",\"\n") != std::string::npos) {
            out += '"';
            for (char c : f) {
                if (c == '"') out += '"';
                out += c;
            }
            out += '"';
        } else {
            out += f;
        }
    }
    return out;
}

CountTable parse_count_table(std::istream& in, TableFormat format) {
    std::string line;
    if (!next_line(in, line)) throw ValidationError("count table is empty");
    const std::vector<std::string> header = split_record(line, format);
    if (header.size() < 3) throw ValidationError("count table needs a sample ID column and at least 2 taxa");

    CountTable table;
    table.taxa.assign(header.begin() + 1, header.end());
    const std::size_t width = header.size();

    std::unordered_set<std::string> seen;
    std::vector<CountVector> rows;
    std::vector<std::int64_t> values(width - 1);
    std::size_t line_no = 1;
    while (next_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_record(line, format);
        const std::string where = "line " + std::to_string(line_no);
        if (fields.size() != width) {
            throw ValidationError(where + ": expected " + std::to_string(width) + " fields, found " +
                                  std::to_string(fields.size()));
        }
        if (fields[0].empty()) throw ValidationError(where + ": empty sample ID");
        if (!seen.insert(fields[0]).second) throw ValidationError(where + ": duplicate sample ID '" + fields[0] + "'");
        for (std::size_t c = 1; c < width; ++c) {
            const auto v = parse_count(fields[c]);
            if (!v) {
                throw ValidationError(where + " (sample '" + fields[0] + "', taxon '" + header[c] +
                                      "'): not a nonnegative integer: '" + fields[c] + "'");
            }
            values[c - 1] = *v;
        }
        table.sample_ids.push_back(fields[0]);
        rows.emplace_back(std::span<const std::int64_t>(values));
    }
    if (rows.empty()) throw ValidationError("count table has no samples");
    table.counts = CountMatrix(std::move(rows));
    return table;
}

CountTable read_count_table(const std::filesystem::path& path, TableFormat format) {
    std::ifstream in = open_input(path);
    try {
        return parse_count_table(in, format);
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void write_count_table(std::ostream& out, const CountTable& table, TableFormat format) {
    std::vector<std::string> fields{"sample_id"};
    fields.insert(fields.end(), table.taxa.begin(), table.taxa.end());
    out << join_record(fields, format) << '\n';
    for (std::size_t i = 0; i < table.counts.n(); ++i) {
        fields.assign(1, table.sample_ids.at(i));
        const Eigen::VectorXd& w = table.counts.row(i).values();
        for (Eigen::Index j = 0; j < w.size(); ++j) fields.push_back(std::to_string(static_cast<std::int64_t>(w[j])));
        out << join_record(fields, format) << '\n';
    }
}

void write_count_table(const std::filesystem::path& path, const CountTable& table, TableFormat format) {
    std::ofstream out = open_output(path);
    write_count_table(out, table, format);
}

LabelTable parse_labels(std::istream& in) {
    std::string line;
    if (!next_line(in, line)) throw ValidationError("label file is empty");
    if (split_record(line, TableFormat::csv).size() != 2) {
        throw ValidationError("label file header must have two columns");
    }
    LabelTable table;
    std::unordered_set<std::string> seen;
    std::size_t line_no = 1;
    while (next_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_record(line, TableFormat::csv);
        const std::string where = "line " + std::to_string(line_no);
        if (fields.size() != 2) throw ValidationError(where + ": expected 2 fields");
        if (!seen.insert(fields[0]).second) throw ValidationError(where + ": duplicate sample ID '" + fields[0] + "'");
        table.sample_ids.push_back(fields[0]);
        table.labels.push_back(fields[1]);
    }
    return table;
}

LabelTable read_labels(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    try {
        return parse_labels(in);
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void write_labels(const std::filesystem::path& path, const LabelTable& table, const std::string& label_header) {
    std::ofstream out = open_output(path);
    out << join_record({"sample_id", label_header}, TableFormat::csv) << '\n';
    for (std::size_t i = 0; i < table.sample_ids.size(); ++i) {
        out << join_record({table.sample_ids[i], table.labels.at(i)}, TableFormat::csv) << '\n';
    }
}

std::vector<int> encode_labels(const std::vector<std::string>& labels) {
    std::unordered_map<std::string, int> codes;
    std::vector<int> out;
    out.reserve(labels.size());
    for (const auto& l : labels) {
        auto [it, inserted] = codes.emplace(l, static_cast<int>(codes.size()));
        out.push_back(it->second);
    }
    return out;
}

json spec_to_json(const SimSpec& spec) {
    json j;
    j["name"] = spec.name;
    j["g"] = spec.g;
    j["k"] = spec.k;
    j["sizes"] = spec.sizes;
    j["mus"] = json::array();
    for (const auto& m : spec.mus) j["mus"].push_back(vector_json(m));
    j["sigmas"] = json::array();
    for (const auto& s : spec.sigmas) j["sigmas"].push_back(matrix_json(s));
    j["total_range"] = {spec.total_lo, spec.total_hi};
    j["seed"] = spec.seed;
    return j;
}

SimSpec spec_from_json(const json& j) {
    const std::string ctx = "spec";
    if (!j.is_object()) throw ValidationError("spec must be a JSON object");
    SimSpec s;
    if (j.contains("name")) s.name = scalar_from<std::string>(j.at("name"), "name");
    s.g = scalar_from<int>(field(j, "g", ctx), "g");
    s.k = scalar_from<int>(field(j, "k", ctx), "k");

    const json& sizes = field(j, "sizes", ctx);
    if (!sizes.is_array()) throw ValidationError("sizes must be an array");
    for (const auto& v : sizes) s.sizes.push_back(scalar_from<int>(v, "sizes"));

    const json& mus = field(j, "mus", ctx);
    if (!mus.is_array()) throw ValidationError("mus must be an array");
    for (std::size_t c = 0; c < mus.size(); ++c) s.mus.push_back(vector_from(mus[c], "mus[" + std::to_string(c) + "]"));

    const json& sigmas = field(j, "sigmas", ctx);
    if (!sigmas.is_array()) throw ValidationError("sigmas must be an array");
    for (std::size_t c = 0; c < sigmas.size(); ++c) {
        s.sigmas.push_back(matrix_from(sigmas[c], "sigmas[" + std::to_string(c) + "]"));
    }

    if (j.contains("total_range")) {
        const json& r = j.at("total_range");
        if (!r.is_array() || r.size() != 2) throw ValidationError("total_range must be [low, high]");
        s.total_lo = scalar_from<std::int64_t>(r[0], "total_range");
        s.total_hi = scalar_from<std::int64_t>(r[1], "total_range");
    }
    if (j.contains("seed")) s.seed = scalar_from<std::uint64_t>(j.at("seed"), "seed");
    s.validate();
    return s;
}

SimSpec read_spec(const std::filesystem::path& path) {
    return spec_from_json(read_json(path));
}

const ComponentBlock& ResultDocument::selected() const {
    for (const auto& b : blocks) {
        if (b.g == selected_g) return b;
    }
    throw ValidationError("result document has no block for selected_g " + std::to_string(selected_g));
}

json result_to_json(const ResultDocument& doc) {
    json j;
    j["schema_version"] = doc.schema_version.empty() ? std::string(kSchemaVersion) : doc.schema_version;
    j["software_version"] = doc.software_version.empty() ? std::string(kVersion) : doc.software_version;
    j["seed"] = doc.seed;
    j["config"] = doc.config.is_null() ? json::object() : doc.config;
    j["blocks"] = json::array();
    for (const auto& b : doc.blocks) {
        json jb;
        jb["g"] = b.g;
        jb["pi"] = vector_json(b.pi);
        jb["mu"] = json::array();
        for (const auto& m : b.mu) jb["mu"].push_back(vector_json(m));
        jb["sigma"] = json::array();
        for (const auto& s : b.sigma) jb["sigma"].push_back(matrix_json(s));
        jb["bic"] = b.bic;
        jb["trace"] = b.trace;
        jb["iterations"] = b.iterations;
        jb["converged"] = b.converged;
        j["blocks"].push_back(std::move(jb));
    }
    j["failed"] = json::array();
    for (const auto& f : doc.failed) j["failed"].push_back({{"g", f.g}, {"error", f.error}});
    j["selected_g"] = doc.selected_g;
    j["sample_ids"] = doc.sample_ids;
    j["zhat"] = matrix_json(doc.zhat);
    j["labels"] = doc.labels;
    if (doc.hybrid) {
        const HybridBlock& h = *doc.hybrid;
        json jh;
        jh["pi"] = vector_json(h.pi);
        jh["mu"] = json::array();
        for (const auto& m : h.mu) jh["mu"].push_back(vector_json(m));
        jh["sigma"] = json::array();
        for (const auto& s : h.sigma) jh["sigma"].push_back(matrix_json(s));
        jh["samples"] = h.samples;
        jh["burn_in"] = h.burn_in;
        jh["mean_acceptance"] = h.mean_acceptance;
        j["hybrid"] = std::move(jh);
    }
    return j;
}

ResultDocument result_from_json(const json& j) {
    const std::string ctx = "result";
    ResultDocument doc;
    doc.schema_version = scalar_from<std::string>(field(j, "schema_version", ctx), "schema_version");
    if (major_version(doc.schema_version) != major_version(kSchemaVersion)) {
        throw ValidationError("unsupported result schema version " + doc.schema_version);
    }
    if (j.contains("software_version")) doc.software_version = scalar_from<std::string>(j.at("software_version"), "software_version");
    if (j.contains("seed")) doc.seed = scalar_from<std::uint64_t>(j.at("seed"), "seed");
    if (j.contains("config")) doc.config = j.at("config");

    const json& blocks = field(j, "blocks", ctx);
    if (!blocks.is_array()) throw ValidationError("blocks must be an array");
    for (const auto& jb : blocks) {
        ComponentBlock b;
        b.g = scalar_from<int>(field(jb, "g", "block"), "g");
        const std::string where = "block g=" + std::to_string(b.g);
        b.pi = vector_from(field(jb, "pi", where), where + " pi");
        for (const auto& m : field(jb, "mu", where)) b.mu.push_back(vector_from(m, where + " mu"));
        for (const auto& s : field(jb, "sigma", where)) b.sigma.push_back(matrix_from(s, where + " sigma"));
        b.bic = scalar_from<double>(field(jb, "bic", where), "bic");
        b.trace = scalar_from<std::vector<double>>(field(jb, "trace", where), "trace");
        b.iterations = scalar_from<int>(field(jb, "iterations", where), "iterations");
        b.converged = scalar_from<bool>(field(jb, "converged", where), "converged");
        doc.blocks.push_back(std::move(b));
    }
    if (j.contains("failed")) {
        for (const auto& f : j.at("failed")) {
            doc.failed.push_back({scalar_from<int>(field(f, "g", "failed"), "g"),
                                  scalar_from<std::string>(field(f, "error", "failed"), "error")});
        }
    }
    doc.selected_g = scalar_from<int>(field(j, "selected_g", ctx), "selected_g");
    doc.sample_ids = scalar_from<std::vector<std::string>>(field(j, "sample_ids", ctx), "sample_ids");
    doc.zhat = matrix_from(field(j, "zhat", ctx), "zhat");
    doc.labels = scalar_from<std::vector<int>>(field(j, "labels", ctx), "labels");
    if (j.contains("hybrid")) {
        const json& jh = j.at("hybrid");
        HybridBlock h;
        h.pi = vector_from(field(jh, "pi", "hybrid"), "hybrid pi");
        for (const auto& m : field(jh, "mu", "hybrid")) h.mu.push_back(vector_from(m, "hybrid mu"));
        for (const auto& s : field(jh, "sigma", "hybrid")) h.sigma.push_back(matrix_from(s, "hybrid sigma"));
        h.samples = scalar_from<int>(field(jh, "samples", "hybrid"), "samples");
        h.burn_in = scalar_from<int>(field(jh, "burn_in", "hybrid"), "burn_in");
        h.mean_acceptance = scalar_from<double>(field(jh, "mean_acceptance", "hybrid"), "mean_acceptance");
        doc.hybrid = std::move(h);
    }

    doc.selected();
    const auto n = doc.sample_ids.size();
    if (static_cast<std::size_t>(doc.zhat.rows()) != n || doc.labels.size() != n) {
        throw ValidationError("result: sample_ids, zhat and labels disagree in length");
    }
    if (doc.zhat.cols() != doc.selected_g) throw ValidationError("result: zhat must have selected_g columns");
    return doc;
}

void write_result(const std::filesystem::path& path, const ResultDocument& doc) {
    write_json(path, result_to_json(doc));
}

ResultDocument read_result(const std::filesystem::path& path) {
    try {
        return result_from_json(read_json(path));
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out = open_output(path);
    out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": invalid JSON: " + e.what());
    }
}

}  // namespace lnm
