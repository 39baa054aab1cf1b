#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lnm/error.hpp"
#include "lnm/io.hpp"
#include "lnm/version.hpp"

using namespace lnm;

namespace {

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "lnm_test_io";
    std::filesystem::create_directories(dir);
    return dir / name;
}

CountTable parse(const std::string& text, TableFormat format = TableFormat::tsv) {
    std::istringstream in(text);
    return parse_count_table(in, format);
}

ResultDocument sample_document() {
    ResultDocument doc;
    doc.schema_version = kSchemaVersion;
    doc.software_version = kVersion;
    doc.seed = 42;
    doc.config = {{"epsilon", 1e-3}, {"pseudocount", 1.0}};
    ComponentBlock b;
    b.g = 2;
    b.pi = Eigen::Vector2d(0.6, 0.4);
    b.mu = {Eigen::Vector2d(0.1, 1.0 / 3.0), Eigen::Vector2d(-2.5, 5e-300)};
    b.sigma = {Eigen::Matrix2d::Identity() * 0.7, Eigen::Matrix2d::Identity() * 1.1};
    b.bic = 1234.5678901234567;
    b.trace = {-700.1, -650.0 / 3.0, -649.999999999};
    b.iterations = 3;
    b.converged = true;
    doc.blocks.push_back(b);
    doc.failed.push_back({3, "degenerate initialization"});
    doc.selected_g = 2;
    doc.sample_ids = {"a", "b", "c"};
    doc.zhat.resize(3, 2);
    doc.zhat << 0.1, 0.9, 1.0 / 3.0, 2.0 / 3.0, 0.999999999999, 1e-12;
    doc.labels = {2, 2, 1};
    return doc;
}

}  // namespace

TEST_CASE("count table parsing") {
    const CountTable t = parse("sample\tA\tB\tOthers\ns1\t1\t2\t3\ns2\t0\t0\t9\n");
    CHECK(t.sample_ids == std::vector<std::string>{"s1", "s2"});
    CHECK(t.taxa == std::vector<std::string>{"A", "B", "Others"});
    CHECK(t.counts.n() == 2);
    CHECK(t.counts.k() == 2);
    CHECK(t.counts.row(1).total() == 9);

    const CountTable c = parse("id,\"Genus, sp.\",Others\r\nx,4,5\r\n", TableFormat::csv);
    CHECK(c.taxa[0] == "Genus, sp.");
    CHECK(c.counts.row(0).values()[1] == 5);

    CHECK_THROWS_AS(parse("id\tA\tB\ns1\t1\t-2\n"), ValidationError);
    CHECK_THROWS_AS(parse("id\tA\tB\ns1\t1\t2.5\n"), ValidationError);
    CHECK_THROWS_AS(parse("id\tA\tB\ns1\t1\n"), ValidationError);
    CHECK_THROWS_AS(parse("id\tA\tB\ns1\t1\t2\ns1\t3\t4\n"), ValidationError);
    CHECK_THROWS_AS(parse("id\tA\ns1\t1\n"), ValidationError);
    CHECK_THROWS_AS(parse(""), ValidationError);
    CHECK_THROWS_WITH(parse("id\tA\tB\ns1\t1\tx\n"), doctest::Contains("s1"));
}

TEST_CASE("count table round trip") {
    const CountTable t = parse("sample_id\tA\tB\tOthers\ns1\t1\t2\t3\ns2\t10\t0\t90\n");
    for (auto format : {TableFormat::tsv, TableFormat::csv}) {
        std::ostringstream out;
        write_count_table(out, t, format);
        std::istringstream in(out.str());
        const CountTable back = parse_count_table(in, format);
        CHECK(back.sample_ids == t.sample_ids);
        CHECK(back.taxa == t.taxa);
        for (std::size_t i = 0; i < 2; ++i) CHECK(back.counts.row(i).values() == t.counts.row(i).values());
    }
    CHECK(split_record(join_record({"a,b", "q\"uote", "plain"}, TableFormat::csv), TableFormat::csv) ==
          std::vector<std::string>{"a,b", "q\"uote", "plain"});
    CHECK_THROWS_AS(parse_format("xlsx"), ValidationError);
}

TEST_CASE("labels") {
    std::istringstream in("sample_id,label\ns1,healthy\ns2,\"ill, mild\"\ns3,healthy\n");
    const LabelTable t = parse_labels(in);
    CHECK(t.labels == std::vector<std::string>{"healthy", "ill, mild", "healthy"});
    CHECK(encode_labels(t.labels) == std::vector<int>{0, 1, 0});

    const auto path = scratch("labels.csv");
    write_labels(path, t, "label");
    const LabelTable back = read_labels(path);
    CHECK(back.sample_ids == t.sample_ids);
    CHECK(back.labels == t.labels);

    std::istringstream dup("id,label\ns1,a\ns1,b\n");
    CHECK_THROWS_AS(parse_labels(dup), ValidationError);
}

TEST_CASE("spec json") {
    const SimSpec s = builtin_spec("sim2");
    const SimSpec back = spec_from_json(spec_to_json(s));
    CHECK(back.g == s.g);
    CHECK(back.sizes == s.sizes);
    for (int c = 0; c < s.g; ++c) {
        CHECK(back.mus[static_cast<std::size_t>(c)] == s.mus[static_cast<std::size_t>(c)]);
        CHECK(back.sigmas[static_cast<std::size_t>(c)] == s.sigmas[static_cast<std::size_t>(c)]);
    }
    CHECK(back.total_lo == 5000);

    nlohmann::json j = spec_to_json(builtin_spec("sim1"));
    j["sigmas"][0][0][0] = -1.0;
    CHECK_THROWS_WITH_AS(spec_from_json(j), doctest::Contains("sigma not positive definite"), ValidationError);
    j = spec_to_json(builtin_spec("sim1"));
    j.erase("mus");
    CHECK_THROWS_WITH_AS(spec_from_json(j), doctest::Contains("mus"), ValidationError);
}

TEST_CASE("result document round trip") {
    const ResultDocument doc = sample_document();
    const auto path = scratch("result.json");
    write_result(path, doc);
    const ResultDocument back = read_result(path);

    CHECK(back.seed == 42);
    CHECK(back.selected_g == 2);
    CHECK(back.sample_ids == doc.sample_ids);
    CHECK(back.labels == doc.labels);
    CHECK(back.zhat == doc.zhat);
    CHECK(((back.zhat.rowwise().sum().array() - 1.0).abs() < 1e-9).all());
    const ComponentBlock& b = back.selected();
    CHECK(b.bic == doc.blocks[0].bic);
    CHECK(b.trace == doc.blocks[0].trace);
    CHECK(b.mu[1] == doc.blocks[0].mu[1]);
    CHECK(b.sigma[0] == doc.blocks[0].sigma[0]);
    CHECK(back.failed.size() == 1);
    CHECK(back.failed[0].error == "degenerate initialization");
    CHECK_FALSE(back.hybrid.has_value());
    CHECK(back.config == doc.config);

    // Serialization is stable.
    CHECK(result_to_json(back).dump(2) == result_to_json(doc).dump(2));
}

TEST_CASE("result document validation") {
    nlohmann::json j = result_to_json(sample_document());
    j["schema_version"] = "2.0.0";
    CHECK_THROWS_AS(result_from_json(j), ValidationError);

    j = result_to_json(sample_document());
    j["schema_version"] = "1.7.3";
    CHECK_NOTHROW(result_from_json(j));

    j = result_to_json(sample_document());
    j["selected_g"] = 4;
    CHECK_THROWS_AS(result_from_json(j), ValidationError);

    j = result_to_json(sample_document());
    j["labels"].push_back(1);
    CHECK_THROWS_AS(result_from_json(j), ValidationError);

    CHECK_THROWS_AS(read_result(scratch("does_not_exist.json")), ValidationError);
}
