#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "hemsim/error.hpp"
#include "hemsim/formats.hpp"
#include "test_util.hpp"

using namespace hemsim;
namespace fs = std::filesystem;

TEST_CASE("inline series: parse/format round trip") {
    TimeSeries series = parse_inline_series("0:2,5:1,10:0");
    REQUIRE(series.points.size() == 3);
    CHECK(series.points.at(5) == 1);
    CHECK(format_inline_series(series) == "0:2,5:1,10:0");
    CHECK_THROWS_AS(parse_inline_series(""), ValidationError);
    CHECK_THROWS_AS(parse_inline_series("0:2,0:1"), ValidationError);
    CHECK_THROWS_AS(parse_inline_series("0-2"), ValidationError);
}

TEST_CASE("series files: write then read back") {
    auto dir = testutil::make_temp_dir("series");
    TimeSeries series;
    series.points = {{0, 2}, {3, 0}, {7, 1}};
    write_series_file((dir / "s.csv").string(), series);
    CHECK(read_series_file((dir / "s.csv").string()) == series);

    testutil::write_file(dir / "bad.csv", "index,level\n0,1\n");
    CHECK_THROWS_AS(read_series_file((dir / "bad.csv").string()), ValidationError);
    CHECK_THROWS_AS(read_series_file((dir / "missing.csv").string()), ValidationError);
}

TEST_CASE("quantizer specs: name:min:max:levels") {
    auto [name, q] = parse_quantizer_spec("precip:1.3:8.3:3");
    CHECK(name == "precip");
    CHECK(q.min == 1.3);
    CHECK(q.max == 8.3);
    CHECK(q.levels == 3);
    CHECK_THROWS_AS(parse_quantizer_spec("precip:1.3:8.3"), ValidationError);
    CHECK_THROWS_AS(parse_quantizer_spec("precip:8.3:1.3:3"), ValidationError);
}

TEST_CASE("lookup-table files: round trip with embedded quantizers") {
    auto dir = testutil::make_temp_dir("lut");
    LookupTable table({{"T", 3}, {"P", 3}}, {"Y", 9}, MissingPolicy::nearest);
    table.insert({0, 0}, 0);
    table.insert({0, 2}, 3);
    table.insert({2, 1}, 8);

    std::map<std::string, Quantizer> quantizers;
    quantizers.emplace("T", make_uniform_thresholds(21.3, 30.6, 3));
    quantizers.emplace("Y", make_uniform_thresholds(0.5, 2.3, 9));

    const std::string path = (dir / "t.lut").string();
    write_lut_file(path, table, quantizers);
    LutFile back = read_lut_file(path);
    CHECK(*back.table == table);
    REQUIRE(back.quantizers.count("T") == 1);
    CHECK(back.quantizers.at("T").thresholds == quantizers.at("T").thresholds);
    CHECK(back.quantizers.at("Y").levels == 9);
}

TEST_CASE("lookup-table files: malformed inputs are rejected") {
    auto dir = testutil::make_temp_dir("lut_bad");
    auto path = [&](const char* name) { return (dir / name).string(); };

    testutil::write_file(dir / "unknown_key.lut",
                         "inputs a:3\noutput y:3\nbogus 1\nentries 0\n");
    CHECK_THROWS_AS(read_lut_file(path("unknown_key.lut")), ValidationError);

    testutil::write_file(dir / "count.lut", "inputs a:3\noutput y:3\nentries 2\n0,1\n");
    CHECK_THROWS_AS(read_lut_file(path("count.lut")), ValidationError);

    testutil::write_file(dir / "no_output.lut", "inputs a:3\nentries 0\n");
    CHECK_THROWS_AS(read_lut_file(path("no_output.lut")), ValidationError);

    testutil::write_file(dir / "dup.lut", "inputs a:3\noutput y:3\nentries 2\n0,1\n0,2\n");
    CHECK_THROWS_AS(read_lut_file(path("dup.lut")), ValidationError);

    testutil::write_file(dir / "range.lut", "inputs a:3\noutput y:3\nentries 1\n5,1\n");
    CHECK_THROWS_AS(read_lut_file(path("range.lut")), ValidationError);
}

namespace {

// A Part-I style model plus a lookup rule, exercising every section.
ModelDocument fixture_document(const fs::path& dir) {
    LookupTable table({{"T", 3}, {"P", 3}}, {"C", 3}, MissingPolicy::hold);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) table.insert({a, b}, std::min(a, b));
    write_lut_file((dir / "crop.lut").string(), table);

    TimeSeries precip;
    precip.points = {{0, 2}, {1, 1}, {2, 0}, {3, 1}};
    write_series_file((dir / "precip.csv").string(), precip);

    std::string text =
        "# fixture model\n"
        "[elements]\n"
        "P 3 0\n"
        "T 3 1\n"
        "Y 3 1\n"
        "C 3 0\n"
        "\n"
        "[influences]\n"
        "P positive 2 Y\n"
        "T negative 1 Y\n"
        "T positive 1 C\n"
        "P positive 1 C\n"
        "\n"
        "[rules]\n"
        "Y incremental pos=\"2*P + min(P, T)\" neg=\"T\" mode=step\n"
        "C lookup table=\"crop.lut\" policy=nearest inputs=\"T,P\"\n"
        "\n"
        "[series]\n"
        "P file=\"precip.csv\"\n"
        "T inline=\"0:1,4:2\"\n"
        "\n"
        "[scenario]\n"
        "steps 12\n"
        "runs 40\n"
        "seed 777\n"
        "init Y 2\n";
    testutil::write_file(dir / "model.txt", text);
    return parse_model_file((dir / "model.txt").string());
}

}  // namespace

TEST_CASE("model files: parse, serialize, parse again — identical model") {
    auto dir = testutil::make_temp_dir("model_roundtrip");
    ModelDocument doc = fixture_document(dir);

    CHECK(doc.model.size() == 4);
    CHECK(doc.scenario.steps == 12);
    CHECK(doc.scenario.runs == 40);
    CHECK(doc.scenario.master_seed == 777);
    CHECK(doc.scenario.initial_overrides.at("Y") == 2);
    CHECK(doc.scenario.series.at("P").points.at(0) == 2);
    const auto& rule = std::get<LookupRule>(doc.model.rules().at("C"));
    CHECK(rule.policy == MissingPolicy::nearest);
    CHECK(rule.input_elements == std::vector<std::string>{"T", "P"});

    std::string serialized = serialize_model_document(doc);
    testutil::write_file(dir / "round.txt", serialized);
    ModelDocument back = parse_model_file((dir / "round.txt").string());

    CHECK(models_equivalent(doc.model, back.model));
    CHECK(back.scenario.steps == doc.scenario.steps);
    CHECK(back.scenario.runs == doc.scenario.runs);
    CHECK(back.scenario.master_seed == doc.scenario.master_seed);
    CHECK(back.scenario.initial_overrides == doc.scenario.initial_overrides);
    CHECK(back.scenario.series == doc.scenario.series);

    // Serialization is a fixed point once canonical.
    CHECK(serialize_model_document(back) == serialized);
}

TEST_CASE("model files: unknown sections and keys are rejected") {
    auto dir = testutil::make_temp_dir("model_bad");
    auto parse_text = [&](const std::string& text) {
        testutil::write_file(dir / "m.txt", text);
        return parse_model_file((dir / "m.txt").string());
    };

    CHECK_THROWS_AS(parse_text("[wat]\n"), ValidationError);
    CHECK_THROWS_AS(parse_text("P 3 0\n"), ValidationError);  // content before a section
    CHECK_THROWS_AS(parse_text("[elements]\nP 3\n"), ValidationError);
    CHECK_THROWS_AS(parse_text("[elements]\nP 3 0\n[rules]\nP wat\n"), ValidationError);
    CHECK_THROWS_AS(parse_text("[elements]\nP 3 0\n[scenario]\nwalltime 5\n"),
                    ValidationError);
    CHECK_THROWS_AS(parse_text("[elements]\nP 3 0\n[series]\nP magic=\"x\"\n"),
                    ValidationError);
    // Rule on an element with no incoming influences fails model validation.
    CHECK_THROWS_AS(parse_text("[elements]\nP 3 0\n[rules]\nP incremental pos=\"P\"\n"),
                    ValidationError);
    // Series level outside the element's range fails scenario validation.
    CHECK_THROWS_AS(parse_text("[elements]\nP 3 0\n[series]\nP inline=\"0:7\"\n"),
                    ValidationError);
}

TEST_CASE("aggregate csv: write and read back") {
    std::map<std::string, UpdateRule> rules;
    IncrementalRule rule;
    rule.positive = parse_rule_expression("P");
    rules.emplace("Y", std::move(rule));
    Model m = build_model({{"P", 3, 2}, {"Y", 3, 1}}, {{"P", "Y", Sign::positive, 1}},
                          std::move(rules));
    Scenario scenario;
    scenario.steps = 4;
    scenario.runs = 10;
    TraceSet set = simulate_ensemble(m, scenario);

    auto dir = testutil::make_temp_dir("aggregate");
    std::ostringstream out;
    write_aggregate_csv(out, m, set);
    testutil::write_file(dir / "agg.csv", out.str());

    AggregateFile file = read_aggregate_csv((dir / "agg.csv").string());
    REQUIRE(file.elements == std::vector<std::string>{"P", "Y"});
    CHECK(file.levels.at("Y") == 3);
    REQUIRE(file.mean.at("Y").size() == 5);
    for (int t = 0; t <= 4; ++t) {
        CHECK(file.mean.at("Y")[t] == set.mean[m.index_of("Y")][t]);
        CHECK(file.stddev.at("Y")[t] == set.stddev[m.index_of("Y")][t]);
    }
}

TEST_CASE("trace csv: wide per-run layout") {
    Model m = build_model({{"P", 3, 2}}, {}, {});
    Scenario scenario;
    scenario.steps = 2;
    Trace trace = simulate_run(m, scenario, 5);
    std::ostringstream out;
    write_trace_csv(out, m, trace);
    CHECK(out.str() == "step,P\n0,2\n1,2\n2,2\n");
}
