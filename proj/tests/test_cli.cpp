#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "hemsim/formats.hpp"
#include "test_util.hpp"

using namespace hemsim;
namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

CmdResult run_cli(const std::string& args, const fs::path& dir) {
    fs::path out_file = dir / "stdout.txt";
    fs::path err_file = dir / "stderr.txt";
    std::string command = "\"" + cli_path() + "\" " + args + " > " + out_file.string() +
                          " 2> " + err_file.string();
    int status = std::system(command.c_str());
    CmdResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = testutil::read_file(out_file);
    result.err = testutil::read_file(err_file);
    return result;
}

#define REQUIRE_CLI()                                        \
    if (cli_path().empty()) {                                \
        MESSAGE("cli path not provided; skipping");          \
        return;                                              \
    }

std::string part_one_model_text(int precip_levels, int yield_levels, int yield_init) {
    std::string text;
    text += "[elements]\n";
    text += "P " + std::to_string(precip_levels) + " 0\n";
    text += "Y " + std::to_string(yield_levels) + " " + std::to_string(yield_init) + "\n";
    text += "\n[influences]\nP positive 1 Y\n";
    text += "\n[rules]\nY incremental pos=\"P\" mode=proportional\n";
    text += "\n[series]\nP file=\"precip.csv\"\n";
    return text;
}

}  // namespace

TEST_CASE("cli quantize: writes levels and prints thresholds and MSQE") {
    REQUIRE_CLI();
    auto dir = testutil::make_temp_dir("cli_quantize");
    std::string series = "step,value\n";
    for (int i = 0; i < 40; ++i)
        series += std::to_string(i) + "," + std::to_string(i % 10) + ".0\n";
    testutil::write_file(dir / "series.csv", series);

    CmdResult r3 = run_cli("quantize --input " + (dir / "series.csv").string() +
                               " --min 0 --max 9 --levels 3 --out " +
                               (dir / "q3.csv").string(),
                           dir);
    REQUIRE(r3.exit_code == 0);
    CHECK(r3.out.find("thresholds 3,6") != std::string::npos);
    CHECK(r3.out.find("msqe ") != std::string::npos);

    TimeSeries q3 = read_series_file((dir / "q3.csv").string());
    REQUIRE(q3.points.size() == 40);
    for (const auto& [step, level] : q3.points) {
        CHECK(level >= 0);
        CHECK(level <= 2);
    }

    CmdResult r9 = run_cli("quantize --input " + (dir / "series.csv").string() +
                               " --min 0 --max 9 --levels 9 --out " +
                               (dir / "q9.csv").string(),
                           dir);
    REQUIRE(r9.exit_code == 0);

    auto msqe_of = [](const std::string& out) {
        std::size_t pos = out.find("msqe ");
        REQUIRE(pos != std::string::npos);
        return std::stod(out.substr(pos + 5));
    };
    CHECK(msqe_of(r9.out) <= msqe_of(r3.out));
}

TEST_CASE("cli quantize: min >= max is a usage error") {
    REQUIRE_CLI();
    auto dir = testutil::make_temp_dir("cli_quantize_usage");
    testutil::write_file(dir / "series.csv", "step,value\n0,1\n");
    CmdResult r = run_cli("quantize --input " + (dir / "series.csv").string() +
                              " --min 5 --max 2 --levels 3 --out " + (dir / "x.csv").string(),
                          dir);
    CHECK(r.exit_code == 1);
}

TEST_CASE("cli build-lut: reports the full combination space") {
    REQUIRE_CLI();
    auto dir = testutil::make_temp_dir("cli_lut");
    std::string data = "a,b,c,d,e,f,g,y\n";
    data += "0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.2\n";
    data += "0.9,0.9,0.9,0.9,0.9,0.9,0.9,0.8\n";
    testutil::write_file(dir / "rows.csv", data);

    std::string inputs;
    for (char c = 'a'; c <= 'g'; ++c) {
        if (!inputs.empty()) inputs += ',';
        inputs += std::string(1, c) + ":0:1:3";
    }
    CmdResult r = run_cli("build-lut --data " + (dir / "rows.csv").string() + " --inputs " +
                              inputs + " --output y:0:1:3 --out " + (dir / "t.lut").string(),
                          dir);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("total 2187") != std::string::npos);
    CHECK(r.out.find("filled 2") != std::string::npos);

    LutFile file = read_lut_file((dir / "t.lut").string());
    CHECK(file.table->filled() == 2);
    CHECK(file.quantizers.size() == 8);
}

TEST_CASE("cli build-lut: conflicting duplicates are merged and reported") {
    REQUIRE_CLI();
    auto dir = testutil::make_temp_dir("cli_lut_dup");
    testutil::write_file(dir / "rows.csv", "a,y\n0.1,0.05\n0.15,0.95\n0.9,0.5\n");
    CmdResult r = run_cli("build-lut --data " + (dir / "rows.csv").string() +
                              " --inputs a:0:1:3 --output y:0:1:3 --out " +
                              (dir / "t.lut").string(),
                          dir);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("duplicates_merged 1") != std::string::npos);
    CHECK(r.out.find("max_spread 2") != std::string::npos);
}

TEST_CASE("cli simulate: deterministic aggregates, per-run files, step-0 boundary") {
    REQUIRE_CLI();
    auto dir = testutil::make_temp_dir("cli_simulate");
    TimeSeries precip;
    for (int t = 0; t <= 30; ++t) precip.points[t] = (t * 7 + 3) % 9;
    write_series_file((dir / "precip.csv").string(), precip);
    testutil::write_file(dir / "m.txt", part_one_model_text(9, 3, 1));

    const std::string base = "simulate --model " + (dir / "m.txt").string() +
                             " --steps 30 --runs 64 --seed 4711 --out ";
    CmdResult first = run_cli(base + (dir / "out1").string(), dir);
    REQUIRE(first.exit_code == 0);
    CmdResult second = run_cli(base + (dir / "out2").string(), dir);
    REQUIRE(second.exit_code == 0);
    CHECK(testutil::read_file(dir / "out1" / "aggregate.csv") ==
          testutil::read_file(dir / "out2" / "aggregate.csv"));

    CmdResult kept = run_cli(base + (dir / "out3").string() + " --keep-runs", dir);
    REQUIRE(kept.exit_code == 0);
    CHECK(fs::exists(dir / "out3" / "run_0000.csv"));
    CHECK(fs::exists(dir / "out3" / "run_0063.csv"));

    CmdResult zero = run_cli("simulate --model " + (dir / "m.txt").string() +
                                 " --steps 0 --runs 4 --out " + (dir / "out0").string(),
                             dir);
    REQUIRE(zero.exit_code == 0);
    AggregateFile agg = read_aggregate_csv((dir / "out0" / "aggregate.csv").string());
    CHECK(agg.mean.at("Y").size() == 1);  // only step 0
}

TEST_CASE("cli simulate: lookup miss under the error policy exits 3") {
    REQUIRE_CLI();
    auto dir = testutil::make_temp_dir("cli_simulate_miss");
    LookupTable table({{"P", 3}}, {"Y", 3}, MissingPolicy::error);
    table.insert({0}, 1);
    write_lut_file((dir / "t.lut").string(), table);
    TimeSeries precip;
    precip.points = {{0, 0}, {1, 2}};
    write_series_file((dir / "precip.csv").string(), precip);
    std::string text =
        "[elements]\nP 3 0\nY 3 0\n\n[influences]\nP positive 1 Y\n\n"
        "[rules]\nY lookup table=\"t.lut\" policy=error\n\n"
        "[series]\nP file=\"precip.csv\"\n";
    testutil::write_file(dir / "m.txt", text);

    CmdResult r = run_cli("simulate --model " + (dir / "m.txt").string() +
                              " --steps 2 --runs 2 --out " + (dir / "out").string(),
                          dir);
    CHECK(r.exit_code == 3);
    CHECK(r.err.find("(2)") != std::string::npos);  // the offending tuple
}

TEST_CASE("cli validate: perfect match passes, failed threshold exits 2") {
    REQUIRE_CLI();
    auto dir = testutil::make_temp_dir("cli_validate");
    TimeSeries precip;
    for (int t = 0; t <= 20; ++t) precip.points[t] = (t < 10) ? (t % 3) : 2;
    write_series_file((dir / "precip.csv").string(), precip);
    testutil::write_file(dir / "m.txt", part_one_model_text(3, 3, 0));
    CmdResult sim = run_cli("simulate --model " + (dir / "m.txt").string() +
                                " --steps 20 --runs 16 --seed 9 --out " +
                                (dir / "out").string(),
                            dir);
    REQUIRE(sim.exit_code == 0);

    // Reference = the simulated means rounded to levels; identical ordering.
    AggregateFile agg = read_aggregate_csv((dir / "out" / "aggregate.csv").string());
    TimeSeries reference;
    const auto& mean = agg.mean.at("Y");
    for (std::size_t t = 0; t < mean.size(); ++t)
        reference.points[static_cast<int>(t)] =
            static_cast<int>(std::lround(mean[t] * 2));
    write_series_file((dir / "ref.csv").string(), reference);

    CmdResult ok = run_cli("validate --simulated " + (dir / "out" / "aggregate.csv").string() +
                               " --element Y --reference " + (dir / "ref.csv").string(),
                           dir);
    REQUIRE(ok.exit_code == 0);
    CHECK(ok.out.find("spearman") != std::string::npos);
    CHECK(ok.out.find("mae ") != std::string::npos);
    CHECK(ok.out.find("level_match ") != std::string::npos);

    // An impossible threshold must fail with the metric still printed.
    CmdResult bad = run_cli("validate --simulated " +
                                (dir / "out" / "aggregate.csv").string() +
                                " --element Y --reference " + (dir / "ref.csv").string() +
                                " --min-spearman 1.01",
                            dir);
    CHECK(bad.exit_code == 2);
    CHECK(bad.out.find("spearman") != std::string::npos);
}

TEST_CASE("cli aggregate: temporal and spatial pipelines") {
    REQUIRE_CLI();
    auto dir = testutil::make_temp_dir("cli_aggregate");

    std::string daily = "date,precip\n";
    for (int d = 1; d <= 14; ++d) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "2014-01-%02d,1.0\n", d);
        daily += buf;
    }
    testutil::write_file(dir / "daily.csv", daily);
    CmdResult temporal = run_cli("aggregate --input " + (dir / "daily.csv").string() +
                                     " --mode temporal --window weekly --op sum --out " +
                                     (dir / "weekly.csv").string(),
                                 dir);
    REQUIRE(temporal.exit_code == 0);
    CHECK(testutil::read_file(dir / "weekly.csv") ==
          "index,value,partial\n0,7,0\n1,7,0\n");

    testutil::write_file(dir / "cells.csv",
                         "time,cell,value\n2014-01,c1,2.0\n2014-01,c2,4.0\n");
    CmdResult spatial = run_cli("aggregate --input " + (dir / "cells.csv").string() +
                                    " --mode spatial --out " + (dir / "sp.csv").string(),
                                dir);
    REQUIRE(spatial.exit_code == 0);
    CHECK(testutil::read_file(dir / "sp.csv") == "time,value\n2014-01,3\n");

    CmdResult bad = run_cli("aggregate --input " + (dir / "daily.csv").string() +
                                " --mode temporal --window fortnightly --op sum --out " +
                                (dir / "x.csv").string(),
                            dir);
    CHECK(bad.exit_code == 1);
}

TEST_CASE("cli: model validation failures exit 2") {
    REQUIRE_CLI();
    auto dir = testutil::make_temp_dir("cli_model_error");
    testutil::write_file(dir / "m.txt", "[elements]\nP 1 0\n");
    CmdResult r = run_cli("simulate --model " + (dir / "m.txt").string() + " --out " +
                              (dir / "out").string(),
                          dir);
    CHECK(r.exit_code == 2);
}
