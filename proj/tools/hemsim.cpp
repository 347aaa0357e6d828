// Command-line front end: quantization, lookup-table construction,
// stochastic simulation, trace validation, and dataset aggregation.
//
// Exit codes: 0 success, 1 usage, 2 validation/data error,
// 3 simulation-time error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hemsim/engine.hpp"
#include "hemsim/error.hpp"
#include "hemsim/formats.hpp"
#include "hemsim/ingest.hpp"
#include "hemsim/lookup_table.hpp"
#include "hemsim/model.hpp"
#include "hemsim/quantizer.hpp"

namespace fs = std::filesystem;
using namespace hemsim;

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Reads a value series: CSV with a header, first column integer step/index,
// second column real value. Extra columns (e.g. a partial flag) are ignored.
std::vector<std::pair<int, double>> read_value_series(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path + ": empty file");

    std::vector<std::pair<int, double>> series;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream row(line);
        std::string step_text, value_text;
        if (!std::getline(row, step_text, ',')) continue;
        if (!std::getline(row, value_text, ',') || value_text.empty())
            throw ValidationError(path + ": line " + std::to_string(line_no) +
                                  " has no value (missing windows must be filled or dropped)");
        try {
            series.emplace_back(std::stoi(step_text), std::stod(value_text));
        } catch (const std::exception&) {
            throw ValidationError(path + ": line " + std::to_string(line_no) +
                                  " is not 'step,value'");
        }
    }
    if (series.empty()) throw ValidationError(path + ": no data rows");
    return series;
}

struct QuantizeArgs {
    std::string input, out;
    double min = 0.0, max = 0.0;
    int levels = 0;
};

void run_quantize(const QuantizeArgs& args) {
    Quantizer q = make_uniform_thresholds(args.min, args.max, args.levels);
    auto series = read_value_series(args.input);

    std::size_t clamped = 0;
    TimeSeries quantized = quantize_series(q, series, &clamped);
    write_series_file(args.out, quantized);

    std::vector<double> values;
    values.reserve(series.size());
    for (const auto& [step, v] : series) values.push_back(v);

    std::cout << "thresholds ";
    for (std::size_t i = 0; i < q.thresholds.size(); ++i)
        std::cout << (i ? "," : "") << fmt_double(q.thresholds[i]);
    std::cout << "\nmsqe " << fmt_double(msqe(q, values)) << '\n';
    if (clamped > 0)
        std::cerr << "warning: " << clamped << " value(s) outside [" << fmt_double(args.min)
                  << ", " << fmt_double(args.max) << "] clamped to the extreme levels\n";
}

struct BuildLutArgs {
    std::string data, inputs, output, out;
    std::string policy = "hold";
    bool serial = false;
};

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    return parts;
}

void run_build_lut(const BuildLutArgs& args) {
    std::vector<std::string> input_names;
    std::vector<Quantizer> input_quantizers;
    std::map<std::string, Quantizer> quantizer_meta;
    for (const std::string& spec : split_list(args.inputs)) {
        auto [name, q] = parse_quantizer_spec(spec);
        input_names.push_back(name);
        input_quantizers.push_back(q);
        quantizer_meta.emplace(name, std::move(q));
    }
    auto [output_name, output_quantizer] = parse_quantizer_spec(args.output);
    quantizer_meta.emplace(output_name, output_quantizer);

    std::vector<ColumnSpec> schema;
    for (const std::string& name : input_names)
        schema.push_back({name, ColumnSpec::Kind::numeric});
    schema.push_back({output_name, ColumnSpec::Kind::numeric});
    Dataset dataset = read_table_file(args.data, schema);

    std::vector<std::size_t> cols;
    for (const std::string& name : input_names) cols.push_back(dataset.column_index(name));
    cols.push_back(dataset.column_index(output_name));

    std::vector<std::vector<double>> rows(dataset.rows.size());
    for (std::size_t r = 0; r < dataset.rows.size(); ++r) {
        rows[r].reserve(cols.size());
        for (std::size_t c : cols) rows[r].push_back(dataset.number_at(r, c));
    }

    MissingPolicy policy = args.policy == "error"     ? MissingPolicy::error
                           : args.policy == "nearest" ? MissingPolicy::nearest
                                                      : MissingPolicy::hold;
    LutBuildResult result =
        build_lookup_table(rows, input_quantizers, output_quantizer, input_names, output_name,
                           policy, args.serial ? Exec::serial : Exec::parallel);
    write_lut_file(args.out, *result.table, quantizer_meta);

    std::cout << "total " << result.report.total << '\n'
              << "filled " << result.report.filled << '\n'
              << "duplicates_merged " << result.report.duplicate_groups_merged << '\n'
              << "max_spread " << result.report.max_output_spread << '\n';
}

struct SimulateArgs {
    std::string model, out;
    std::optional<int> steps, runs;
    std::optional<std::uint64_t> seed;
    bool keep_runs = false;
    bool serial = false;
};

void run_simulate(const SimulateArgs& args) {
    ModelDocument doc = parse_model_file(args.model);
    if (args.steps) doc.scenario.steps = *args.steps;
    if (args.runs) doc.scenario.runs = *args.runs;
    if (args.seed) doc.scenario.master_seed = *args.seed;

    fs::create_directories(args.out);
    TraceSet traces = simulate_ensemble(doc.model, doc.scenario,
                                        args.serial ? Exec::serial : Exec::parallel,
                                        args.keep_runs);

    fs::path aggregate_path = fs::path(args.out) / "aggregate.csv";
    std::ofstream agg(aggregate_path);
    if (!agg) throw ValidationError("cannot write '" + aggregate_path.string() + "'");
    write_aggregate_csv(agg, doc.model, traces);

    if (args.keep_runs) {
        for (std::size_t r = 0; r < traces.runs.size(); ++r) {
            char name[32];
            std::snprintf(name, sizeof(name), "run_%04zu.csv", r);
            std::ofstream run_out(fs::path(args.out) / name);
            write_trace_csv(run_out, doc.model, traces.runs[r]);
        }
    }

    std::cout << "simulated " << doc.scenario.runs << " run(s) of " << doc.scenario.steps
              << " step(s), seed " << doc.scenario.master_seed << '\n'
              << "wrote " << aggregate_path.string() << '\n';
}

struct ValidateArgs {
    std::string simulated, element, reference;
    std::string quantizer_spec;
    std::optional<double> min_spearman, max_mae;
};

void run_validate(const ValidateArgs& args) {
    AggregateFile agg = read_aggregate_csv(args.simulated);
    if (!agg.mean.count(args.element))
        throw ValidationError("element '" + args.element + "' not found in " + args.simulated);
    const std::vector<double>& sim = agg.mean.at(args.element);

    TraceMetrics metrics;
    if (!args.quantizer_spec.empty()) {
        auto [name, q] = parse_quantizer_spec(args.quantizer_spec);
        auto ref = read_value_series(args.reference);
        std::vector<double> values;
        values.reserve(ref.size());
        for (const auto& [step, v] : ref) values.push_back(v);
        metrics = compare_traces(sim, values, q);
    } else {
        TimeSeries ref = read_series_file(args.reference);
        std::vector<int> levels;
        levels.reserve(ref.points.size());
        for (const auto& [step, level] : ref.points) levels.push_back(level);
        metrics = compare_traces(sim, levels, agg.levels.at(args.element));
    }

    if (metrics.spearman)
        std::cout << "spearman " << fmt_double(*metrics.spearman) << '\n';
    else
        std::cout << "spearman undefined (constant series)\n";
    std::cout << "mae " << fmt_double(metrics.mae) << '\n'
              << "level_match " << fmt_double(metrics.level_match_fraction) << '\n';

    if (args.min_spearman && (!metrics.spearman || *metrics.spearman < *args.min_spearman))
        throw ValidationError("spearman below required minimum " +
                              fmt_double(*args.min_spearman));
    if (args.max_mae && metrics.mae > *args.max_mae)
        throw ValidationError("mae above allowed maximum " + fmt_double(*args.max_mae));
}

struct AggregateArgs {
    std::string input, out;
    std::string mode, window = "weekly", op = "sum";
};

void run_aggregate(const AggregateArgs& args) {
    std::ofstream out(args.out);
    if (!out) throw ValidationError("cannot write '" + args.out + "'");

    if (args.mode == "temporal") {
        Dataset ds = read_table_file(args.input, {{"date", ColumnSpec::Kind::text}});
        std::size_t date_col = ds.column_index("date");
        if (ds.columns.size() != 2)
            throw ValidationError("temporal input must have exactly two columns: date,value");
        std::size_t value_col = 1 - date_col;

        std::vector<std::pair<Date, double>> series;
        series.reserve(ds.rows.size());
        for (std::size_t r = 0; r < ds.rows.size(); ++r) {
            const std::string& text = ds.text_at(r, value_col);
            double value = 0.0;
            try {
                value = std::stod(text);
            } catch (const std::exception&) {
                throw ValidationError(args.input + ": row " + std::to_string(r + 1) +
                                      ", column '" + ds.columns[value_col] + "': '" + text +
                                      "' is not a number");
            }
            series.emplace_back(parse_date(ds.text_at(r, date_col)), value);
        }

        Window window = args.window == "weekly"    ? Window::weekly
                        : args.window == "monthly" ? Window::monthly
                                                   : Window::annual;
        AggregateOp op = args.op == "sum" ? AggregateOp::sum : AggregateOp::mean;
        auto points = aggregate_temporal(series, window, op);

        out << "index,value,partial\n";
        for (const AggregatedPoint& p : points) {
            out << p.index << ',';
            if (p.value) out << fmt_double(*p.value);
            out << ',' << (p.partial ? 1 : 0) << '\n';
        }
    } else {
        Dataset ds = read_table_file(args.input, {{"time", ColumnSpec::Kind::text},
                                                  {"cell", ColumnSpec::Kind::text},
                                                  {"value", ColumnSpec::Kind::numeric}});
        out << "time,value\n";
        for (const auto& [key, value] : aggregate_spatial(ds))
            out << key << ',' << fmt_double(value) << '\n';
    }
    std::cout << "wrote " << args.out << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hybrid element-based model simulator"};
    app.require_subcommand(1);

    QuantizeArgs quantize_args;
    auto* quantize = app.add_subcommand(
        "quantize", "Quantize a real-valued series into discrete levels");
    quantize->add_option("--input", quantize_args.input, "series CSV (step,value)")->required();
    quantize->add_option("--min", quantize_args.min, "range minimum")->required();
    quantize->add_option("--max", quantize_args.max, "range maximum")->required();
    quantize->add_option("--levels", quantize_args.levels, "number of discrete levels")
        ->required();
    quantize->add_option("--out", quantize_args.out, "output series file")->required();

    BuildLutArgs lut_args;
    auto* build_lut = app.add_subcommand(
        "build-lut", "Build a lookup-table update rule from a component-model dataset");
    build_lut->add_option("--data", lut_args.data, "dataset CSV with named columns")->required();
    build_lut
        ->add_option("--inputs", lut_args.inputs,
                     "comma-separated input specs name:min:max:levels")
        ->required();
    build_lut->add_option("--output", lut_args.output, "output spec name:min:max:levels")
        ->required();
    build_lut->add_option("--policy", lut_args.policy, "missing-entry policy")
        ->check(CLI::IsMember({"error", "hold", "nearest"}));
    build_lut->add_option("--out", lut_args.out, "output table file")->required();
    build_lut->add_flag("--serial", lut_args.serial, "build on a single thread");

    SimulateArgs sim_args;
    std::int64_t seed_value = 0;
    auto* simulate = app.add_subcommand("simulate", "Run a stochastic simulation ensemble");
    simulate->add_option("--model", sim_args.model, "model definition file")->required();
    auto* steps_opt = simulate->add_option("--steps", "simulation steps");
    auto* runs_opt = simulate->add_option("--runs", "number of runs");
    auto* seed_opt = simulate->add_option("--seed", seed_value, "master seed");
    simulate->add_option("--out", sim_args.out, "output directory")->required();
    simulate->add_flag("--keep-runs", sim_args.keep_runs, "write per-run trace files");
    simulate->add_flag("--serial", sim_args.serial, "run on a single thread");

    ValidateArgs val_args;
    auto* validate = app.add_subcommand(
        "validate", "Compare a simulated mean trace against a reference series");
    validate->add_option("--simulated", val_args.simulated, "aggregate CSV from simulate")
        ->required();
    validate->add_option("--element", val_args.element, "element to compare")->required();
    validate->add_option("--reference", val_args.reference, "reference series CSV")->required();
    validate->add_option("--quantizer", val_args.quantizer_spec,
                         "name:min:max:levels when the reference holds real values");
    double min_spearman = 0.0, max_mae = 0.0;
    auto* spearman_opt = validate->add_option("--min-spearman", min_spearman);
    auto* mae_opt = validate->add_option("--max-mae", max_mae);

    AggregateArgs agg_args;
    auto* aggregate = app.add_subcommand(
        "aggregate", "Temporal or spatial aggregation of a dataset");
    aggregate->add_option("--input", agg_args.input, "input CSV")->required();
    aggregate->add_option("--mode", agg_args.mode, "temporal or spatial")
        ->required()
        ->check(CLI::IsMember({"temporal", "spatial"}));
    aggregate->add_option("--window", agg_args.window, "temporal window")
        ->check(CLI::IsMember({"weekly", "monthly", "annual"}));
    aggregate->add_option("--op", agg_args.op, "window reduction")
        ->check(CLI::IsMember({"sum", "mean"}));
    aggregate->add_option("--out", agg_args.out, "output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (quantize->parsed()) {
            if (!(quantize_args.min < quantize_args.max)) {
                std::cerr << "usage error: --min must be less than --max\n";
                return 1;
            }
            if (quantize_args.levels < 2) {
                std::cerr << "usage error: --levels must be at least 2\n";
                return 1;
            }
            run_quantize(quantize_args);
        } else if (build_lut->parsed()) {
            run_build_lut(lut_args);
        } else if (simulate->parsed()) {
            if (*steps_opt) sim_args.steps = steps_opt->as<int>();
            if (*runs_opt) sim_args.runs = runs_opt->as<int>();
            if (*seed_opt) sim_args.seed = static_cast<std::uint64_t>(seed_value);
            run_simulate(sim_args);
        } else if (validate->parsed()) {
            if (*spearman_opt) val_args.min_spearman = min_spearman;
            if (*mae_opt) val_args.max_mae = max_mae;
            run_validate(val_args);
        } else if (aggregate->parsed()) {
            run_aggregate(agg_args);
        }
    } catch (const SimulationError& err) {
        std::cerr << "simulation error: " << err.what() << '\n';
        return 3;
    } catch (const ParseError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    } catch (const ValidationError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    }
    return 0;
}
