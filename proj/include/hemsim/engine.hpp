#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hemsim/lookup_table.hpp"
#include "hemsim/model.hpp"
#include "hemsim/quantizer.hpp"

namespace hemsim {

// Levels of every element at steps 0..steps (step 0 is the initial state).
struct Trace {
    std::vector<std::vector<int>> levels;  // [element][step]

    bool operator==(const Trace&) const = default;
};

// Per-run traces plus per-element per-step ensemble mean and standard
// deviation in normalized units. std is the population deviation across
// runs, so a single run yields std = 0.
struct TraceSet {
    std::vector<Trace> runs;                  // empty when keep_runs = false
    std::vector<std::vector<double>> mean;    // [element][step]
    std::vector<std::vector<double>> stddev;  // [element][step]
};

// One stochastic run under the random-order sequential update scheme: at
// each step, series forcings are applied first, then one non-input element
// (excluding elements forced this step) is chosen uniformly at random and
// updated by its rule; all other unforced elements retain their values.
Trace simulate_run(const Model& model, const Scenario& scenario, std::uint64_t run_seed);

// Ensemble of scenario.runs runs; run r is seeded with
// derive_run_seed(master_seed, r). Runs may execute across OpenMP workers,
// but aggregation always consumes them in run order, so the TraceSet is
// identical to serial execution at any thread count.
TraceSet simulate_ensemble(const Model& model, const Scenario& scenario,
                           Exec exec = Exec::parallel, bool keep_runs = true);

struct TraceMetrics {
    std::optional<double> spearman;  // absent when either series is constant
    double mae = 0.0;                // normalized units
    double level_match_fraction = 0.0;
};

// Compares a simulated mean trace (normalized) against a reference given as
// levels of a `levels`-valued element. Throws ValidationError on length
// mismatch.
TraceMetrics compare_traces(std::span<const double> simulated_mean,
                            std::span<const int> reference_levels, int levels);

// Reference given as real values; quantized with q first.
TraceMetrics compare_traces(std::span<const double> simulated_mean,
                            std::span<const double> reference_values, const Quantizer& q);

// Average-rank ties; absent if either input is constant.
std::optional<double> spearman_rank_correlation(std::span<const double> x,
                                                std::span<const double> y);

}  // namespace hemsim
