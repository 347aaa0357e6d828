#include "hemsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hemsim/error.hpp"
#include "hemsim/rng.hpp"

namespace hemsim {

namespace {

int next_value(const Model& model, const State& state, std::size_t index) {
    const UpdateRule& rule = *model.rule_for(index);
    if (const auto* inc = std::get_if<IncrementalRule>(&rule))
        return next_value_incremental(*inc, index, state, model);

    const auto& lut = std::get<LookupRule>(rule);
    std::vector<int> key;
    key.reserve(lut.input_elements.size());
    for (const std::string& name : lut.input_elements)
        key.push_back(state.levels[model.index_of(name)]);
    return lut.table->lookup(key, state.levels[index], lut.policy);
}

// Series bindings resolved to element indices once per ensemble.
struct BoundSeries {
    std::size_t element = 0;
    const TimeSeries* series = nullptr;
};

std::vector<BoundSeries> bind_series(const Model& model, const Scenario& scenario) {
    std::vector<BoundSeries> bound;
    bound.reserve(scenario.series.size());
    for (const auto& [name, series] : scenario.series)
        bound.push_back({model.index_of(name), &series});
    return bound;
}

Trace simulate_run_bound(const Model& model, const Scenario& scenario,
                         const std::vector<BoundSeries>& bound, std::uint64_t run_seed) {
    State state = initial_state(model, scenario);
    Trace trace;
    trace.levels.assign(model.size(), std::vector<int>(scenario.steps + 1));
    for (std::size_t e = 0; e < model.size(); ++e) trace.levels[e][0] = state.levels[e];

    SplitMix64 rng(run_seed);
    std::vector<std::size_t> candidates;
    std::vector<bool> forced(model.size(), false);

    for (int t = 1; t <= scenario.steps; ++t) {
        std::fill(forced.begin(), forced.end(), false);
        for (const BoundSeries& b : bound) {
            if (auto level = b.series->at(t)) {
                state.levels[b.element] = *level;  // forcing wins over any rule
                forced[b.element] = true;
            }
        }

        candidates.clear();
        for (std::size_t idx : model.rule_element_indices())
            if (!forced[idx]) candidates.push_back(idx);

        if (!candidates.empty()) {
            std::size_t chosen = candidates[rng.next_below(candidates.size())];
            try {
                state.levels[chosen] = next_value(model, state, chosen);
            } catch (const SimulationError& err) {
                throw SimulationError(std::string(err.what()) + " (element '" +
                                      model.element_at(chosen).name + "' at step " +
                                      std::to_string(t) + ")");
            }
        }
        for (std::size_t e = 0; e < model.size(); ++e) trace.levels[e][t] = state.levels[e];
    }
    return trace;
}

}  // namespace

Trace simulate_run(const Model& model, const Scenario& scenario, std::uint64_t run_seed) {
    validate_scenario(model, scenario);
    return simulate_run_bound(model, scenario, bind_series(model, scenario), run_seed);
}

TraceSet simulate_ensemble(const Model& model, const Scenario& scenario, Exec exec,
                           bool keep_runs) {
    validate_scenario(model, scenario);
    const std::vector<BoundSeries> bound = bind_series(model, scenario);
    const int runs = scenario.runs;

    std::vector<Trace> traces(runs);
    std::vector<std::string> errors(runs);
    bool failed = false;

#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
    for (int r = 0; r < runs; ++r) {
        try {
            traces[r] = simulate_run_bound(model, scenario, bound,
                                           derive_run_seed(scenario.master_seed, r));
        } catch (const std::exception& err) {
            errors[r] = err.what();
#pragma omp atomic write
            failed = true;
        }
    }
    if (failed) {
        // Report the lowest failing run so the error is deterministic.
        for (int r = 0; r < runs; ++r) {
            if (!errors[r].empty())
                throw SimulationError("run " + std::to_string(r) + ": " + errors[r]);
        }
    }

    // Streamed aggregation (Welford) consuming runs in fixed order. Each
    // element-step cell is an independent recursion over r = 0..runs-1, so
    // cells may go to different threads with bit-identical results.
    TraceSet result;
    const std::size_t n_elements = model.size();
    const std::size_t n_steps = static_cast<std::size_t>(scenario.steps) + 1;
    result.mean.assign(n_elements, std::vector<double>(n_steps, 0.0));
    result.stddev.assign(n_elements, std::vector<double>(n_steps, 0.0));

    const long n_cells = static_cast<long>(n_elements * n_steps);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
    for (long cell = 0; cell < n_cells; ++cell) {
        const std::size_t e = static_cast<std::size_t>(cell) / n_steps;
        const std::size_t t = static_cast<std::size_t>(cell) % n_steps;
        const double denom = static_cast<double>(model.element_at(e).levels - 1);
        double mean = 0.0, m2 = 0.0;
        for (int r = 0; r < runs; ++r) {
            double x = static_cast<double>(traces[r].levels[e][t]) / denom;
            double delta = x - mean;
            mean += delta / static_cast<double>(r + 1);
            m2 += delta * (x - mean);
        }
        result.mean[e][t] = mean;
        result.stddev[e][t] = std::sqrt(m2 / static_cast<double>(runs));
    }

    if (keep_runs) result.runs = std::move(traces);
    return result;
}

std::optional<double> spearman_rank_correlation(std::span<const double> x,
                                                std::span<const double> y) {
    if (x.size() != y.size())
        throw ValidationError("rank correlation needs equal-length series");
    const std::size_t n = x.size();
    if (n < 2) return std::nullopt;

    auto ranks = [](std::span<const double> v) {
        std::vector<std::size_t> order(v.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> rank(v.size());
        std::size_t i = 0;
        while (i < order.size()) {
            std::size_t j = i;
            while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
            double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
            i = j + 1;
        }
        return rank;
    };

    std::vector<double> rx = ranks(x);
    std::vector<double> ry = ranks(y);
    double mean_r = (static_cast<double>(n) + 1.0) / 2.0;
    double cov = 0.0, var_x = 0.0, var_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = rx[i] - mean_r;
        double dy = ry[i] - mean_r;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if (var_x == 0.0 || var_y == 0.0) return std::nullopt;  // constant series
    return cov / std::sqrt(var_x * var_y);
}

TraceMetrics compare_traces(std::span<const double> simulated_mean,
                            std::span<const int> reference_levels, int levels) {
    if (simulated_mean.size() != reference_levels.size())
        throw ValidationError("simulated trace has " + std::to_string(simulated_mean.size()) +
                              " steps but the reference has " +
                              std::to_string(reference_levels.size()));
    if (simulated_mean.empty()) throw ValidationError("cannot compare empty traces");

    std::vector<double> ref_norm(reference_levels.size());
    for (std::size_t i = 0; i < reference_levels.size(); ++i)
        ref_norm[i] = normalize(reference_levels[i], levels);

    TraceMetrics metrics;
    metrics.spearman = spearman_rank_correlation(simulated_mean, ref_norm);
    double abs_err = 0.0;
    std::size_t matches = 0;
    for (std::size_t i = 0; i < simulated_mean.size(); ++i) {
        abs_err += std::abs(simulated_mean[i] - ref_norm[i]);
        long rounded = std::lround(simulated_mean[i] * (levels - 1));
        if (rounded == reference_levels[i]) ++matches;
    }
    metrics.mae = abs_err / static_cast<double>(simulated_mean.size());
    metrics.level_match_fraction =
        static_cast<double>(matches) / static_cast<double>(simulated_mean.size());
    return metrics;
}

TraceMetrics compare_traces(std::span<const double> simulated_mean,
                            std::span<const double> reference_values, const Quantizer& q) {
    std::vector<int> levels(reference_values.size());
    for (std::size_t i = 0; i < reference_values.size(); ++i)
        levels[i] = quantize_value(q, reference_values[i]);
    return compare_traces(simulated_mean, levels, q.levels);
}

}  // namespace hemsim
