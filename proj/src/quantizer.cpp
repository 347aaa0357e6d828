#include "hemsim/quantizer.hpp"

#include <algorithm>
#include <cmath>

#include "hemsim/error.hpp"

namespace hemsim {

static void validate_bounds(double min, double max, int levels) {
    if (!(min < max)) throw ValidationError("quantizer range needs min < max");
    if (levels < 2) throw ValidationError("quantizer needs at least 2 levels");
    if (!std::isfinite(min) || !std::isfinite(max))
        throw ValidationError("quantizer range must be finite");
}

Quantizer make_uniform_thresholds(double min, double max, int levels) {
    validate_bounds(min, max, levels);
    Quantizer q;
    q.min = min;
    q.max = max;
    q.levels = levels;
    q.thresholds.reserve(levels - 1);
    double width = (max - min) / levels;
    for (int i = 0; i < levels - 1; ++i) q.thresholds.push_back(min + (i + 1) * width);
    return q;
}

Quantizer make_quantizer(double min, double max, int levels, std::vector<double> thresholds) {
    validate_bounds(min, max, levels);
    if (thresholds.size() != static_cast<std::size_t>(levels - 1))
        throw ValidationError("quantizer with " + std::to_string(levels) + " levels needs " +
                              std::to_string(levels - 1) + " thresholds");
    double prev = min;
    for (double t : thresholds) {
        if (!(t > prev) || !(t < max))
            throw ValidationError("thresholds must be strictly increasing inside (min, max)");
        prev = t;
    }
    Quantizer q;
    q.min = min;
    q.max = max;
    q.levels = levels;
    q.thresholds = std::move(thresholds);
    return q;
}

double bin_width(const Quantizer& q) {
    return (q.max - q.min) / q.levels;
}

QuantizedValue quantize_value_checked(const Quantizer& q, double value) {
    if (value < q.min) return {0, true};
    if (value > q.max) return {q.levels - 1, true};
    // First bin closed on both ends: [min, t0] -> 0; then (t_i, t_i+1] -> i+1.
    auto it = std::lower_bound(q.thresholds.begin(), q.thresholds.end(), value);
    return {static_cast<int>(it - q.thresholds.begin()), false};
}

int quantize_value(const Quantizer& q, double value) {
    return quantize_value_checked(q, value).level;
}

double dequantize(const Quantizer& q, int level) {
    if (level < 0 || level >= q.levels)
        throw ValidationError("level " + std::to_string(level) + " out of range for a " +
                              std::to_string(q.levels) + "-level quantizer");
    double lo = (level == 0) ? q.min : q.thresholds[level - 1];
    double hi = (level == q.levels - 1) ? q.max : q.thresholds[level];
    return lo + (hi - lo) / 2.0;
}

TimeSeries quantize_series(const Quantizer& q,
                           const std::vector<std::pair<int, double>>& series,
                           std::size_t* out_of_range_count) {
    if (series.empty()) throw ValidationError("cannot quantize an empty series");
    TimeSeries out;
    for (const auto& [index, value] : series) {
        QuantizedValue r = quantize_value_checked(q, value);
        if (r.out_of_range && out_of_range_count) ++*out_of_range_count;
        if (!out.points.emplace(index, r.level).second)
            throw ValidationError("series repeats index " + std::to_string(index));
    }
    return out;
}

double msqe(const Quantizer& q, const std::vector<double>& values) {
    if (values.empty()) throw ValidationError("MSQE of an empty series is undefined");
    double total = 0.0;
    for (double v : values) {
        double err = v - dequantize(q, quantize_value(q, v));
        total += err * err;
    }
    return total / static_cast<double>(values.size());
}

}  // namespace hemsim
