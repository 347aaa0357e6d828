#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "hemsim/model.hpp"

namespace hemsim {

// Maps real values into discrete levels. thresholds[i] is the upper edge of
// bin i; the first bin is closed on both ends ([min, t0] -> 0), every later
// bin is half-open ((t_i, t_i+1] -> i+1). Immutable; all operations pure.
struct Quantizer {
    double min = 0.0;
    double max = 1.0;
    int levels = 2;
    std::vector<double> thresholds;  // levels-1 values, strictly increasing, inside (min, max)
};

// thresholds[i] = min + (i+1) * (max - min) / levels.
Quantizer make_uniform_thresholds(double min, double max, int levels);

// Caller-supplied (possibly non-uniform) thresholds, validated.
Quantizer make_quantizer(double min, double max, int levels, std::vector<double> thresholds);

double bin_width(const Quantizer& q);  // (max - min) / levels

struct QuantizedValue {
    int level = 0;
    bool out_of_range = false;  // input fell outside [min, max] and was clamped
};

QuantizedValue quantize_value_checked(const Quantizer& q, double value);
int quantize_value(const Quantizer& q, double value);

// Midpoint of the bin's value range.
double dequantize(const Quantizer& q, int level);

// Element-wise quantization, index order preserved. If out_of_range_count is
// non-null it is incremented once per clamped sample.
TimeSeries quantize_series(const Quantizer& q,
                           const std::vector<std::pair<int, double>>& series,
                           std::size_t* out_of_range_count = nullptr);

// Mean square quantization error: mean of (v - dequantize(quantize(v)))^2.
double msqe(const Quantizer& q, const std::vector<double>& values);

}  // namespace hemsim
