#include <doctest.h>

#include <cmath>
#include <vector>

#include "hemsim/error.hpp"
#include "hemsim/quantizer.hpp"
#include "hemsim/rng.hpp"

using namespace hemsim;

namespace {

// Table II climate/yield ranges used throughout these tests.
const Quantizer kTemperature = make_uniform_thresholds(21.3, 30.6, 3);
const Quantizer kCarbon = make_uniform_thresholds(325.9, 926.7, 3);
const Quantizer kMaize3 = make_uniform_thresholds(0.5, 2.3, 3);
const Quantizer kMaize9 = make_uniform_thresholds(0.5, 2.3, 9);

}  // namespace

TEST_CASE("uniform thresholds split the range into equal bins") {
    REQUIRE(kTemperature.thresholds.size() == 2);
    CHECK(kTemperature.thresholds[0] == doctest::Approx(24.4).epsilon(1e-12));
    CHECK(kTemperature.thresholds[1] == doctest::Approx(27.5).epsilon(1e-12));

    REQUIRE(kMaize9.thresholds.size() == 8);
    for (int i = 0; i < 8; ++i)
        CHECK(kMaize9.thresholds[i] == doctest::Approx(0.7 + 0.2 * i).epsilon(1e-12));

    Quantizer binary = make_uniform_thresholds(0.0, 1.0, 2);
    REQUIRE(binary.thresholds.size() == 1);
    CHECK(binary.thresholds[0] == 0.5);

    CHECK(bin_width(kMaize3) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("uniform thresholds reject bad ranges") {
    CHECK_THROWS_AS(make_uniform_thresholds(1.0, 1.0, 3), ValidationError);
    CHECK_THROWS_AS(make_uniform_thresholds(2.0, 1.0, 3), ValidationError);
    CHECK_THROWS_AS(make_uniform_thresholds(0.0, 1.0, 1), ValidationError);
}

TEST_CASE("caller-supplied thresholds are validated") {
    CHECK_NOTHROW(make_quantizer(0.0, 10.0, 3, {2.0, 7.0}));  // non-uniform is fine
    CHECK_THROWS_AS(make_quantizer(0.0, 10.0, 3, {7.0, 2.0}), ValidationError);
    CHECK_THROWS_AS(make_quantizer(0.0, 10.0, 3, {2.0}), ValidationError);
    CHECK_THROWS_AS(make_quantizer(0.0, 10.0, 3, {0.0, 7.0}), ValidationError);
    CHECK_THROWS_AS(make_quantizer(0.0, 10.0, 3, {2.0, 10.0}), ValidationError);
}

TEST_CASE("quantize: bin membership at and between boundaries") {
    // 25.0 lies in (24.4, 27.5]
    CHECK(quantize_value(kTemperature, 25.0) == 1);
    // the minimum itself lands in the closed first bin
    CHECK(quantize_value(kCarbon, 325.9) == 0);
    // the first threshold is included in the first bin
    CHECK(quantize_value(kTemperature, kTemperature.thresholds[0]) == 0);
    // the maximum is included in the top bin
    CHECK(quantize_value(kTemperature, 30.6) == 2);
    CHECK(quantize_value(kMaize9, 2.3) == 8);
}

TEST_CASE("quantize: out-of-range values clamp with a flag") {
    QuantizedValue low = quantize_value_checked(kTemperature, 20.0);
    CHECK(low.level == 0);
    CHECK(low.out_of_range);
    QuantizedValue high = quantize_value_checked(kTemperature, 31.0);
    CHECK(high.level == 2);
    CHECK(high.out_of_range);
    CHECK_FALSE(quantize_value_checked(kTemperature, 25.0).out_of_range);
}

TEST_CASE("dequantize: bin midpoints") {
    Quantizer q = make_uniform_thresholds(0.0, 3.0, 3);
    CHECK(dequantize(q, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(dequantize(kMaize3, 1) == doctest::Approx(1.4).epsilon(1e-12));
    for (const Quantizer* quant : {&kTemperature, &kCarbon, &kMaize3, &kMaize9})
        CHECK(dequantize(*quant, quant->levels - 1) < quant->max);
    CHECK_THROWS_AS(dequantize(q, 3), ValidationError);
    CHECK_THROWS_AS(dequantize(q, -1), ValidationError);
}

TEST_CASE("quantize_series: order preserved, empties rejected") {
    TimeSeries out = quantize_series(kTemperature, {{0, 21.3}, {1, 25.0}, {2, 30.6}});
    REQUIRE(out.points.size() == 3);
    CHECK(out.points.at(0) == 0);
    CHECK(out.points.at(1) == 1);
    CHECK(out.points.at(2) == 2);

    TimeSeries zeros = quantize_series(kMaize3, {{0, 0.5}, {1, 0.5}, {5, 0.5}});
    for (const auto& [step, level] : zeros.points) CHECK(level == 0);

    CHECK_THROWS_AS(quantize_series(kMaize3, {}), ValidationError);

    std::size_t clamped = 0;
    quantize_series(kMaize3, {{0, -1.0}, {1, 1.0}, {2, 99.0}}, &clamped);
    CHECK(clamped == 2);
}

TEST_CASE("msqe: zero on bin midpoints, bounded on random data") {
    std::vector<double> midpoints;
    for (int level = 0; level < kMaize9.levels; ++level)
        midpoints.push_back(dequantize(kMaize9, level));
    CHECK(msqe(kMaize9, midpoints) == 0.0);

    // Brute-force bound: per-sample error can never exceed half a bin width.
    SplitMix64 rng(99);
    std::vector<double> values;
    values.reserve(10000);
    for (int i = 0; i < 10000; ++i)
        values.push_back(21.3 + rng.next_unit() * (30.6 - 21.3));
    double w = bin_width(kTemperature);
    CHECK(msqe(kTemperature, values) <= w * w / 4.0 + 1e-12);

    CHECK_THROWS_AS(msqe(kTemperature, {}), ValidationError);
}

TEST_CASE("msqe: doubling the level count never increases the error") {
    SplitMix64 rng(123);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> values;
        for (int i = 0; i < 500; ++i) values.push_back(rng.next_unit() * 10.0 - 5.0);
        for (int levels : {2, 3, 5, 8}) {
            Quantizer coarse = make_uniform_thresholds(-5.0, 5.0, levels);
            Quantizer fine = make_uniform_thresholds(-5.0, 5.0, 2 * levels);
            CHECK(msqe(fine, values) <= msqe(coarse, values) + 1e-12);
        }
    }
}

TEST_CASE("quantize properties: round-trip, monotonicity, error bound") {
    SplitMix64 rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        double lo = rng.next_unit() * 2000.0 - 1000.0;
        double width = 1e-3 + rng.next_unit() * 1000.0;
        int levels = 2 + static_cast<int>(rng.next_below(63));
        Quantizer q = make_uniform_thresholds(lo, lo + width, levels);

        int level = static_cast<int>(rng.next_below(levels));
        CHECK(quantize_value(q, dequantize(q, level)) == level);

        double v = lo + rng.next_unit() * width;
        double reconstructed = dequantize(q, quantize_value(q, v));
        CHECK(std::abs(v - reconstructed) <= bin_width(q) / 2.0 + 1e-9);

        double v2 = lo + rng.next_unit() * width;
        if (v2 < v) std::swap(v, v2);
        CHECK(quantize_value(q, v) <= quantize_value(q, v2));
    }
}
