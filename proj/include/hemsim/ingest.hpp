#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace hemsim {

// Tabular carrier for component-model data: a header row of column names
// plus rectangular rows of numeric or text cells.
using Cell = std::variant<double, std::string>;

struct ColumnSpec {
    enum class Kind { numeric, text };
    std::string name;
    Kind kind = Kind::numeric;
};

struct Dataset {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    std::size_t column_index(const std::string& name) const;  // throws ValidationError
    double number_at(std::size_t row, std::size_t col) const;
    const std::string& text_at(std::size_t row, std::size_t col) const;
};

// Comma-separated input with a header row. Columns named in the schema are
// validated (and parsed as numbers when numeric); other columns are kept as
// text. Errors name the offending row and column.
Dataset read_table(std::istream& in, const std::vector<ColumnSpec>& schema);
Dataset read_table_file(const std::string& path, const std::vector<ColumnSpec>& schema);
void write_table(std::ostream& out, const Dataset& dataset);

struct Date {
    int year = 1970;
    int month = 1;  // 1..12
    int day = 1;    // 1..31

    auto operator<=>(const Date&) const = default;
};

Date parse_date(const std::string& text);  // ISO-8601 calendar date (YYYY-MM-DD)
long day_number(const Date& d);            // days since 1970-01-01 (civil)

enum class Window { weekly, monthly, annual };
enum class AggregateOp { sum, mean };

struct AggregatedPoint {
    int index = 0;
    std::optional<double> value;  // empty = window had no observations
    bool partial = false;         // window truncated by the series date range
};

// Groups observations into consecutive windows (weeks start at the series'
// first date; months and years are calendar-aligned) and reduces each window
// by op. Windows not fully covered by the observed date range are flagged
// partial; windows with no observations at all emit a missing value.
std::vector<AggregatedPoint> aggregate_temporal(
    const std::vector<std::pair<Date, double>>& series, Window window, AggregateOp op);

// Unweighted arithmetic mean over all cell values sharing a time key, sorted
// by time key (numerically when every key parses as a number, otherwise
// lexicographically). The dataset must have columns time, cell, value.
std::vector<std::pair<std::string, double>> aggregate_spatial(const Dataset& dataset);

}  // namespace hemsim
