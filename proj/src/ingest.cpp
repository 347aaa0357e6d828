#include "hemsim/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "hemsim/error.hpp"

namespace hemsim {

std::size_t Dataset::column_index(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw ValidationError("missing column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

double Dataset::number_at(std::size_t row, std::size_t col) const {
    const Cell& cell = rows[row][col];
    if (const double* v = std::get_if<double>(&cell)) return *v;
    throw ValidationError("cell at row " + std::to_string(row + 1) + ", column '" +
                          columns[col] + "' is not numeric");
}

const std::string& Dataset::text_at(std::size_t row, std::size_t col) const {
    const Cell& cell = rows[row][col];
    if (const std::string* s = std::get_if<std::string>(&cell)) return *s;
    throw ValidationError("cell at row " + std::to_string(row + 1) + ", column '" +
                          columns[col] + "' is not text");
}

namespace {

std::string trim(const std::string& s) {
    std::size_t begin = 0, end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

std::optional<double> parse_number(const std::string& text) {
    if (text.empty()) return std::nullopt;
    const char* begin = text.data();
    const char* end = begin + text.size();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

}  // namespace

Dataset read_table(std::istream& in, const std::vector<ColumnSpec>& schema) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty input: no header row");
    Dataset ds;
    ds.columns = split_csv_line(line);

    std::vector<std::size_t> numeric_cols;
    for (const ColumnSpec& spec : schema) {
        std::size_t idx = ds.column_index(spec.name);  // throws if missing
        if (spec.kind == ColumnSpec::Kind::numeric) numeric_cols.push_back(idx);
    }

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != ds.columns.size())
            throw ValidationError("row " + std::to_string(line_no) + " has " +
                                  std::to_string(fields.size()) + " fields, expected " +
                                  std::to_string(ds.columns.size()));
        std::vector<Cell> row;
        row.reserve(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c) {
            bool numeric = std::find(numeric_cols.begin(), numeric_cols.end(), c) !=
                           numeric_cols.end();
            if (numeric) {
                auto value = parse_number(fields[c]);
                if (!value)
                    throw ValidationError("row " + std::to_string(line_no) + ", column '" +
                                          ds.columns[c] + "': '" + fields[c] +
                                          "' is not a number");
                row.emplace_back(*value);
            } else {
                row.emplace_back(fields[c]);
            }
        }
        ds.rows.push_back(std::move(row));
    }
    if (ds.rows.empty()) throw ValidationError("input has a header but no data rows");
    return ds;
}

Dataset read_table_file(const std::string& path, const std::vector<ColumnSpec>& schema) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    try {
        return read_table(in, schema);
    } catch (const ValidationError& err) {
        throw ValidationError(path + ": " + err.what());
    }
}

void write_table(std::ostream& out, const Dataset& dataset) {
    for (std::size_t c = 0; c < dataset.columns.size(); ++c) {
        if (c > 0) out << ',';
        out << dataset.columns[c];
    }
    out << '\n';
    char buf[40];
    for (const auto& row : dataset.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c > 0) out << ',';
            if (const double* v = std::get_if<double>(&row[c])) {
                std::snprintf(buf, sizeof(buf), "%.17g", *v);
                out << buf;
            } else {
                out << std::get<std::string>(row[c]);
            }
        }
        out << '\n';
    }
}

Date parse_date(const std::string& text) {
    int y = 0, m = 0, d = 0;
    char dash1 = 0, dash2 = 0;
    std::istringstream in(text);
    in >> y >> dash1 >> m >> dash2 >> d;
    bool ok = in && dash1 == '-' && dash2 == '-' && in.eof();
    if (ok) {
        static const int days_in[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
        bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
        int dmax = (m >= 1 && m <= 12) ? days_in[m - 1] + ((m == 2 && leap) ? 1 : 0) : 0;
        ok = m >= 1 && m <= 12 && d >= 1 && d <= dmax;
    }
    // The sign flip in ">> dash" parsing: "2014-1-05" reads m as -1.
    if (!ok || m < 0 || d < 0) throw ValidationError("'" + text + "' is not a YYYY-MM-DD date");
    return {y, m, d};
}

// Days since 1970-01-01 (Howard Hinnant's civil-days algorithm).
long day_number(const Date& dt) {
    int y = dt.year - (dt.month <= 2 ? 1 : 0);
    long era = (y >= 0 ? y : y - 399) / 400;
    unsigned yoe = static_cast<unsigned>(y - era * 400);
    unsigned doy = (153u * (dt.month + (dt.month > 2 ? -3 : 9)) + 2) / 5 + dt.day - 1;
    unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

namespace {

struct WindowKey {
    long index = 0;  // week number, month number, or year, depending on window
};

long window_index(const Date& d, long first_day, Window window) {
    switch (window) {
        case Window::weekly:
            return (day_number(d) - first_day) / 7;
        case Window::monthly:
            return static_cast<long>(d.year) * 12 + (d.month - 1);
        case Window::annual:
            return d.year;
    }
    return 0;
}

// Inclusive day-number span covered by a window.
std::pair<long, long> window_span(long index, long first_day, Window window) {
    switch (window) {
        case Window::weekly:
            return {first_day + index * 7, first_day + index * 7 + 6};
        case Window::monthly: {
            int year = static_cast<int>(index / 12);
            int month = static_cast<int>(index % 12) + 1;
            long begin = day_number({year, month, 1});
            long next = (month == 12) ? day_number({year + 1, 1, 1})
                                      : day_number({year, month + 1, 1});
            return {begin, next - 1};
        }
        case Window::annual: {
            int year = static_cast<int>(index);
            return {day_number({year, 1, 1}), day_number({year + 1, 1, 1}) - 1};
        }
    }
    return {0, 0};
}

}  // namespace

std::vector<AggregatedPoint> aggregate_temporal(
    const std::vector<std::pair<Date, double>>& series, Window window, AggregateOp op) {
    if (series.empty()) throw ValidationError("cannot aggregate an empty series");

    auto sorted = series;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    const long first_day = day_number(sorted.front().first);
    const long last_day = day_number(sorted.back().first);

    const long first_window = window_index(sorted.front().first, first_day, window);
    const long last_window = window_index(sorted.back().first, first_day, window);

    std::map<long, std::pair<double, std::size_t>> sums;  // window -> (sum, count)
    for (const auto& [date, value] : sorted) {
        auto& [sum, count] = sums[window_index(date, first_day, window)];
        sum += value;
        ++count;
    }

    std::vector<AggregatedPoint> out;
    out.reserve(static_cast<std::size_t>(last_window - first_window + 1));
    for (long w = first_window; w <= last_window; ++w) {
        AggregatedPoint point;
        point.index = static_cast<int>(w - first_window);
        auto [begin, end] = window_span(w, first_day, window);
        point.partial = begin < first_day || end > last_day;
        auto it = sums.find(w);
        if (it != sums.end()) {
            auto [sum, count] = it->second;
            point.value = (op == AggregateOp::sum) ? sum : sum / static_cast<double>(count);
        }
        out.push_back(point);
    }
    return out;
}

std::vector<std::pair<std::string, double>> aggregate_spatial(const Dataset& dataset) {
    std::size_t time_col = dataset.column_index("time");
    dataset.column_index("cell");
    std::size_t value_col = dataset.column_index("value");
    if (dataset.rows.empty()) throw ValidationError("no rows to aggregate");

    std::map<std::string, std::pair<double, std::size_t>> sums;
    bool all_numeric_keys = true;
    for (std::size_t r = 0; r < dataset.rows.size(); ++r) {
        const Cell& key_cell = dataset.rows[r][time_col];
        std::string key = std::holds_alternative<std::string>(key_cell)
                              ? std::get<std::string>(key_cell)
                              : std::to_string(std::get<double>(key_cell));
        if (!parse_number(key)) all_numeric_keys = false;
        auto& [sum, count] = sums[key];
        sum += dataset.number_at(r, value_col);
        ++count;
    }

    std::vector<std::pair<std::string, double>> out;
    out.reserve(sums.size());
    for (const auto& [key, agg] : sums)
        out.emplace_back(key, agg.first / static_cast<double>(agg.second));
    if (all_numeric_keys) {
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
            return *parse_number(a.first) < *parse_number(b.first);
        });
    }
    return out;
}

}  // namespace hemsim
