#include "hemsim/lookup_table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "hemsim/error.hpp"

namespace hemsim {

LookupTable::LookupTable(std::vector<TableVariable> inputs, TableVariable output,
                         MissingPolicy policy)
    : inputs_(std::move(inputs)), output_(std::move(output)), policy_(policy) {
    if (inputs_.empty()) throw ValidationError("lookup table needs at least one input");
    for (const auto& v : inputs_) {
        if (v.levels < 2)
            throw ValidationError("table input '" + v.name + "' needs at least 2 levels");
    }
    if (output_.levels < 2)
        throw ValidationError("table output '" + output_.name + "' needs at least 2 levels");
}

unsigned long long LookupTable::total_combinations() const {
    unsigned long long total = 1;
    for (const auto& v : inputs_) {
        if (total > (1ULL << 62) / static_cast<unsigned long long>(v.levels))
            throw ValidationError("combination space too large to count");
        total *= static_cast<unsigned long long>(v.levels);
    }
    return total;
}

void LookupTable::validate_key(const std::vector<int>& key) const {
    if (key.size() != inputs_.size()) {
        throw ValidationError("lookup key has arity " + std::to_string(key.size()) +
                              " but the table has " + std::to_string(inputs_.size()) +
                              " inputs");
    }
    for (std::size_t i = 0; i < key.size(); ++i) {
        if (key[i] < 0 || key[i] >= inputs_[i].levels)
            throw ValidationError("lookup key component " + std::to_string(i) + " (" +
                                  std::to_string(key[i]) + ") out of range for input '" +
                                  inputs_[i].name + "'");
    }
}

void LookupTable::insert(const std::vector<int>& key, int output_level) {
    validate_key(key);
    if (output_level < 0 || output_level >= output_.levels)
        throw ValidationError("output level " + std::to_string(output_level) +
                              " out of range for '" + output_.name + "'");
    if (!entries_.emplace(key, output_level).second)
        throw ValidationError("duplicate lookup-table entry");
}

std::optional<int> LookupTable::find(const std::vector<int>& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

static std::string format_key(const std::vector<int>& key) {
    std::string out = "(";
    for (std::size_t i = 0; i < key.size(); ++i) {
        if (i > 0) out += ",";
        out += std::to_string(key[i]);
    }
    out += ")";
    return out;
}

int LookupTable::lookup(const std::vector<int>& key, int current_output_level,
                        MissingPolicy policy) const {
    validate_key(key);
    if (auto hit = find(key)) return *hit;
    switch (policy) {
        case MissingPolicy::error:
            throw SimulationError("no lookup-table entry for input tuple " + format_key(key));
        case MissingPolicy::hold:
            return current_output_level;
        case MissingPolicy::nearest: {
            if (entries_.empty())
                throw SimulationError("nearest-entry lookup on an empty table");
            // entries_ iterates in lexicographic key order, so the first
            // minimum wins ties by smallest key.
            long best_dist = -1;
            int best_value = 0;
            for (const auto& [candidate, value] : entries_) {
                long dist = 0;
                for (std::size_t i = 0; i < key.size(); ++i)
                    dist += std::labs(static_cast<long>(candidate[i]) - key[i]);
                if (best_dist < 0 || dist < best_dist) {
                    best_dist = dist;
                    best_value = value;
                }
            }
            return best_value;
        }
    }
    throw SimulationError("unknown missing-entry policy");
}

bool LookupTable::operator==(const LookupTable& other) const {
    return inputs_ == other.inputs_ && output_ == other.output_ &&
           policy_ == other.policy_ && entries_ == other.entries_;
}

// Median of a sorted group; an even-sized group takes the mean of the two
// middle values rounded half away from zero.
static int merged_output_level(std::vector<int>& group) {
    std::sort(group.begin(), group.end());
    std::size_t n = group.size();
    if (n % 2 == 1) return group[n / 2];
    double mid = (static_cast<double>(group[n / 2 - 1]) + group[n / 2]) / 2.0;
    return static_cast<int>(std::llround(mid));
}

LutBuildResult build_lookup_table(const std::vector<std::vector<double>>& rows,
                                  const std::vector<Quantizer>& input_quantizers,
                                  const Quantizer& output_quantizer,
                                  const std::vector<std::string>& input_names,
                                  const std::string& output_name,
                                  MissingPolicy policy, Exec exec) {
    if (rows.empty()) throw ValidationError("cannot build a lookup table from an empty dataset");
    if (input_names.size() != input_quantizers.size())
        throw ValidationError("input name/quantizer count mismatch");
    const std::size_t n_in = input_quantizers.size();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != n_in + 1)
            throw ValidationError("dataset row " + std::to_string(r) + " has arity " +
                                  std::to_string(rows[r].size()) + ", expected " +
                                  std::to_string(n_in + 1));
    }

    // Parallel kernel: per-row quantization is independent and writes into a
    // flat preallocated buffer, so the later grouping sees the same row order
    // at any thread count.
    std::vector<int> key_flat(rows.size() * n_in);
    std::vector<int> out_levels(rows.size());
    const long row_count = static_cast<long>(rows.size());
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
    for (long r = 0; r < row_count; ++r) {
        for (std::size_t i = 0; i < n_in; ++i)
            key_flat[r * n_in + i] = quantize_value(input_quantizers[i], rows[r][i]);
        out_levels[r] = quantize_value(output_quantizer, rows[r][n_in]);
    }

    // Serial merge: every row of a group lands in the same bucket.
    std::map<std::vector<int>, std::vector<int>> groups;
    std::vector<int> key(n_in);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        key.assign(key_flat.begin() + r * n_in, key_flat.begin() + (r + 1) * n_in);
        groups[key].push_back(out_levels[r]);
    }

    std::vector<TableVariable> inputs;
    inputs.reserve(n_in);
    for (std::size_t i = 0; i < n_in; ++i)
        inputs.push_back({input_names[i], input_quantizers[i].levels});
    auto table = std::make_shared<LookupTable>(std::move(inputs),
                                               TableVariable{output_name, output_quantizer.levels},
                                               policy);

    CoverageReport report;
    for (auto& [key, group] : groups) {
        if (group.size() > 1) {
            ++report.duplicate_groups_merged;
            auto [lo, hi] = std::minmax_element(group.begin(), group.end());
            report.max_output_spread = std::max(report.max_output_spread, *hi - *lo);
        }
        table->insert(key, merged_output_level(group));
    }
    report.total = table->total_combinations();
    report.filled = table->filled();
    return {std::move(table), report};
}

CoverageReport lut_completeness(const LookupTable& table) {
    CoverageReport report;
    report.total = table.total_combinations();
    report.filled = table.filled();
    return report;
}

Model integrate_component_model(const Model& model,
                                std::shared_ptr<const LookupTable> table,
                                const std::map<std::string, std::string>& mapping,
                                const Scenario* scenario) {
    if (!table) throw ValidationError("integrate_component_model: null table");

    auto mapped_name = [&](const TableVariable& var) -> std::string {
        auto it = mapping.find(var.name);
        if (it == mapping.end())
            throw ValidationError("no mapping for table variable '" + var.name + "'");
        return (it->second == "new") ? var.name : it->second;
    };

    std::vector<Element> elements = model.elements();
    std::vector<Influence> influences = model.influences();
    std::map<std::string, UpdateRule> rules = model.rules();

    auto ensure_element = [&](const TableVariable& var, const std::string& name) {
        for (const Element& e : elements) {
            if (e.name != name) continue;
            if (e.levels != var.levels)
                throw ValidationError("table variable '" + var.name + "' has " +
                                      std::to_string(var.levels) + " levels but element '" +
                                      name + "' has " + std::to_string(e.levels));
            return;
        }
        elements.push_back({name, var.levels, 0});
    };

    std::vector<std::string> input_elements;
    input_elements.reserve(table->inputs().size());
    for (const TableVariable& var : table->inputs()) {
        std::string name = mapped_name(var);
        ensure_element(var, name);
        input_elements.push_back(std::move(name));
    }

    std::string output_element = mapped_name(table->output());
    ensure_element(table->output(), output_element);
    if (scenario && scenario->series.count(output_element))
        throw ValidationError("element '" + output_element +
                              "' is bound to a time series and cannot also take the "
                              "component-model rule");

    for (const std::string& src : input_elements) {
        bool present = std::any_of(influences.begin(), influences.end(),
                                   [&](const Influence& inf) {
                                       return inf.source == src && inf.target == output_element;
                                   });
        if (!present) influences.push_back({src, output_element, Sign::positive, 1});
    }

    MissingPolicy policy = table->default_policy();
    rules[output_element] = LookupRule{std::move(table), std::move(input_elements), policy};
    return build_model(std::move(elements), std::move(influences), std::move(rules));
}

}  // namespace hemsim
