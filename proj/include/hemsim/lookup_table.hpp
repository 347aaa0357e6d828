#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hemsim/model.hpp"
#include "hemsim/quantizer.hpp"

namespace hemsim {

// Whether a kernel runs on one thread or across OpenMP workers. Parallel
// execution must produce results identical to serial execution.
enum class Exec { serial, parallel };

struct TableVariable {
    std::string name;
    int levels = 2;

    bool operator==(const TableVariable&) const = default;
};

struct CoverageReport {
    unsigned long long total = 0;  // product of input level counts
    std::size_t filled = 0;
    std::size_t duplicate_groups_merged = 0;  // groups that had >= 2 rows
    int max_output_spread = 0;                // max within-group (max - min) output level
};

// Complete-or-partial map from tuples of input levels to an output level.
// Input ordering is the declaration order and part of the table's identity.
class LookupTable {
public:
    LookupTable(std::vector<TableVariable> inputs, TableVariable output,
                MissingPolicy policy);

    const std::vector<TableVariable>& inputs() const { return inputs_; }
    const TableVariable& output() const { return output_; }
    MissingPolicy default_policy() const { return policy_; }

    // Keys ordered lexicographically; exposed for serialization and scans.
    const std::map<std::vector<int>, int>& entries() const { return entries_; }

    unsigned long long total_combinations() const;
    std::size_t filled() const { return entries_.size(); }

    // Throws ValidationError on arity/range violations or duplicate keys.
    void insert(const std::vector<int>& key, int output_level);

    std::optional<int> find(const std::vector<int>& key) const;

    // Stored entry if present; otherwise per policy. `nearest` picks the
    // entry minimizing Manhattan distance over levels, ties broken by
    // lexicographically smallest key. Throws SimulationError under the
    // `error` policy (or `nearest` on an empty table).
    int lookup(const std::vector<int>& key, int current_output_level,
               MissingPolicy policy) const;
    int lookup(const std::vector<int>& key, int current_output_level) const {
        return lookup(key, current_output_level, policy_);
    }

    void validate_key(const std::vector<int>& key) const;

    bool operator==(const LookupTable& other) const;

private:
    std::vector<TableVariable> inputs_;
    TableVariable output_;
    MissingPolicy policy_;
    std::map<std::vector<int>, int> entries_;
};

struct LutBuildResult {
    std::shared_ptr<LookupTable> table;
    CoverageReport report;
};

// Quantizes each row's inputs and output, groups rows by quantized input
// tuple, and merges each group's output levels by median (even-sized groups:
// mean of the two middle values, rounded half away from zero). Row order
// never affects the result. Row quantization is the parallel kernel; the
// grouping/merge stage is always serial.
LutBuildResult build_lookup_table(const std::vector<std::vector<double>>& rows,
                                  const std::vector<Quantizer>& input_quantizers,
                                  const Quantizer& output_quantizer,
                                  const std::vector<std::string>& input_names,
                                  const std::string& output_name,
                                  MissingPolicy policy = MissingPolicy::hold,
                                  Exec exec = Exec::parallel);

CoverageReport lut_completeness(const LookupTable& table);

// Maps table variables onto model elements per `mapping` (variable name ->
// existing element name, or "new" to create a fresh element named after the
// variable). Adds any missing positive weight-1 influences from each input
// element to the output element and installs the table as the output
// element's rule. Never removes elements or influences. If a scenario is
// given, rejects an output element that also carries a series binding.
Model integrate_component_model(const Model& model,
                                std::shared_ptr<const LookupTable> table,
                                const std::map<std::string, std::string>& mapping,
                                const Scenario* scenario = nullptr);

}  // namespace hemsim
