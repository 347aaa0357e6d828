#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hemsim/expr.hpp"

namespace hemsim {

class LookupTable;

enum class Sign { positive, negative };
enum class IncrementMode { step, proportional };
enum class MissingPolicy { error, hold, nearest };

constexpr std::uint64_t kDefaultMasterSeed = 424242;

// A named model component carrying a discrete variable with `levels`
// possible values (resolution). Levels are stored as integers in
// [0, levels-1]; normalized values are computed on demand, never stored.
struct Element {
    std::string name;
    int levels = 2;
    int initial_level = 0;

    bool operator==(const Element&) const = default;
};

// Signed, weighted directed edge between elements. For lookup rules the
// sign and weight are structural metadata only; the table defines the
// functional effect.
struct Influence {
    std::string source;
    std::string target;
    Sign sign = Sign::positive;
    int weight = 1;

    bool operator==(const Influence&) const = default;
};

// Next level from comparison (step mode) or scaled difference
// (proportional mode) of the positive and negative scores.
struct IncrementalRule {
    ExprPtr positive;  // at least one of positive/negative is set
    ExprPtr negative;
    IncrementMode mode = IncrementMode::proportional;
};

// Next level read from a table keyed by the current levels of
// `input_elements` (model element names in table-input order).
struct LookupRule {
    std::shared_ptr<const LookupTable> table;
    std::vector<std::string> input_elements;
    MissingPolicy policy = MissingPolicy::hold;
};

using UpdateRule = std::variant<IncrementalRule, LookupRule>;

// Externally supplied levels forcing an element at designated steps.
struct TimeSeries {
    std::map<int, int> points;  // step -> level, steps >= 0

    std::optional<int> at(int step) const {
        auto it = points.find(step);
        if (it == points.end()) return std::nullopt;
        return it->second;
    }

    bool operator==(const TimeSeries&) const = default;
};

// Initial-level overrides, forcing series, horizon, run count, and master
// seed for one simulation configuration.
struct Scenario {
    std::map<std::string, int> initial_overrides;
    std::map<std::string, TimeSeries> series;
    int steps = 0;
    int runs = 1;
    std::uint64_t master_seed = kDefaultMasterSeed;
};

// Current levels of all elements, indexed by Model element index.
struct State {
    std::vector<int> levels;
};

// Immutable after construction (via build_model); safe to share across
// concurrent simulation runs.
class Model {
public:
    const std::vector<Element>& elements() const { return elements_; }
    const std::vector<Influence>& influences() const { return influences_; }
    const std::map<std::string, UpdateRule>& rules() const { return rules_; }

    std::size_t size() const { return elements_.size(); }
    bool has_element(const std::string& name) const;
    std::size_t index_of(const std::string& name) const;  // throws ValidationError
    const Element& element_at(std::size_t index) const { return elements_[index]; }

    // An element is an input iff it has no incoming influences and no rule.
    bool is_input(std::size_t index) const { return rule_by_index_[index] == nullptr; }
    const UpdateRule* rule_for(std::size_t index) const { return rule_by_index_[index]; }

    // Indices of non-input (rule-bearing) elements, in declaration order.
    const std::vector<std::size_t>& rule_element_indices() const { return rule_indices_; }

private:
    friend Model build_model(std::vector<Element> elements,
                             std::vector<Influence> influences,
                             std::map<std::string, UpdateRule> rules);

    std::vector<Element> elements_;
    std::vector<Influence> influences_;
    std::map<std::string, UpdateRule> rules_;
    std::map<std::string, std::size_t> index_;
    std::vector<const UpdateRule*> rule_by_index_;
    std::vector<std::size_t> rule_indices_;
};

// Validates and assembles a model. Errors: duplicate or malformed element
// name, level count < 2, initial level out of range, influence referencing
// an unknown element, non-positive influence weight, rule on an input
// element, rule referencing an unknown element, non-input element without
// a rule, lookup-rule arity or level-count mismatch.
Model build_model(std::vector<Element> elements,
                  std::vector<Influence> influences,
                  std::map<std::string, UpdateRule> rules);

// level / (levels - 1); 0 maps to 0 and levels-1 maps to 1.
double normalize(int level, int levels);

bool is_valid_identifier(std::string_view name);

// Throws ValidationError if overrides or series refer to unknown elements
// or carry out-of-range levels.
void validate_scenario(const Model& model, const Scenario& scenario);

// Precedence at step 0: series value > scenario override > element default.
State initial_state(const Model& model, const Scenario& scenario);

// Score of an expression against a state: element refs normalize, min/max
// combine element-wise, weighted sums average by total weight.
double evaluate_expression(const Expression& e, const State& state, const Model& model);

// Next level for the rule-bearing element at `target_index`.
int next_value_incremental(const IncrementalRule& rule, std::size_t target_index,
                           const State& state, const Model& model);

bool rules_equivalent(const UpdateRule& a, const UpdateRule& b);
bool models_equivalent(const Model& a, const Model& b);

}  // namespace hemsim
