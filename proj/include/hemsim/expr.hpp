#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace hemsim {

// Update-rule expression tree. Element references evaluate to the element's
// normalized level in [0, 1]; min/max are the discrete AND/OR combiners; a
// weighted sum averages its terms by total weight so every score stays in
// [0, 1].
struct Expression;
using ExprPtr = std::shared_ptr<const Expression>;

struct WeightedTerm {
    int weight = 1;  // >= 1
    ExprPtr expr;
};

struct Expression {
    enum class Kind { element_ref, weighted_sum, min, max };

    Kind kind = Kind::element_ref;
    std::string name;                 // element_ref only
    std::vector<WeightedTerm> terms;  // weighted_sum only, >= 1 term
    std::vector<ExprPtr> operands;    // min/max only, >= 2 operands
};

ExprPtr make_element_ref(std::string name);
ExprPtr make_weighted_sum(std::vector<WeightedTerm> terms);
ExprPtr make_min(std::vector<ExprPtr> operands);
ExprPtr make_max(std::vector<ExprPtr> operands);

// Grammar:
//   expr   := term ('+' term)*
//   term   := [integer '*'] factor
//   factor := NAME | 'min(' expr (',' expr)+ ')' | 'max(' expr (',' expr)+ ')'
//           | '(' expr ')'
// An omitted weight defaults to 1, and a lone weight-1 term collapses to its
// factor, so parser output is in canonical form: every weighted_sum node has
// two or more terms, or a single term with weight > 1.
ExprPtr parse_rule_expression(std::string_view text);

// Inverse of the parser over canonical trees: parse(print(e)) is
// structurally equal to e.
std::string print_expression(const Expression& e);

bool structurally_equal(const Expression& a, const Expression& b);

// Every element name referenced in the tree, duplicates removed,
// in first-appearance order.
std::vector<std::string> referenced_elements(const Expression& e);

// value_of must map an element name to its normalized level in [0, 1].
// The result is always in [0, 1].
double evaluate_expression(const Expression& e,
                           const std::function<double(const std::string&)>& value_of);

}  // namespace hemsim
