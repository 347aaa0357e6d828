#include "hemsim/expr.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

#include "hemsim/error.hpp"

namespace hemsim {

ExprPtr make_element_ref(std::string name) {
    auto e = std::make_shared<Expression>();
    e->kind = Expression::Kind::element_ref;
    e->name = std::move(name);
    return e;
}

ExprPtr make_weighted_sum(std::vector<WeightedTerm> terms) {
    if (terms.empty()) throw ValidationError("weighted sum needs at least one term");
    for (const auto& t : terms) {
        if (t.weight < 1) throw ValidationError("weights must be positive integers");
        if (!t.expr) throw ValidationError("weighted sum term is null");
    }
    auto e = std::make_shared<Expression>();
    e->kind = Expression::Kind::weighted_sum;
    e->terms = std::move(terms);
    return e;
}

static ExprPtr make_combinator(Expression::Kind kind, std::vector<ExprPtr> operands) {
    if (operands.size() < 2) throw ValidationError("min/max need at least two operands");
    for (const auto& op : operands) {
        if (!op) throw ValidationError("min/max operand is null");
    }
    auto e = std::make_shared<Expression>();
    e->kind = kind;
    e->operands = std::move(operands);
    return e;
}

ExprPtr make_min(std::vector<ExprPtr> operands) {
    return make_combinator(Expression::Kind::min, std::move(operands));
}

ExprPtr make_max(std::vector<ExprPtr> operands) {
    return make_combinator(Expression::Kind::max, std::move(operands));
}

namespace {

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    ExprPtr parse() {
        skip_ws();
        if (at_end()) throw ParseError("empty expression", pos_);
        ExprPtr e = parse_expr();
        skip_ws();
        if (!at_end()) throw ParseError("unexpected trailing input", pos_);
        return e;
    }

private:
    // expr := term ('+' term)*
    ExprPtr parse_expr() {
        std::vector<WeightedTerm> terms;
        terms.push_back(parse_term());
        skip_ws();
        while (!at_end() && peek() == '+') {
            ++pos_;
            terms.push_back(parse_term());
            skip_ws();
        }
        // A lone weight-1 term collapses to its factor.
        if (terms.size() == 1 && terms[0].weight == 1) return terms[0].expr;
        return make_weighted_sum(std::move(terms));
    }

    // term := [integer '*'] factor
    WeightedTerm parse_term() {
        skip_ws();
        WeightedTerm term;
        if (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
            std::size_t start = pos_;
            long long value = 0;
            while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
                value = value * 10 + (peek() - '0');
                if (value > std::numeric_limits<int>::max())
                    throw ParseError("weight too large", start);
                ++pos_;
            }
            if (value < 1) throw ParseError("weight must be a positive integer", start);
            skip_ws();
            if (at_end() || peek() != '*')
                throw ParseError("expected '*' after weight", pos_);
            ++pos_;
            term.weight = static_cast<int>(value);
        }
        term.expr = parse_factor();
        return term;
    }

    // factor := NAME | 'min(' expr (',' expr)+ ')' | 'max(' expr (',' expr)+ ')' | '(' expr ')'
    ExprPtr parse_factor() {
        skip_ws();
        if (at_end()) throw ParseError("expected a name, min/max, or '('", pos_);
        char c = peek();
        if (c == '(') {
            ++pos_;
            ExprPtr inner = parse_expr();
            expect(')');
            return inner;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            std::string name = scan_identifier();
            if (name == "min" || name == "max") {
                skip_ws();
                if (!at_end() && peek() == '(') {
                    return parse_call(name == "min" ? Expression::Kind::min
                                                    : Expression::Kind::max,
                                      start);
                }
            }
            return make_element_ref(std::move(name));
        }
        throw ParseError("unexpected character '" + std::string(1, c) + "'", pos_);
    }

    ExprPtr parse_call(Expression::Kind kind, std::size_t call_start) {
        expect('(');
        std::vector<ExprPtr> operands;
        operands.push_back(parse_expr());
        skip_ws();
        while (!at_end() && peek() == ',') {
            ++pos_;
            operands.push_back(parse_expr());
            skip_ws();
        }
        expect(')');
        if (operands.size() < 2)
            throw ParseError("min/max need at least two operands", call_start);
        return make_combinator(kind, std::move(operands));
    }

    std::string scan_identifier() {
        std::size_t start = pos_;
        while (!at_end()) {
            char c = peek();
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
                ++pos_;
            } else {
                break;
            }
        }
        return std::string(text_.substr(start, pos_ - start));
    }

    void expect(char c) {
        skip_ws();
        if (at_end() || peek() != c)
            throw ParseError("expected '" + std::string(1, c) + "'", pos_);
        ++pos_;
    }

    void skip_ws() {
        while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
    }

    bool at_end() const { return pos_ >= text_.size(); }
    char peek() const { return text_[pos_]; }

    std::string_view text_;
    std::size_t pos_ = 0;
};

void print_impl(const Expression& e, std::string& out) {
    switch (e.kind) {
        case Expression::Kind::element_ref:
            out += e.name;
            break;
        case Expression::Kind::min:
        case Expression::Kind::max: {
            out += (e.kind == Expression::Kind::min) ? "min(" : "max(";
            for (std::size_t i = 0; i < e.operands.size(); ++i) {
                if (i > 0) out += ", ";
                print_impl(*e.operands[i], out);
            }
            out += ')';
            break;
        }
        case Expression::Kind::weighted_sum: {
            for (std::size_t i = 0; i < e.terms.size(); ++i) {
                if (i > 0) out += " + ";
                const auto& term = e.terms[i];
                if (term.weight != 1) {
                    out += std::to_string(term.weight);
                    out += '*';
                }
                // A sum nested as a term needs parentheses to parse back.
                bool parens = term.expr->kind == Expression::Kind::weighted_sum;
                if (parens) out += '(';
                print_impl(*term.expr, out);
                if (parens) out += ')';
            }
            break;
        }
    }
}

void collect_names(const Expression& e, std::vector<std::string>& out) {
    switch (e.kind) {
        case Expression::Kind::element_ref:
            if (std::find(out.begin(), out.end(), e.name) == out.end())
                out.push_back(e.name);
            break;
        case Expression::Kind::weighted_sum:
            for (const auto& t : e.terms) collect_names(*t.expr, out);
            break;
        case Expression::Kind::min:
        case Expression::Kind::max:
            for (const auto& op : e.operands) collect_names(*op, out);
            break;
    }
}

}  // namespace

ExprPtr parse_rule_expression(std::string_view text) {
    return Parser(text).parse();
}

std::string print_expression(const Expression& e) {
    std::string out;
    print_impl(e, out);
    return out;
}

bool structurally_equal(const Expression& a, const Expression& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Expression::Kind::element_ref:
            return a.name == b.name;
        case Expression::Kind::weighted_sum:
            if (a.terms.size() != b.terms.size()) return false;
            for (std::size_t i = 0; i < a.terms.size(); ++i) {
                if (a.terms[i].weight != b.terms[i].weight) return false;
                if (!structurally_equal(*a.terms[i].expr, *b.terms[i].expr)) return false;
            }
            return true;
        case Expression::Kind::min:
        case Expression::Kind::max:
            if (a.operands.size() != b.operands.size()) return false;
            for (std::size_t i = 0; i < a.operands.size(); ++i) {
                if (!structurally_equal(*a.operands[i], *b.operands[i])) return false;
            }
            return true;
    }
    return false;
}

std::vector<std::string> referenced_elements(const Expression& e) {
    std::vector<std::string> names;
    collect_names(e, names);
    return names;
}

double evaluate_expression(const Expression& e,
                           const std::function<double(const std::string&)>& value_of) {
    switch (e.kind) {
        case Expression::Kind::element_ref:
            return value_of(e.name);
        case Expression::Kind::weighted_sum: {
            double weighted = 0.0;
            long long total_weight = 0;
            for (const auto& t : e.terms) {
                weighted += static_cast<double>(t.weight) * evaluate_expression(*t.expr, value_of);
                total_weight += t.weight;
            }
            return weighted / static_cast<double>(total_weight);
        }
        case Expression::Kind::min: {
            double best = evaluate_expression(*e.operands[0], value_of);
            for (std::size_t i = 1; i < e.operands.size(); ++i)
                best = std::min(best, evaluate_expression(*e.operands[i], value_of));
            return best;
        }
        case Expression::Kind::max: {
            double best = evaluate_expression(*e.operands[0], value_of);
            for (std::size_t i = 1; i < e.operands.size(); ++i)
                best = std::max(best, evaluate_expression(*e.operands[i], value_of));
            return best;
        }
    }
    return 0.0;  // unreachable
}

}  // namespace hemsim
