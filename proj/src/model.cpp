#include "hemsim/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "hemsim/error.hpp"
#include "hemsim/lookup_table.hpp"

namespace hemsim {

bool is_valid_identifier(std::string_view name) {
    if (name.empty()) return false;
    char first = name[0];
    if (!std::isalpha(static_cast<unsigned char>(first)) && first != '_') return false;
    for (char c : name) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    }
    return true;
}

double normalize(int level, int levels) {
    if (levels < 2) throw ValidationError("level count must be at least 2");
    if (level < 0 || level >= levels) {
        throw ValidationError("level " + std::to_string(level) + " out of range [0, " +
                              std::to_string(levels - 1) + "]");
    }
    return static_cast<double>(level) / static_cast<double>(levels - 1);
}

bool Model::has_element(const std::string& name) const {
    return index_.find(name) != index_.end();
}

std::size_t Model::index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ValidationError("unknown element '" + name + "'");
    return it->second;
}

Model build_model(std::vector<Element> elements,
                  std::vector<Influence> influences,
                  std::map<std::string, UpdateRule> rules) {
    Model m;
    m.elements_ = std::move(elements);
    m.influences_ = std::move(influences);
    m.rules_ = std::move(rules);

    for (std::size_t i = 0; i < m.elements_.size(); ++i) {
        const Element& e = m.elements_[i];
        if (!is_valid_identifier(e.name))
            throw ValidationError("invalid element name '" + e.name + "'");
        if (!m.index_.emplace(e.name, i).second)
            throw ValidationError("duplicate element name '" + e.name + "'");
        if (e.levels < 2)
            throw ValidationError("element '" + e.name + "' needs at least 2 levels");
        if (e.initial_level < 0 || e.initial_level >= e.levels)
            throw ValidationError("element '" + e.name + "' initial level out of range");
    }

    std::vector<int> incoming(m.elements_.size(), 0);
    for (const Influence& inf : m.influences_) {
        if (!m.has_element(inf.source))
            throw ValidationError("influence source '" + inf.source + "' is not an element");
        if (!m.has_element(inf.target))
            throw ValidationError("influence target '" + inf.target + "' is not an element");
        if (inf.weight < 1)
            throw ValidationError("influence " + inf.source + " -> " + inf.target +
                                  " must have a positive weight");
        ++incoming[m.index_of(inf.target)];
    }

    m.rule_by_index_.assign(m.elements_.size(), nullptr);
    for (const auto& [name, rule] : m.rules_) {
        if (!m.has_element(name))
            throw ValidationError("rule on unknown element '" + name + "'");
        std::size_t idx = m.index_of(name);
        if (incoming[idx] == 0)
            throw ValidationError("rule on input element '" + name +
                                  "' (it has no incoming influences)");

        if (const auto* inc = std::get_if<IncrementalRule>(&rule)) {
            if (!inc->positive && !inc->negative)
                throw ValidationError("rule on '" + name +
                                      "' needs a positive or negative expression");
            for (const ExprPtr& side : {inc->positive, inc->negative}) {
                if (!side) continue;
                for (const std::string& ref : referenced_elements(*side)) {
                    if (!m.has_element(ref))
                        throw ValidationError("rule on '" + name +
                                              "' references unknown element '" + ref + "'");
                }
            }
        } else {
            const auto& lut = std::get<LookupRule>(rule);
            if (!lut.table) throw ValidationError("lookup rule on '" + name + "' has no table");
            if (lut.input_elements.size() != lut.table->inputs().size())
                throw ValidationError("lookup rule on '" + name + "' maps " +
                                      std::to_string(lut.input_elements.size()) +
                                      " elements onto a " +
                                      std::to_string(lut.table->inputs().size()) +
                                      "-input table");
            for (std::size_t i = 0; i < lut.input_elements.size(); ++i) {
                const std::string& ref = lut.input_elements[i];
                if (!m.has_element(ref))
                    throw ValidationError("rule on '" + name +
                                          "' references unknown element '" + ref + "'");
                int want = lut.table->inputs()[i].levels;
                int have = m.elements_[m.index_of(ref)].levels;
                if (want != have)
                    throw ValidationError("lookup rule on '" + name + "': element '" + ref +
                                          "' has " + std::to_string(have) +
                                          " levels but the table input expects " +
                                          std::to_string(want));
            }
            if (lut.table->output().levels != m.elements_[idx].levels)
                throw ValidationError("lookup rule on '" + name + "': table output has " +
                                      std::to_string(lut.table->output().levels) +
                                      " levels but the element has " +
                                      std::to_string(m.elements_[idx].levels));
        }
        m.rule_by_index_[idx] = &m.rules_.at(name);
    }

    for (std::size_t i = 0; i < m.elements_.size(); ++i) {
        if (incoming[i] > 0 && m.rule_by_index_[i] == nullptr)
            throw ValidationError("element '" + m.elements_[i].name +
                                  "' has incoming influences but no rule");
        if (m.rule_by_index_[i] != nullptr) m.rule_indices_.push_back(i);
    }
    return m;
}

void validate_scenario(const Model& model, const Scenario& scenario) {
    if (scenario.steps < 0) throw ValidationError("step count must be non-negative");
    if (scenario.runs < 1) throw ValidationError("run count must be positive");
    for (const auto& [name, level] : scenario.initial_overrides) {
        std::size_t idx = model.index_of(name);
        const Element& e = model.element_at(idx);
        if (level < 0 || level >= e.levels)
            throw ValidationError("initial override for '" + name + "' out of range");
    }
    for (const auto& [name, series] : scenario.series) {
        std::size_t idx = model.index_of(name);
        const Element& e = model.element_at(idx);
        for (const auto& [step, level] : series.points) {
            if (step < 0)
                throw ValidationError("series for '" + name + "' has a negative step index");
            if (level < 0 || level >= e.levels)
                throw ValidationError("series for '" + name + "' has level " +
                                      std::to_string(level) + " out of range at step " +
                                      std::to_string(step));
        }
    }
}

State initial_state(const Model& model, const Scenario& scenario) {
    State state;
    state.levels.resize(model.size());
    for (std::size_t i = 0; i < model.size(); ++i)
        state.levels[i] = model.element_at(i).initial_level;
    for (const auto& [name, level] : scenario.initial_overrides)
        state.levels[model.index_of(name)] = level;
    // A series value defined at step 0 binds strongest.
    for (const auto& [name, series] : scenario.series) {
        if (auto forced = series.at(0)) state.levels[model.index_of(name)] = *forced;
    }
    return state;
}

double evaluate_expression(const Expression& e, const State& state, const Model& model) {
    return evaluate_expression(e, [&](const std::string& name) {
        std::size_t idx = model.index_of(name);
        return normalize(state.levels[idx], model.element_at(idx).levels);
    });
}

int next_value_incremental(const IncrementalRule& rule, std::size_t target_index,
                           const State& state, const Model& model) {
    double pos = rule.positive ? evaluate_expression(*rule.positive, state, model) : 0.0;
    double neg = rule.negative ? evaluate_expression(*rule.negative, state, model) : 0.0;
    int levels = model.element_at(target_index).levels;
    int current = state.levels[target_index];

    int delta = 0;
    if (rule.positive && !rule.negative && pos == 0.0) {
        // Nothing to compensate for the absent negative side: decrease.
        delta = -1;
    } else if (rule.negative && !rule.positive && neg == 0.0) {
        delta = +1;
    } else if (rule.mode == IncrementMode::step) {
        delta = (pos > neg) ? +1 : -1;
    } else {
        delta = static_cast<int>(std::llround((pos - neg) * (levels - 1)));
        // A rounded-out tie keeps the step-mode rule at the finest scale.
        if (rule.positive && rule.negative && delta == 0 && pos <= neg) delta = -1;
    }
    return std::clamp(current + delta, 0, levels - 1);
}

bool rules_equivalent(const UpdateRule& a, const UpdateRule& b) {
    if (a.index() != b.index()) return false;
    if (const auto* ia = std::get_if<IncrementalRule>(&a)) {
        const auto& ib = std::get<IncrementalRule>(b);
        if (ia->mode != ib.mode) return false;
        if (static_cast<bool>(ia->positive) != static_cast<bool>(ib.positive)) return false;
        if (static_cast<bool>(ia->negative) != static_cast<bool>(ib.negative)) return false;
        if (ia->positive && !structurally_equal(*ia->positive, *ib.positive)) return false;
        if (ia->negative && !structurally_equal(*ia->negative, *ib.negative)) return false;
        return true;
    }
    const auto& la = std::get<LookupRule>(a);
    const auto& lb = std::get<LookupRule>(b);
    if (la.input_elements != lb.input_elements) return false;
    if (la.policy != lb.policy) return false;
    if (!la.table || !lb.table) return la.table == lb.table;
    return *la.table == *lb.table;
}

bool models_equivalent(const Model& a, const Model& b) {
    if (a.elements() != b.elements()) return false;
    if (a.influences() != b.influences()) return false;
    const auto& ra = a.rules();
    const auto& rb = b.rules();
    if (ra.size() != rb.size()) return false;
    for (const auto& [name, rule] : ra) {
        auto it = rb.find(name);
        if (it == rb.end() || !rules_equivalent(rule, it->second)) return false;
    }
    return true;
}

}  // namespace hemsim
