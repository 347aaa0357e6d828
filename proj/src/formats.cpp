#include "hemsim/formats.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hemsim/error.hpp"

namespace fs = std::filesystem;

namespace hemsim {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    std::size_t begin = 0, end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

long long parse_int(const std::string& text, const std::string& what) {
    long long value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw ValidationError(what + ": '" + text + "' is not an integer");
    return value;
}

double parse_double(const std::string& text, const std::string& what) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw ValidationError(what + ": '" + text + "' is not a number");
    return value;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            parts.push_back(trim(s.substr(start)));
            break;
        }
        parts.push_back(trim(s.substr(start, pos - start)));
        start = pos + 1;
    }
    return parts;
}

// Whitespace-separated tokens; a key="..." token keeps spaces inside quotes.
std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i >= line.size()) break;
        std::string token;
        bool in_quotes = false;
        while (i < line.size() &&
               (in_quotes || !std::isspace(static_cast<unsigned char>(line[i])))) {
            if (line[i] == '"') {
                in_quotes = !in_quotes;
            }
            token += line[i];
            ++i;
        }
        if (in_quotes) throw ValidationError("unterminated quote in line: " + line);
        tokens.push_back(std::move(token));
    }
    return tokens;
}

// "key=value" or "key=\"value\"" -> {key, value}.
std::pair<std::string, std::string> split_attr(const std::string& token) {
    std::size_t eq = token.find('=');
    if (eq == std::string::npos)
        throw ValidationError("expected key=value, got '" + token + "'");
    std::string key = token.substr(0, eq);
    std::string value = token.substr(eq + 1);
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
        value = value.substr(1, value.size() - 2);
    return {key, value};
}

Sign parse_sign(const std::string& text) {
    if (text == "positive") return Sign::positive;
    if (text == "negative") return Sign::negative;
    throw ValidationError("influence sign must be positive or negative, got '" + text + "'");
}

IncrementMode parse_mode(const std::string& text) {
    if (text == "step") return IncrementMode::step;
    if (text == "proportional") return IncrementMode::proportional;
    throw ValidationError("mode must be step or proportional, got '" + text + "'");
}

MissingPolicy parse_policy(const std::string& text) {
    if (text == "error") return MissingPolicy::error;
    if (text == "hold") return MissingPolicy::hold;
    if (text == "nearest") return MissingPolicy::nearest;
    throw ValidationError("policy must be error, hold, or nearest, got '" + text + "'");
}

const char* policy_name(MissingPolicy p) {
    switch (p) {
        case MissingPolicy::error: return "error";
        case MissingPolicy::hold: return "hold";
        case MissingPolicy::nearest: return "nearest";
    }
    return "hold";
}

std::string resolve(const std::string& path, const std::string& base_dir) {
    fs::path p(path);
    if (p.is_absolute() || base_dir.empty()) return path;
    return (fs::path(base_dir) / p).string();
}

}  // namespace

TimeSeries parse_inline_series(const std::string& spec) {
    TimeSeries series;
    for (const std::string& pair : split(spec, ',')) {
        auto parts = split(pair, ':');
        if (parts.size() != 2)
            throw ValidationError("inline series entry '" + pair + "' is not step:level");
        int step = static_cast<int>(parse_int(parts[0], "series step"));
        int level = static_cast<int>(parse_int(parts[1], "series level"));
        if (!series.points.emplace(step, level).second)
            throw ValidationError("inline series repeats step " + parts[0]);
    }
    if (series.points.empty()) throw ValidationError("inline series is empty");
    return series;
}

std::string format_inline_series(const TimeSeries& series) {
    std::string out;
    for (const auto& [step, level] : series.points) {
        if (!out.empty()) out += ',';
        out += std::to_string(step) + ':' + std::to_string(level);
    }
    return out;
}

TimeSeries read_series_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open series file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path + ": empty series file");
    auto header = split(line, ',');
    if (header.size() != 2 || header[0] != "step" || header[1] != "level")
        throw ValidationError(path + ": series header must be 'step,level'");
    TimeSeries series;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split(line, ',');
        if (fields.size() != 2)
            throw ValidationError(path + ": line " + std::to_string(line_no) +
                                  " is not 'step,level'");
        int step = static_cast<int>(parse_int(fields[0], path + " step"));
        int level = static_cast<int>(parse_int(fields[1], path + " level"));
        if (!series.points.emplace(step, level).second)
            throw ValidationError(path + ": repeated step " + fields[0]);
    }
    if (series.points.empty()) throw ValidationError(path + ": series has no points");
    return series;
}

void write_series_file(const std::string& path, const TimeSeries& series) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write series file '" + path + "'");
    out << "step,level\n";
    for (const auto& [step, level] : series.points) out << step << ',' << level << '\n';
}

std::pair<std::string, Quantizer> parse_quantizer_spec(const std::string& spec) {
    auto parts = split(spec, ':');
    if (parts.size() != 4)
        throw ValidationError("quantizer spec '" + spec + "' is not name:min:max:levels");
    double lo = parse_double(parts[1], "quantizer min");
    double hi = parse_double(parts[2], "quantizer max");
    int levels = static_cast<int>(parse_int(parts[3], "quantizer levels"));
    return {parts[0], make_uniform_thresholds(lo, hi, levels)};
}

// ---------------------------------------------------------------------------
// Lookup-table files

LutFile read_lut_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open lookup-table file '" + path + "'");

    std::vector<TableVariable> inputs;
    std::optional<TableVariable> output;
    MissingPolicy policy = MissingPolicy::hold;
    std::map<std::string, Quantizer> quantizers;
    long long entry_count = -1;

    auto parse_variable = [&](const std::string& text) {
        auto parts = split(text, ':');
        if (parts.size() != 2)
            throw ValidationError(path + ": variable '" + text + "' is not name:levels");
        return TableVariable{parts[0], static_cast<int>(parse_int(parts[1], "level count"))};
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto tokens = tokenize(line);
        const std::string& key = tokens[0];
        if (key == "inputs") {
            if (tokens.size() != 2) throw ValidationError(path + ": inputs needs one value");
            for (const std::string& v : split(tokens[1], ','))
                inputs.push_back(parse_variable(v));
        } else if (key == "output") {
            if (tokens.size() != 2) throw ValidationError(path + ": output needs one value");
            output = parse_variable(tokens[1]);
        } else if (key == "policy") {
            if (tokens.size() != 2) throw ValidationError(path + ": policy needs one value");
            policy = parse_policy(tokens[1]);
        } else if (key == "quantizer") {
            if (tokens.size() < 5)
                throw ValidationError(path + ": quantizer needs name and min/max/levels");
            std::string name = tokens[1];
            double lo = 0.0, hi = 1.0;
            int levels = 0;
            std::vector<double> thresholds;
            for (std::size_t i = 2; i < tokens.size(); ++i) {
                auto [k, v] = split_attr(tokens[i]);
                if (k == "min") lo = parse_double(v, "quantizer min");
                else if (k == "max") hi = parse_double(v, "quantizer max");
                else if (k == "levels") levels = static_cast<int>(parse_int(v, "levels"));
                else if (k == "thresholds") {
                    for (const std::string& t : split(v, ','))
                        thresholds.push_back(parse_double(t, "threshold"));
                } else {
                    throw ValidationError(path + ": unknown quantizer key '" + k + "'");
                }
            }
            quantizers.emplace(name, make_quantizer(lo, hi, levels, std::move(thresholds)));
        } else if (key == "entries") {
            if (tokens.size() != 2) throw ValidationError(path + ": entries needs a count");
            entry_count = parse_int(tokens[1], "entry count");
            break;
        } else {
            throw ValidationError(path + ": unknown key '" + key + "' at line " +
                                  std::to_string(line_no));
        }
    }

    if (inputs.empty()) throw ValidationError(path + ": missing inputs declaration");
    if (!output) throw ValidationError(path + ": missing output declaration");
    if (entry_count < 0) throw ValidationError(path + ": missing entries block");

    LutFile file;
    file.table = std::make_shared<LookupTable>(inputs, *output, policy);
    file.quantizers = std::move(quantizers);

    long long seen = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto fields = split(line, ',');
        if (fields.size() != inputs.size() + 1)
            throw ValidationError(path + ": entry at line " + std::to_string(line_no) +
                                  " has arity " + std::to_string(fields.size()) +
                                  ", expected " + std::to_string(inputs.size() + 1));
        std::vector<int> key(inputs.size());
        for (std::size_t i = 0; i < inputs.size(); ++i)
            key[i] = static_cast<int>(parse_int(fields[i], "entry level"));
        int value = static_cast<int>(parse_int(fields.back(), "entry output level"));
        file.table->insert(key, value);
        ++seen;
    }
    if (seen != entry_count)
        throw ValidationError(path + ": declared " + std::to_string(entry_count) +
                              " entries but found " + std::to_string(seen));
    return file;
}

void write_lut_file(const std::string& path, const LookupTable& table,
                    const std::map<std::string, Quantizer>& quantizers) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write lookup-table file '" + path + "'");

    out << "inputs ";
    for (std::size_t i = 0; i < table.inputs().size(); ++i) {
        if (i > 0) out << ',';
        out << table.inputs()[i].name << ':' << table.inputs()[i].levels;
    }
    out << "\noutput " << table.output().name << ':' << table.output().levels;
    out << "\npolicy " << policy_name(table.default_policy()) << '\n';

    auto write_quantizer = [&](const std::string& name) {
        auto it = quantizers.find(name);
        if (it == quantizers.end()) return;
        const Quantizer& q = it->second;
        out << "quantizer " << name << " min=" << fmt_double(q.min)
            << " max=" << fmt_double(q.max) << " levels=" << q.levels << " thresholds=";
        for (std::size_t i = 0; i < q.thresholds.size(); ++i) {
            if (i > 0) out << ',';
            out << fmt_double(q.thresholds[i]);
        }
        out << '\n';
    };
    for (const TableVariable& v : table.inputs()) write_quantizer(v.name);
    write_quantizer(table.output().name);

    out << "entries " << table.filled() << '\n';
    for (const auto& [key, value] : table.entries()) {
        for (int k : key) out << k << ',';
        out << value << '\n';
    }
}

// ---------------------------------------------------------------------------
// Model definition files

namespace {

enum class Section { none, elements, influences, rules, series, scenario };

Section parse_section(const std::string& name, const std::string& context) {
    if (name == "elements") return Section::elements;
    if (name == "influences") return Section::influences;
    if (name == "rules") return Section::rules;
    if (name == "series") return Section::series;
    if (name == "scenario") return Section::scenario;
    throw ValidationError(context + ": unknown section [" + name + "]");
}

}  // namespace

ModelDocument parse_model_text(const std::string& text, const std::string& base_dir) {
    std::vector<Element> elements;
    std::vector<Influence> influences;
    std::map<std::string, UpdateRule> rules;
    ModelDocument doc;

    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    Section section = Section::none;

    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const std::string where = "line " + std::to_string(line_no);

        if (line.front() == '[') {
            if (line.back() != ']') throw ValidationError(where + ": malformed section header");
            section = parse_section(line.substr(1, line.size() - 2), where);
            continue;
        }

        auto tokens = tokenize(line);
        switch (section) {
            case Section::none:
                throw ValidationError(where + ": content before any [section]");

            case Section::elements: {
                if (tokens.size() != 3)
                    throw ValidationError(where + ": element line must be 'name levels initial'");
                Element e;
                e.name = tokens[0];
                e.levels = static_cast<int>(parse_int(tokens[1], where + " levels"));
                e.initial_level = static_cast<int>(parse_int(tokens[2], where + " initial"));
                elements.push_back(std::move(e));
                break;
            }

            case Section::influences: {
                if (tokens.size() != 4)
                    throw ValidationError(where +
                                          ": influence line must be 'source sign weight target'");
                Influence inf;
                inf.source = tokens[0];
                inf.sign = parse_sign(tokens[1]);
                inf.weight = static_cast<int>(parse_int(tokens[2], where + " weight"));
                inf.target = tokens[3];
                influences.push_back(std::move(inf));
                break;
            }

            case Section::rules: {
                if (tokens.size() < 2)
                    throw ValidationError(where + ": rule line must be 'element kind ...'");
                const std::string& element = tokens[0];
                const std::string& kind = tokens[1];
                if (rules.count(element))
                    throw ValidationError(where + ": second rule for element '" + element + "'");

                if (kind == "incremental") {
                    IncrementalRule rule;
                    for (std::size_t i = 2; i < tokens.size(); ++i) {
                        auto [k, v] = split_attr(tokens[i]);
                        if (k == "pos") rule.positive = parse_rule_expression(v);
                        else if (k == "neg") rule.negative = parse_rule_expression(v);
                        else if (k == "mode") rule.mode = parse_mode(v);
                        else throw ValidationError(where + ": unknown rule key '" + k + "'");
                    }
                    rules.emplace(element, std::move(rule));
                } else if (kind == "lookup") {
                    std::string table_path;
                    std::optional<MissingPolicy> policy;
                    std::vector<std::string> input_elements;
                    for (std::size_t i = 2; i < tokens.size(); ++i) {
                        auto [k, v] = split_attr(tokens[i]);
                        if (k == "table") table_path = v;
                        else if (k == "policy") policy = parse_policy(v);
                        else if (k == "inputs") input_elements = split(v, ',');
                        else throw ValidationError(where + ": unknown rule key '" + k + "'");
                    }
                    if (table_path.empty())
                        throw ValidationError(where + ": lookup rule needs table=\"...\"");
                    LutFile lut = read_lut_file(resolve(table_path, base_dir));
                    LookupRule rule;
                    rule.policy = policy.value_or(lut.table->default_policy());
                    if (input_elements.empty()) {
                        for (const TableVariable& v : lut.table->inputs())
                            input_elements.push_back(v.name);
                    }
                    rule.input_elements = std::move(input_elements);
                    rule.table = std::move(lut.table);
                    rules.emplace(element, std::move(rule));
                    doc.table_sources[element] = table_path;
                } else {
                    throw ValidationError(where + ": rule kind must be incremental or lookup");
                }
                break;
            }

            case Section::series: {
                if (tokens.size() != 2)
                    throw ValidationError(where + ": series line must be 'element source'");
                const std::string& element = tokens[0];
                auto [k, v] = split_attr(tokens[1]);
                if (doc.scenario.series.count(element))
                    throw ValidationError(where + ": second series for element '" + element + "'");
                if (k == "file") {
                    doc.scenario.series[element] = read_series_file(resolve(v, base_dir));
                    doc.series_sources[element] = "file:" + v;
                } else if (k == "inline") {
                    doc.scenario.series[element] = parse_inline_series(v);
                    doc.series_sources[element] = "inline:" + v;
                } else {
                    throw ValidationError(where + ": series source must be file= or inline=");
                }
                break;
            }

            case Section::scenario: {
                const std::string& key = tokens[0];
                if (key == "steps" && tokens.size() == 2) {
                    doc.scenario.steps = static_cast<int>(parse_int(tokens[1], where));
                } else if (key == "runs" && tokens.size() == 2) {
                    doc.scenario.runs = static_cast<int>(parse_int(tokens[1], where));
                } else if (key == "seed" && tokens.size() == 2) {
                    doc.scenario.master_seed =
                        static_cast<std::uint64_t>(parse_int(tokens[1], where));
                } else if (key == "init" && tokens.size() == 3) {
                    doc.scenario.initial_overrides[tokens[1]] =
                        static_cast<int>(parse_int(tokens[2], where));
                } else {
                    throw ValidationError(where + ": unknown scenario entry '" + line + "'");
                }
                break;
            }
        }
    }
    doc.model = build_model(std::move(elements), std::move(influences), std::move(rules));
    validate_scenario(doc.model, doc.scenario);
    return doc;
}

ModelDocument parse_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open model file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_model_text(buffer.str(), fs::path(path).parent_path().string());
    } catch (const ValidationError& err) {
        throw ValidationError(path + ": " + err.what());
    }
}

std::string serialize_model_document(const ModelDocument& doc) {
    std::ostringstream out;
    const Model& m = doc.model;

    out << "[elements]\n";
    for (const Element& e : m.elements())
        out << e.name << ' ' << e.levels << ' ' << e.initial_level << '\n';

    if (!m.influences().empty()) {
        out << "\n[influences]\n";
        for (const Influence& inf : m.influences()) {
            out << inf.source << ' ' << (inf.sign == Sign::positive ? "positive" : "negative")
                << ' ' << inf.weight << ' ' << inf.target << '\n';
        }
    }

    if (!m.rules().empty()) {
        out << "\n[rules]\n";
        for (const auto& [name, rule] : m.rules()) {
            if (const auto* inc = std::get_if<IncrementalRule>(&rule)) {
                out << name << " incremental";
                if (inc->positive)
                    out << " pos=\"" << print_expression(*inc->positive) << '"';
                if (inc->negative)
                    out << " neg=\"" << print_expression(*inc->negative) << '"';
                out << " mode="
                    << (inc->mode == IncrementMode::step ? "step" : "proportional") << '\n';
            } else {
                const auto& lut = std::get<LookupRule>(rule);
                auto src = doc.table_sources.find(name);
                if (src == doc.table_sources.end())
                    throw ValidationError("no table path recorded for rule on '" + name + "'");
                out << name << " lookup table=\"" << src->second << "\" policy="
                    << policy_name(lut.policy) << " inputs=\"";
                for (std::size_t i = 0; i < lut.input_elements.size(); ++i) {
                    if (i > 0) out << ',';
                    out << lut.input_elements[i];
                }
                out << "\"\n";
            }
        }
    }

    if (!doc.scenario.series.empty()) {
        out << "\n[series]\n";
        for (const auto& [name, series] : doc.scenario.series) {
            auto src = doc.series_sources.find(name);
            if (src != doc.series_sources.end() && src->second.rfind("file:", 0) == 0) {
                out << name << " file=\"" << src->second.substr(5) << "\"\n";
            } else {
                out << name << " inline=\"" << format_inline_series(series) << "\"\n";
            }
        }
    }

    out << "\n[scenario]\n";
    out << "steps " << doc.scenario.steps << '\n';
    out << "runs " << doc.scenario.runs << '\n';
    out << "seed " << doc.scenario.master_seed << '\n';
    for (const auto& [name, level] : doc.scenario.initial_overrides)
        out << "init " << name << ' ' << level << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// Trace outputs

void write_aggregate_csv(std::ostream& out, const Model& model, const TraceSet& traces) {
    out << "step,element,levels,mean,std\n";
    if (traces.mean.empty()) return;
    const std::size_t n_steps = traces.mean[0].size();
    for (std::size_t t = 0; t < n_steps; ++t) {
        for (std::size_t e = 0; e < model.size(); ++e) {
            out << t << ',' << model.element_at(e).name << ',' << model.element_at(e).levels
                << ',' << fmt_double(traces.mean[e][t]) << ',' << fmt_double(traces.stddev[e][t])
                << '\n';
        }
    }
}

AggregateFile read_aggregate_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open aggregate file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path + ": empty aggregate file");
    if (trim(line) != "step,element,levels,mean,std")
        throw ValidationError(path + ": header must be 'step,element,levels,mean,std'");

    AggregateFile file;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split(line, ',');
        if (fields.size() != 5)
            throw ValidationError(path + ": line " + std::to_string(line_no) +
                                  " has the wrong arity");
        const std::string& element = fields[1];
        if (!file.levels.count(element)) {
            file.elements.push_back(element);
            file.levels[element] = static_cast<int>(parse_int(fields[2], "levels"));
        }
        file.mean[element].push_back(parse_double(fields[3], "mean"));
        file.stddev[element].push_back(parse_double(fields[4], "std"));
    }
    if (file.elements.empty()) throw ValidationError(path + ": no data rows");
    return file;
}

void write_trace_csv(std::ostream& out, const Model& model, const Trace& trace) {
    out << "step";
    for (std::size_t e = 0; e < model.size(); ++e) out << ',' << model.element_at(e).name;
    out << '\n';
    if (trace.levels.empty()) return;
    const std::size_t n_steps = trace.levels[0].size();
    for (std::size_t t = 0; t < n_steps; ++t) {
        out << t;
        for (std::size_t e = 0; e < model.size(); ++e) out << ',' << trace.levels[e][t];
        out << '\n';
    }
}

}  // namespace hemsim
