#pragma once

#include <stdexcept>
#include <string>

namespace hemsim {

// Structural problems in models, scenarios, datasets, or definition files.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Errors raised while a simulation is running, e.g. a lookup-table miss
// under the `error` missing-entry policy. Carries enough context in the
// message to locate the offending step/element/tuple.
class SimulationError : public std::runtime_error {
public:
    explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

// Rule-expression syntax errors; position is a 0-based byte offset.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t position)
        : std::runtime_error(what + " (at position " + std::to_string(position) + ")"),
          position_(position) {}

    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

}  // namespace hemsim
