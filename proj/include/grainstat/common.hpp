#pragma once

#include <stdexcept>
#include <string>

namespace grainstat {

// Configuration / schema problems: reported with a path into the offending
// JSON document, mapped to a dedicated process exit code by the CLI.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// A model that is structurally valid but violates one of the sampling
// preconditions (intensity bound exceeded, unbounded shape family, ...).
class model_error : public std::runtime_error {
public:
    explicit model_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace grainstat
