#pragma once

#include <stdexcept>
#include <string>

namespace palsim {

// Bad call-site values: out-of-range indices, mismatched shapes.
class argument_error : public std::invalid_argument {
public:
    explicit argument_error(const std::string& what) : std::invalid_argument(what) {}
};

// Inconsistent configuration: singular CCM, stack/sensor pitch mismatch,
// kernel exceeding pupil-grid support.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Unreadable or malformed files.
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// A measurement could not be taken from otherwise valid input
// (e.g. no detectable slanted edge in an SFR patch).
class measurement_error : public std::runtime_error {
public:
    explicit measurement_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace palsim
