#pragma once

#include <stdexcept>
#include <string>

namespace noiselab {

// Malformed domain/loss parameters: non-positive sigma, mismatched mean dims, delta out of (0,1) ...
class SpecError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace noiselab
