#pragma once

#include <stdexcept>
#include <string>

namespace robust_ergodic {

/// Parameter or argument outside its admissible set.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A 2x2 coefficient system whose scaled determinant vanished.
class SingularSystem : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NoConvergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InitializationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid simulation configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace robust_ergodic
