#pragma once

#include <stdexcept>
#include <string>

namespace hbflow {

/// Argument outside an operation's documented domain.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Mesh unusable for the requested operation (e.g. no interior vertex).
class InvalidMesh : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public std::invalid_argument {
public:
    DimensionMismatch(const std::string& where, std::size_t expected, std::size_t got)
        : std::invalid_argument(where + ": expected length " + std::to_string(expected) +
                                ", got " + std::to_string(got))
    {
    }
};

/// A search direction with nonnegative slope was handed to the line search.
class NotDescentDirection : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The objective returned NaN or Inf at a trial point.
class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unusable run configuration: unknown key, unparsable value, unknown preset.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace hbflow
