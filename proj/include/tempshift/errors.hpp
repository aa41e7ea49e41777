#pragma once

#include <stdexcept>
#include <string>

namespace tempshift {

/// Invalid configuration: window geometry, model spec, experiment config.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent data: shapes, files, labels.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite loss or other optimisation failure.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A metric that is undefined for the given labels (e.g. a single class).
class MetricError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Broken internal invariant.
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace tempshift
