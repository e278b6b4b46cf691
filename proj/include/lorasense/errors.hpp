#pragma once

#include <stdexcept>
#include <string>

namespace lorasense {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid numeric input (non-finite measurement, bad distance, bad count,
// dimension mismatch).
class DomainError : public Error {
public:
    using Error::Error;
};

// Invalid scenario or tool configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed input file (bad header, wrong schema, unreadable stream).
class FormatError : public Error {
public:
    using Error::Error;
};

// Conflicting occupancy labels inside one uplink group.
class LabelConflictError : public Error {
public:
    using Error::Error;
};

// Train/test split or fold construction cannot be satisfied.
class SplitError : public Error {
public:
    using Error::Error;
};

// Degenerate training input (single class, empty set).
class TrainingError : public Error {
public:
    using Error::Error;
};

// Fingerprint point without a known position, or unlabeled data where a
// labeled dataset is required.
class MappingError : public Error {
public:
    using Error::Error;
};

} // namespace lorasense
