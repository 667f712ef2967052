#pragma once

#include <stdexcept>

namespace qsv {

/// Base class for all toolkit errors.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input values or a broken type invariant. CLI exit code 2.
class validation_error : public error {
public:
    using error::error;
};

/// Malformed input file. Messages name the offending location. CLI exit code 2.
class ingestion_error : public validation_error {
public:
    using validation_error::validation_error;
};

/// A stored artifact fails its internal consistency check (e.g. a criterion
/// whose factor trail no longer reproduces its rate). CLI exit code 2.
class integrity_error : public validation_error {
public:
    using validation_error::validation_error;
};

/// A numerical routine failed to converge or left its valid domain.
/// CLI exit code 3.
class numerical_error : public error {
public:
    using error::error;
};

/// A statistical test protocol was violated, e.g. extending a test that has
/// already concluded. CLI exit code 4.
class protocol_error : public error {
public:
    using error::error;
};

} // namespace qsv
