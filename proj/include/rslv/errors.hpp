#pragma once

#include <stdexcept>
#include <string>

namespace rslv {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Condition (C) could not be established for the supplied matrix.
class CertificateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical routine failed (singular solve, NaN, broken invariant).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Call-price input violates static no-arbitrage constraints.
class ArbitrageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A constructive search ran out of budget. Not a proof of infeasibility.
class SearchFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed experiment configuration or input file.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rslv
