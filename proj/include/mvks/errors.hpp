#pragma once

#include <stdexcept>
#include <string>

namespace mvks {

/// Argument outside the mathematical domain of an operation (t <= 0, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Inconsistent inputs: mismatched grids, unpopulated history rows, ...
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The time-marching scheme lost mass beyond tolerance.
class InstabilityError : public std::runtime_error {
public:
    InstabilityError(const std::string& what, long step)
        : std::runtime_error(what), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

/// The contraction horizon D(T) is infinite for every T > 0.
class NoHorizonError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An adaptive quadrature did not reach its tolerance.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace mvks
