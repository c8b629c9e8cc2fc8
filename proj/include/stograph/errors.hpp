#pragma once

#include <stdexcept>
#include <string>

namespace stograph {

/// Bad argument value (wrong order, empty list, out-of-range coordinate, ...).
class ParameterError : public std::invalid_argument {
public:
    explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

/// Input outside the mathematical domain of the operation (negative density,
/// zero mass, non-expanding map where expansion is required).
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Unknown catalog or probe name.
class LookupError : public std::out_of_range {
public:
    explicit LookupError(const std::string& what) : std::out_of_range(what) {}
};

/// Operands live on incompatible grids.
class GridMismatchError : public ParameterError {
public:
    explicit GridMismatchError(const std::string& what) : ParameterError(what) {}
};

/// Numerical failure at run time (Newton stall, undefined ratio, bad fit).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// A transfer step failed on a specific fiber.
class StepError : public NumericError {
public:
    StepError(int fiber, const std::string& what)
        : NumericError("fiber " + std::to_string(fiber) + ": " + what), fiber_(fiber) {}
    int fiber() const { return fiber_; }

private:
    int fiber_;
};

class FitError : public NumericError {
public:
    explicit FitError(const std::string& what) : NumericError(what) {}
};

/// Report assembly violation (duplicate or missing probe).
class AssemblyError : public std::runtime_error {
public:
    explicit AssemblyError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace stograph
