// errors.hpp -- exception types shared across the qfloor library

#pragma once

#include <stdexcept>
#include <string>

namespace qfloor {

/// Distance or attack requested against a property with no members.
class EmptyPropertyError : public std::invalid_argument {
public:
    explicit EmptyPropertyError(const std::string& what)
      : std::invalid_argument(what) {}
};

/// Attack instance built from a word that already satisfies the property.
class DegenerateInstanceError : public std::invalid_argument {
public:
    explicit DegenerateInstanceError(const std::string& what)
      : std::invalid_argument(what) {}
};

/// A stepwise tester emitted more distinct queries than its declared budget,
/// or failed to decide within the harness step cap.
class BudgetViolationError : public std::runtime_error {
public:
    explicit BudgetViolationError(const std::string& what)
      : std::runtime_error(what) {}
};

/// A stepwise tester asked for a position outside [0, n).
class InvalidQueryError : public std::runtime_error {
public:
    explicit InvalidQueryError(const std::string& what)
      : std::runtime_error(what) {}
};

/// A decision tree failed structural validation.
class TreeValidationError : public std::invalid_argument {
public:
    explicit TreeValidationError(const std::string& what)
      : std::invalid_argument(what) {}
};

/// Unrolling a stepwise tester ran out of the declared coin space.
class CoinSpaceExhaustedError : public std::runtime_error {
public:
    explicit CoinSpaceExhaustedError(const std::string& what)
      : std::runtime_error(what) {}
};

/// An exhaustive sweep was requested over a word space larger than the
/// configured bound. Refused outright; never silently sampled.
class EnumerationBoundError : public std::runtime_error {
public:
    explicit EnumerationBoundError(const std::string& what)
      : std::runtime_error(what) {}
};

/// A parameter fails one of the named validity inequalities.
class ParameterRangeError : public std::invalid_argument {
public:
    explicit ParameterRangeError(const std::string& what)
      : std::invalid_argument(what) {}
};

/// The requested evaluation mode is not available for this tester form
/// (e.g. exact analysis without a decision-tree form).
class ModeUnavailableError : public std::invalid_argument {
public:
    explicit ModeUnavailableError(const std::string& what)
      : std::invalid_argument(what) {}
};

} // namespace qfloor
