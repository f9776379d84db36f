#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tnale {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor dimensions or indices that do not line up.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A core set that does not match the bonds of its structure.
class ConformanceError : public Error {
public:
    using Error::Error;
};

/// Structure or permutation that violates its invariants.
class StructureError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

/// The inner solver produced non-finite values.
class SolverDivergence : public Error {
public:
    SolverDivergence(std::size_t iteration, const std::string& what)
        : Error(what + " (iteration " + std::to_string(iteration) + ")"), iteration_(iteration) {}

    [[nodiscard]] std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

/// The explicit-evaluation budget of a search is spent.
class BudgetExhausted : public Error {
public:
    using Error::Error;
};

/// An enumeration grid larger than the configured cap.
class GridCapExceeded : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace tnale
