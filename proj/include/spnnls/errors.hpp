#pragma once

#include <stdexcept>
#include <string>

namespace spnnls {

/// Base class for all errors thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IndexOutOfRange : Error {
    using Error::Error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

/// A Cholesky pivot was nonpositive, denormal, or not finite.
struct NotPositiveDefinite : Error {
    using Error::Error;
};

/// The pivoting loop exceeded its iteration budget without reaching
/// a feasible complementary solution.
struct IterationLimit : Error {
    using Error::Error;
};

/// An exchange was requested on a state with no infeasible variables.
struct NoInfeasible : Error {
    using Error::Error;
};

/// Exhaustive-enumeration guard tripped.
struct TooLarge : Error {
    using Error::Error;
};

/// Enumeration found no feasible support (rank-deficient input).
struct NoFeasibleBasis : Error {
    using Error::Error;
};

/// Generator parameters are inconsistent.
struct InvalidSpec : Error {
    using Error::Error;
};

/// The matrix passed to an iterative solver has numerical norm zero.
struct ZeroMatrix : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

struct UnsupportedFormat : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace spnnls
