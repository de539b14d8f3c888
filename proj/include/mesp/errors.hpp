#pragma once

#include <stdexcept>
#include <string>

namespace mesp {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct NotPositiveDefinite : Error {
    explicit NotPositiveDefinite(const std::string& what = "matrix is not positive definite")
        : Error(what) {}
};

struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& what = "dimension mismatch") : Error(what) {}
};

struct ParseError : Error {
    explicit ParseError(const std::string& what) : Error(what) {}
};

struct AsymmetricBeyondTol : Error {
    explicit AsymmetricBeyondTol(const std::string& what = "matrix asymmetric beyond tolerance")
        : Error(what) {}
};

struct EmptySubset : Error {
    explicit EmptySubset(const std::string& what = "subset must be nonempty") : Error(what) {}
};

struct IndexOutOfRange : Error {
    explicit IndexOutOfRange(const std::string& what = "index out of range") : Error(what) {}
};

struct TooLargeForOracle : Error {
    explicit TooLargeForOracle(const std::string& what = "instance too large for exhaustive oracle")
        : Error(what) {}
};

struct InvalidParam : Error {
    explicit InvalidParam(const std::string& what = "invalid parameter") : Error(what) {}
};

struct Infeasible : Error {
    explicit Infeasible(const std::string& what = "point violates feasibility tolerances")
        : Error(what) {}
};

struct LinkViolation : Error {
    explicit LinkViolation(const std::string& what = "linked pair violates x + y = e") : Error(what) {}
};

struct ConcavityViolation : Error {
    explicit ConcavityViolation(const std::string& what = "Newton direction has positive curvature")
        : Error(what) {}
};

struct NonfiniteStep : Error {
    explicit NonfiniteStep(const std::string& what = "nonfinite Newton step") : Error(what) {}
};

struct SolveFailed : Error {
    explicit SolveFailed(const std::string& what) : Error(what) {}
};

struct IndexNotFree : Error {
    explicit IndexNotFree(const std::string& what = "index already fixed") : Error(what) {}
};

struct NoFreeIndex : Error {
    explicit NoFreeIndex(const std::string& what = "no free index to branch on") : Error(what) {}
};

struct BoundFailure : Error {
    explicit BoundFailure(const std::string& what) : Error(what) {}
};

} // namespace mesp
