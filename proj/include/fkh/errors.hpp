#pragma once

#include <stdexcept>
#include <string>

namespace fkh {

/** Base class for all library errors. */
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/** Eigenvalues left the admissible symmetric cone (or its closure, where allowed). */
struct ConeViolation : Error {
    using Error::Error;
};

/** Fractional order s outside the range supported by the requested operation. */
struct SOutOfRange : Error {
    using Error::Error;
};

/** Degeneracy parameter eps outside the domain of the one-parameter matrix family. */
struct EpsOutOfRange : Error {
    using Error::Error;
};

/** The far-field growth of the test function cannot certify a finite tail bound. */
struct TailUnbounded : Error {
    using Error::Error;
};

/** Truncation bound exceeded the caller's tolerance under the reject policy. */
struct TruncationTooLarge : Error {
    using Error::Error;
};

/** Condition number of sqrt(M) too extreme for the requested quadrature rule. */
struct AnisotropyTooExtreme : Error {
    using Error::Error;
};

/** Subspace frame is not orthonormal within tolerance. */
struct FrameNotOrthonormal : Error {
    using Error::Error;
};

/** Rejection sampling failed to produce the requested number of admissible draws. */
struct SamplingExhausted : Error {
    using Error::Error;
};

/** No feasible starting point under the requested eigenvalue floor. */
struct InfeasibleConstraint : Error {
    using Error::Error;
};

/** A constrained random draw left the admissible set. */
struct InfeasibleSample : Error {
    using Error::Error;
};

/** Fixed-point iteration residual grew past the divergence guard. */
struct Diverged : Error {
    using Error::Error;
};

/** Bad configuration input (unknown key, unparsable value, invalid combination). */
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace fkh
