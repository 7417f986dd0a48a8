#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace prodwave {

using Complex = std::complex<double>;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input that violates a documented precondition.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A linear system whose factorization detected rank deficiency.
class SingularSystem : public Error {
public:
    using Error::Error;
};

/// A shifted generator whose smallest singular value is below 1e-13.
class NearSingular : public Error {
public:
    using Error::Error;
};

/// The transverse mode search kept finding its maximum on the search boundary.
class MarginExhausted : public Error {
public:
    using Error::Error;
};

/// Two computed quantities that must satisfy an exact inequality do not.
class DiscretizationInconsistency : public Error {
public:
    using Error::Error;
};

/// Iterative or dense eigen/singular solver did not converge.
class SolverFailure : public Error {
public:
    using Error::Error;
};

/// Japanese bracket (1 + x^2)^(1/2).
inline double bracket(double x) { return std::sqrt(1.0 + x * x); }

inline void require(bool condition, const std::string& message)
{
    if (!condition) {
        throw InvalidInput(message);
    }
}

} // namespace prodwave
