#ifndef LNM_ERROR_HPP
#define LNM_ERROR_HPP

#include <stdexcept>
#include <string>

namespace lnm {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input that violates a documented precondition (bad dimensions, nonpositive
/// composition entries, malformed files). Maps to CLI exit code 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Covariance that fails Cholesky, empty mixture components and similar
/// numeric breakdowns. Maps to CLI exit code 1.
class DegenerateError : public Error {
public:
    using Error::Error;
};

}  // namespace lnm

#endif
