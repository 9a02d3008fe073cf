#pragma once

#include <stdexcept>
#include <string>

namespace cellmb {

/// A documented precondition of an operation does not hold for the given input.
class PreconditionError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// KL divergence requested where the reference intensity vanishes but the
/// other one does not.
class SupportError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The measurement model produced a zero normalizer (no clutter and no
/// predicted detection mass for some measurement).
class DegenerateModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid scenario or policy configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace cellmb
