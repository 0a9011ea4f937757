#pragma once

#include <stdexcept>
#include <string>

namespace fkpath {

// Each error family maps to a distinct CLI exit code (see tools/fkpath.cpp).

/// Argument outside the mathematical domain of an operation (s < 0, t <= 0, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Inconsistent sampling or run configuration (unordered times, coarse steps, ...).
class ConfigurationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The physical model is ill-defined, e.g. a form factor outside K_bos.
class ModelValidityError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical invariant failed beyond tolerance (negative variance, non-PSD covariance).
class NumericalConsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// E[exp(-kappa P(G))] does not exist for the requested interaction.
class IntegrabilityError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Grid oracle cannot resolve the problem (aliasing, box too small).
class ResolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace fkpath
