#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace khess {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller supplied an argument outside an operation's domain.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// The Keller–Osserman integral diverges: the tail of the integrand decays no
/// faster than 1/τ. Carries the fitted local decay exponent.
class KellerOssermanViolation : public Error {
public:
    KellerOssermanViolation(const std::string& what, double exponent)
        : Error(what), tail_exponent_(exponent) {}
    double tail_exponent() const noexcept { return tail_exponent_; }

private:
    double tail_exponent_;
};

/// A limit constant could not be extrapolated from its probe sequence.
class LimitNotDetected : public Error {
public:
    LimitNotDetected(const std::string& what, std::vector<double> sequence)
        : Error(what), sequence_(std::move(sequence)) {}
    const std::vector<double>& sequence() const noexcept { return sequence_; }

private:
    std::vector<double> sequence_;
};

/// A structural hypothesis on the data fails. `label` names the condition,
/// e.g. "(1.5)" or "(f2)".
class ConditionViolation : public Error {
public:
    ConditionViolation(std::string label, const std::string& what)
        : Error(label + ": " + what), label_(std::move(label)) {}
    const std::string& label() const noexcept { return label_; }

private:
    std::string label_;
};

/// The radial initial value integration lost admissibility or hit a bad value.
class IntegrationFailure : public Error {
public:
    IntegrationFailure(const std::string& what, double r, double u, double du)
        : Error(what), r_(r), u_(u), du_(du) {}
    double r() const noexcept { return r_; }
    double u() const noexcept { return u_; }
    double du() const noexcept { return du_; }

private:
    double r_, u_, du_;
};

/// A nonlinear solve did not converge.
class SolveFailure : public Error {
public:
    SolveFailure(const std::string& what, std::vector<double> residuals)
        : Error(what), residuals_(std::move(residuals)) {}
    const std::vector<double>& residual_history() const noexcept { return residuals_; }

private:
    std::vector<double> residuals_;
};

/// A collar point lies beyond the focal radius of the boundary.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// No parameter on the search ladder certified the requested inequality.
class CertificationFailure : public Error {
public:
    CertificationFailure(const std::string& what, double worst_margin)
        : Error(what), worst_margin_(worst_margin) {}
    double worst_margin() const noexcept { return worst_margin_; }

private:
    double worst_margin_;
};

}  // namespace khess
