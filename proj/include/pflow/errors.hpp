#ifndef PFLOW_ERRORS_HPP
#define PFLOW_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pflow {

// Caller broke a documented precondition (dimension mismatch, bad config, ...).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// The blended Hessian A0 + beta*Ah is singular or indefinite, or some other
// modelling assumption of the flow fails at a given homotopy parameter.
class AssumptionViolation : public std::runtime_error {
public:
    AssumptionViolation(const std::string& what, double where)
        : std::runtime_error(what), where_(where) {}

    // beta or lambda at which the violation was detected (see message).
    double where() const noexcept { return where_; }

private:
    double where_;
};

// Shooting bracket never straddled beta(1) = 1, or bisection stalled.
class ShootingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Measurement model could not be evaluated (e.g. target on top of a sensor).
class MeasurementError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FlowError : public std::runtime_error {
public:
    FlowError(const std::string& what, double lambda, std::size_t particle)
        : std::runtime_error(what), lambda_(lambda), particle_(particle) {}

    double lambda() const noexcept { return lambda_; }
    std::size_t particle() const noexcept { return particle_; }

private:
    double lambda_;
    std::size_t particle_;
};

}  // namespace pflow

#endif  // PFLOW_ERRORS_HPP
