#pragma once

#include <stdexcept>
#include <string>

namespace enspace {

/// Guard used for every division in the library (SI units).
inline constexpr double kEpsDiv = 1e-12;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Caller broke a documented precondition (dimension mismatch, lo > hi, ...).
struct ContractViolation : Error {
    using Error::Error;
};

/// D(x) <= eps, so the time constant E/D is undefined.
struct DegenerateDissipation : Error {
    using Error::Error;
};

/// A state variable used as a divisor (i with a matched disturbance, v with a load) is ~0.
struct DegenerateState : Error {
    using Error::Error;
};

/// The control-port flow vanished, so the control lift cannot be inverted.
struct DegenerateControlPort : Error {
    using Error::Error;
};

struct OutOfHorizon : Error {
    using Error::Error;
};

/// The sliding variable never crossed zero inside the recorded horizon.
struct NoReaching : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

/// A guard failed inside the integrator; carries the simulated time of the failure.
struct SimulationFailure : Error {
    SimulationFailure(double t, const std::string& what)
        : Error("t=" + std::to_string(t) + " s: " + what), time(t) {}
    double time;
};

}  // namespace enspace
