#ifndef OPTOLOOP_ERRORS_HPP
#define OPTOLOOP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace optoloop {

// Base class so callers can catch any solver-level failure in one clause.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration or parameter set (CLI exit code 2).
struct ConfigError : Error {
    using Error::Error;
};

// Fixed-point / Newton iteration ran out of iterations.
struct NonConvergence : Error {
    NonConvergence(const std::string& what, double best_residual)
        : Error(what), best_residual(best_residual) {}
    double best_residual;
};

// Eigenvector matrix too ill-conditioned to diagonalize (near an EP).
struct DefectiveMatrix : Error {
    using Error::Error;
};

// No steady state: an eigenvalue of the drift matrix has Re >= 0.
struct Unstable : Error {
    using Error::Error;
};

// Frequency integral did not settle under panel halving.
struct QuadratureNotConverged : Error {
    QuadratureNotConverged(const std::string& what, double change)
        : Error(what), relative_change(change) {}
    double relative_change;
};

// EP search box contains no coalescence point.
struct NotFound : Error {
    NotFound(const std::string& what, double best_measure)
        : Error(what), best_measure(best_measure) {}
    double best_measure;
};

// Time-domain propagation diverged (unstable system detected dynamically).
struct BlowUp : Error {
    BlowUp(const std::string& what, double t) : Error(what), time(t) {}
    double time;
};

// Output file could not be opened or written (CLI exit code 4).
struct IoError : Error {
    using Error::Error;
};

}  // namespace optoloop

#endif
