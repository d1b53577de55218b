#pragma once

#include <stdexcept>
#include <string>

namespace slle {

/// Base class for every error thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid grid or time-step geometry (non-integral step counts, empty domains, ...).
struct BadGrid final : Error { using Error::Error; };

/// Two fields/trajectories that must live on the same grid do not.
struct GridMismatch final : Error { using Error::Error; };

/// A trajectory does not provide the time resolution an operation requires.
struct TrajectoryMismatch final : Error { using Error::Error; };

/// Smoothing bandwidth is below the grid resolution.
struct BandwidthTooSmall final : Error { using Error::Error; };

/// Tridiagonal solve hit a non-positive pivot.
struct SingularSystem final : Error { using Error::Error; };

/// Solution mass reached the domain boundary beyond the configured tolerance.
struct BoundaryLeak final : Error { using Error::Error; };

/// Drift substepping could not satisfy the CFL target within the substep budget.
struct CFLViolation final : Error { using Error::Error; };

/// A coefficient derivative needed by the requested operation was not supplied.
struct MissingDerivative final : Error { using Error::Error; };

/// Coefficient bound validation failed; the message names the first violated bound.
struct ValidationFailed final : Error { using Error::Error; };

/// Initial measure or initial condition carries no mass.
struct EmptyMeasure final : Error { using Error::Error; };

/// Malformed configuration value, preset descriptor, or file.
struct ConfigError final : Error { using Error::Error; };

}  // namespace slle
