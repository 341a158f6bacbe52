#pragma once

#include <stdexcept>
#include <string>

namespace doccoord {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidWeight : Error { using Error::Error; };
struct DisconnectedGraph : Error { using Error::Error; };
struct NonFinite : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct InvalidBounds : Error { using Error::Error; };
struct InvalidSector : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct SingularReference : Error { using Error::Error; };
struct Infeasible : Error { using Error::Error; };
struct NumericalFailure : Error { using Error::Error; };
struct SynthesisInfeasible : Error { using Error::Error; };
struct EmptyWindow : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

/// Simulation blow-up; carries the first time the divergence guard tripped.
struct Diverged : Error {
  double time;
  explicit Diverged(double t, const std::string& what) : Error(what), time(t) {}
};

}  // namespace doccoord
