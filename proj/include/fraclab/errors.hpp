#pragma once

#include <stdexcept>
#include <string>

namespace fraclab {

// Error taxonomy shared by all modules. Everything derives from Error so
// callers (and the CLI) can catch one type and map it to an exit code.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : Error {
  using Error::Error;
};

// geometry
struct NotStarShaped : Error {
  using Error::Error;
};
struct TooLarge : Error {
  using Error::Error;
};
struct BudgetExceeded : Error {
  using Error::Error;
};

// discretization
struct InvalidOrder : Error {
  using Error::Error;
};
struct GridTooCoarse : Error {
  using Error::Error;
};
struct TooManyNodes : Error {
  using Error::Error;
};
struct IndefiniteForm : Error {
  using Error::Error;
};
struct NonPositiveWeight : Error {
  using Error::Error;
};

// spectrum
struct CholeskyFailure : Error {
  using Error::Error;
};
struct TrackingAmbiguous : Error {
  using Error::Error;
};

// shape calculus
struct FitUnstable : Error {
  using Error::Error;
};

// genericity
struct NoSplittingCandidate : Error {
  using Error::Error;
};
struct AmplitudeExhausted : Error {
  using Error::Error;
};
struct MaxIterations : Error {
  using Error::Error;
};

}  // namespace fraclab
