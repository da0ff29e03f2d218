#pragma once

#include <stdexcept>
#include <string>

namespace westinv {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define WESTINV_DEFINE_ERROR(Name) \
  class Name : public Error {      \
   public:                         \
    using Error::Error;            \
  }

// forward solver
WESTINV_DEFINE_ERROR(DegeneracyError);
WESTINV_DEFINE_ERROR(NoConvergence);
WESTINV_DEFINE_ERROR(OffGrid);
WESTINV_DEFINE_ERROR(IncompatibleBC);
WESTINV_DEFINE_ERROR(GridTooCoarse);
WESTINV_DEFINE_ERROR(GridMismatch);

// derivative machinery
WESTINV_DEFINE_ERROR(UnsupportedObservation);
WESTINV_DEFINE_ERROR(SingularOperator);

// parameterization
WESTINV_DEFINE_ERROR(RankDeficient);

// iterative schemes
WESTINV_DEFINE_ERROR(Divergence);
WESTINV_DEFINE_ERROR(LinearSolveFailure);

// diagnostics and harness
WESTINV_DEFINE_ERROR(Unsupported);
WESTINV_DEFINE_ERROR(TooFewSamples);
WESTINV_DEFINE_ERROR(ConfigError);
WESTINV_DEFINE_ERROR(IoError);

#undef WESTINV_DEFINE_ERROR

}  // namespace westinv
