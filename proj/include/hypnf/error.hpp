#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hypnf {

// Every failure the library reports. The CLI maps each kind to an exit code.
enum class ErrorKind {
  // input / plumbing
  ParseError,
  DimensionMismatch,
  // linear symplectic algebra
  NotCriticalPoint,
  DegenerateHessian,
  PurelyImaginarySpectrum,
  ZeroEigenvalue,
  NonDiagonalizable,
  ResonantOrMultipleSpectrum,
  NormalizationFailed,
  NoComplexBlocks,
  UnstableA0,
  // jets and normal forms
  GeneratorTooLowDegree,
  ResonanceObstruction,
  NotWilliamson,
  NonActionMonomial,
  NegativeAction,
  // flow
  StepSizeCollapse,
  LeftDomain,
  EnergyDrift,
  OriginUndefined,
  NoCrossingWithinHorizon,
  InsufficientSamples,
  // homological / deformation
  DecayMarginTooSmall,
  HomologicalFailure,
  ResidualDiverging,
};

std::string_view error_kind_name(ErrorKind kind);

// Process exit code used by the command line front end.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace hypnf
