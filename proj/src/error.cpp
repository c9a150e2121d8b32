#include "hypnf/error.hpp"

namespace hypnf {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotCriticalPoint: return "NotCriticalPoint";
    case ErrorKind::DegenerateHessian: return "DegenerateHessian";
    case ErrorKind::PurelyImaginarySpectrum: return "PurelyImaginarySpectrum";
    case ErrorKind::ZeroEigenvalue: return "ZeroEigenvalue";
    case ErrorKind::NonDiagonalizable: return "NonDiagonalizable";
    case ErrorKind::ResonantOrMultipleSpectrum: return "ResonantOrMultipleSpectrum";
    case ErrorKind::NormalizationFailed: return "NormalizationFailed";
    case ErrorKind::NoComplexBlocks: return "NoComplexBlocks";
    case ErrorKind::UnstableA0: return "UnstableA0";
    case ErrorKind::GeneratorTooLowDegree: return "GeneratorTooLowDegree";
    case ErrorKind::ResonanceObstruction: return "ResonanceObstruction";
    case ErrorKind::NotWilliamson: return "NotWilliamson";
    case ErrorKind::NonActionMonomial: return "NonActionMonomial";
    case ErrorKind::NegativeAction: return "NegativeAction";
    case ErrorKind::StepSizeCollapse: return "StepSizeCollapse";
    case ErrorKind::LeftDomain: return "LeftDomain";
    case ErrorKind::EnergyDrift: return "EnergyDrift";
    case ErrorKind::OriginUndefined: return "OriginUndefined";
    case ErrorKind::NoCrossingWithinHorizon: return "NoCrossingWithinHorizon";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::DecayMarginTooSmall: return "DecayMarginTooSmall";
    case ErrorKind::HomologicalFailure: return "HomologicalFailure";
    case ErrorKind::ResidualDiverging: return "ResidualDiverging";
  }
  return "UnknownError";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ParseError:
      return 2;
    // spectrum family
    case ErrorKind::NotCriticalPoint:
    case ErrorKind::DegenerateHessian:
    case ErrorKind::PurelyImaginarySpectrum:
    case ErrorKind::ZeroEigenvalue:
    case ErrorKind::NonDiagonalizable:
    case ErrorKind::ResonantOrMultipleSpectrum:
    case ErrorKind::NormalizationFailed:
    case ErrorKind::NoComplexBlocks:
    case ErrorKind::UnstableA0:
      return 3;
    case ErrorKind::ResonanceObstruction:
      return 4;
    case ErrorKind::NotWilliamson: return 5;
    case ErrorKind::NonActionMonomial: return 6;
    case ErrorKind::GeneratorTooLowDegree: return 7;
    case ErrorKind::NegativeAction: return 8;
    case ErrorKind::DimensionMismatch: return 9;
    case ErrorKind::StepSizeCollapse: return 10;
    case ErrorKind::LeftDomain: return 11;
    case ErrorKind::EnergyDrift: return 12;
    case ErrorKind::OriginUndefined: return 13;
    case ErrorKind::NoCrossingWithinHorizon: return 14;
    case ErrorKind::InsufficientSamples: return 15;
    case ErrorKind::DecayMarginTooSmall: return 16;
    case ErrorKind::HomologicalFailure: return 17;
    case ErrorKind::ResidualDiverging: return 18;
  }
  return 1;
}

}  // namespace hypnf
