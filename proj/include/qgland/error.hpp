#ifndef QGLAND_ERROR_HPP
#define QGLAND_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace qgland {

enum class ErrorKind {
  // graph_core
  DisconnectedGraph,
  EdgeTooShort,
  DegreeTooLarge,
  NegativePotential,
  Unreachable,
  // spectral
  StepTooCoarse,
  ConvergenceFailure,
  // agmon_bounds
  RegionNotTunneling,
  CollarContainsVertex,
  PointTooCloseToBoundary,
  NoSeparatingInterval,
  // torsion_landscape
  DegenerateMinorant,
  SupersolutionFailure,
  UnverifiedSupersolution,
  AssemblyInfeasible,
  EmptyRegion,
  // local_bounds
  ShiftNotBelowE,
  SubintervalTooShort,
  // uniform_bounds
  EnergyBelowInf,
  InsufficientSpectrum,
  // verify
  PathNotFound,
  // harness
  ParseError,
  BadParameters,
  MethodInapplicable,
  GridMismatch,
  InvalidArgument,
};

inline std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorKind::EdgeTooShort: return "EdgeTooShort";
    case ErrorKind::DegreeTooLarge: return "DegreeTooLarge";
    case ErrorKind::NegativePotential: return "NegativePotential";
    case ErrorKind::Unreachable: return "Unreachable";
    case ErrorKind::StepTooCoarse: return "StepTooCoarse";
    case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorKind::RegionNotTunneling: return "RegionNotTunneling";
    case ErrorKind::CollarContainsVertex: return "CollarContainsVertex";
    case ErrorKind::PointTooCloseToBoundary: return "PointTooCloseToBoundary";
    case ErrorKind::NoSeparatingInterval: return "NoSeparatingInterval";
    case ErrorKind::DegenerateMinorant: return "DegenerateMinorant";
    case ErrorKind::SupersolutionFailure: return "SupersolutionFailure";
    case ErrorKind::UnverifiedSupersolution: return "UnverifiedSupersolution";
    case ErrorKind::AssemblyInfeasible: return "AssemblyInfeasible";
    case ErrorKind::EmptyRegion: return "EmptyRegion";
    case ErrorKind::ShiftNotBelowE: return "ShiftNotBelowE";
    case ErrorKind::SubintervalTooShort: return "SubintervalTooShort";
    case ErrorKind::EnergyBelowInf: return "EnergyBelowInf";
    case ErrorKind::InsufficientSpectrum: return "InsufficientSpectrum";
    case ErrorKind::PathNotFound: return "PathNotFound";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::BadParameters: return "BadParameters";
    case ErrorKind::MethodInapplicable: return "MethodInapplicable";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Single exception type for the library; `kind()` names the violated
/// precondition or assumption.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace qgland

#endif  // QGLAND_ERROR_HPP
