#include "daeh/error.hpp"

namespace daeh {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return "Usage";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::UnknownFunction: return "UnknownFunction";
    case ErrorKind::UnknownBuiltin: return "UnknownBuiltin";
    case ErrorKind::MissingBinding: return "MissingBinding";
    case ErrorKind::InvalidProblem: return "InvalidProblem";
    case ErrorKind::ResonantOrigin: return "ResonantOrigin";
    case ErrorKind::DegreeMatch: return "DegreeMatch";
    case ErrorKind::BoundaryZero: return "BoundaryZero";
    case ErrorKind::DegenerateUnsupportedDim: return "DegenerateUnsupportedDim";
    case ErrorKind::KernelMismatch: return "KernelMismatch";
    case ErrorKind::RankDeficientA22: return "RankDeficientA22";
    case ErrorKind::RankAmbiguous: return "RankAmbiguous";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::SingularBlock: return "SingularBlock";
    case ErrorKind::LeftDomain: return "LeftDomain";
    case ErrorKind::BlowUp: return "BlowUp";
    case ErrorKind::StiffFailure: return "StiffFailure";
    case ErrorKind::SingularShootingJacobian: return "SingularShootingJacobian";
    case ErrorKind::AmbiguousWinding: return "AmbiguousWinding";
    case ErrorKind::DegenerateTangentZero: return "DegenerateTangentZero";
    case ErrorKind::StepFailure: return "StepFailure";
    case ErrorKind::InsufficientOrbits: return "InsufficientOrbits";
  }
  return "Unknown";
}

bool is_precondition(ErrorKind kind) {
  return kind <= ErrorKind::RankAmbiguous;
}

}  // namespace daeh
