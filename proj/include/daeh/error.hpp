#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace daeh {

enum class ErrorKind {
  // usage / precondition failures (exit code 2)
  Usage,
  ParseError,
  UnknownFunction,
  UnknownBuiltin,
  MissingBinding,
  InvalidProblem,
  ResonantOrigin,
  DegreeMatch,
  BoundaryZero,
  DegenerateUnsupportedDim,
  KernelMismatch,
  RankDeficientA22,
  RankAmbiguous,
  // numerical failures (exit code 1)
  DomainError,
  NoConvergence,
  SingularBlock,
  LeftDomain,
  BlowUp,
  StiffFailure,
  SingularShootingJacobian,
  AmbiguousWinding,
  DegenerateTangentZero,
  StepFailure,
  InsufficientOrbits,
};

std::string_view to_string(ErrorKind kind);

/// True for errors caused by bad input or a violated precondition.
bool is_precondition(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace daeh
