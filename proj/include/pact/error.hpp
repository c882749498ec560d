#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pact {

enum class ErrorKind {
  TypeNotInTemplate,
  ParseError,
  DanglingEdge,
  InvalidArtifact,
  EmptyText,
  MissingVector,
  DimMismatch,
  NotEnoughNegatives,
  NonFiniteScore,
  TrainingDiverged,
  InvalidConfig,
  EmptyIndex,
  BadSubspaceCount,
  TooFewVectors,
  IncompatibleIndex,
  KTooLarge,
  UnknownNode,
  GraphRequired,
  RankerViolation,
  EmptyInput,
  BenchShapeMismatch,
  SpecInfeasible,
  Io,
};

std::string_view errorKindName(ErrorKind kind);

// Every domain failure in the library is reported through this type; the CLI
// maps it to exit code 1.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(errorKindName(kind)) + ": " + message),
        kind_(kind),
        detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace pact
