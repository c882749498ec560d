#include "pact/error.hpp"

namespace pact {

std::string_view errorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::TypeNotInTemplate: return "TypeNotInTemplate";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::DanglingEdge: return "DanglingEdge";
    case ErrorKind::InvalidArtifact: return "InvalidArtifact";
    case ErrorKind::EmptyText: return "EmptyText";
    case ErrorKind::MissingVector: return "MissingVector";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::NotEnoughNegatives: return "NotEnoughNegatives";
    case ErrorKind::NonFiniteScore: return "NonFiniteScore";
    case ErrorKind::TrainingDiverged: return "TrainingDiverged";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::EmptyIndex: return "EmptyIndex";
    case ErrorKind::BadSubspaceCount: return "BadSubspaceCount";
    case ErrorKind::TooFewVectors: return "TooFewVectors";
    case ErrorKind::IncompatibleIndex: return "IncompatibleIndex";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::UnknownNode: return "UnknownNode";
    case ErrorKind::GraphRequired: return "GraphRequired";
    case ErrorKind::RankerViolation: return "RankerViolation";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::BenchShapeMismatch: return "BenchShapeMismatch";
    case ErrorKind::SpecInfeasible: return "SpecInfeasible";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace pact
