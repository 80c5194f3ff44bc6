#include "loopdyn/error.hpp"

namespace loopdyn {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::DegenerateMean: return "DegenerateMean";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::DegenerateAbscissa: return "DegenerateAbscissa";
    case ErrorKind::NoHighSimilarityPairs: return "NoHighSimilarityPairs";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::EmptyTrajectory: return "EmptyTrajectory";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::MismatchedInputs: return "MismatchedInputs";
    case ErrorKind::MissingPlaceholder: return "MissingPlaceholder";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::BackendUnreachable: return "BackendUnreachable";
    case ErrorKind::BackendMalformedResponse: return "BackendMalformedResponse";
    case ErrorKind::EmptyGeneration: return "EmptyGeneration";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::MissingEmbeddings: return "MissingEmbeddings";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Parse: return "Parse";
  }
  return "Unknown";
}

}  // namespace loopdyn
