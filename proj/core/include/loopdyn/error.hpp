#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace loopdyn {

enum class ErrorKind {
  ZeroVector,
  NonFinite,
  DimMismatch,
  DegenerateMean,
  InsufficientData,
  DegenerateAbscissa,
  NoHighSimilarityPairs,
  InvalidParams,
  EmptyTrajectory,
  TooShort,
  MismatchedInputs,
  MissingPlaceholder,
  InvalidConfig,
  BackendUnreachable,
  BackendMalformedResponse,
  EmptyGeneration,
  InvalidSpec,
  MissingEmbeddings,
  Io,
  Parse,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure raised by the library carries a kind so callers can branch
// without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace loopdyn
