#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace smartcea {

enum class ErrorKind {
  InvalidInput,
  LengthMismatch,
  DimensionMismatch,
  SeparationDetected,
  RankDeficient,
  ZeroSupport,
  FluctuationDiverged,
  DegenerateDenominator,
  TooManyDegenerate,
  NoConsistentIndexing,
  EmptyFrontier,
  DuplicateRegime,
  ZeroVariance,
  MisalignedReps,
  Parse,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Every failure the library reports carries a kind so the CLI can emit a
// machine-readable error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace smartcea
