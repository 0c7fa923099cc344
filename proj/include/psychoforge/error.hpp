#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace psychoforge {

enum class ErrorCode {
  InvalidArgument,
  EmptySequence,
  SequenceTooShort,
  EmptyCorpus,
  TooFewVectors,
  ZeroVector,
  DimensionMismatch,
  AllZeroCounts,
  MismatchedItems,
  DegenerateAgreement,
  LengthMismatch,
  ZeroVariance,
  SingleClass,
  NonFinite,
  RankDeficient,
  ZeroTotalVariance,
  TooFewObservations,
  ComponentsTooMany,
  DegenerateData,
  InvalidDistribution,
  NegativeAge,
  MissingNameTable,
  UnknownField,
  EmptyBank,
  MissingField,
  EmptyDomain,
  UnknownPlaceholder,
  InvariantViolation,
  ExhaustedRetries,
  SchemaInvalid,
  AuthMissing,
  Transport,
  UnscriptedRequest,
  CountMismatch,
  MissingItems,
  ZeroAnswered,
  Config,
  Io,
  Parse,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Library-wide exception. `attempts` is set by retrying operations.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::optional<int> attempts = std::nullopt)
      : std::runtime_error(message), code_(code), attempts_(attempts) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  [[nodiscard]] std::optional<int> attempts() const noexcept { return attempts_; }

 private:
  ErrorCode code_;
  std::optional<int> attempts_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace psychoforge
