#include "psychoforge/error.hpp"

namespace psychoforge {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::SequenceTooShort: return "SequenceTooShort";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::TooFewVectors: return "TooFewVectors";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::AllZeroCounts: return "AllZeroCounts";
    case ErrorCode::MismatchedItems: return "MismatchedItems";
    case ErrorCode::DegenerateAgreement: return "DegenerateAgreement";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::ZeroTotalVariance: return "ZeroTotalVariance";
    case ErrorCode::TooFewObservations: return "TooFewObservations";
    case ErrorCode::ComponentsTooMany: return "ComponentsTooMany";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::NegativeAge: return "NegativeAge";
    case ErrorCode::MissingNameTable: return "MissingNameTable";
    case ErrorCode::UnknownField: return "UnknownField";
    case ErrorCode::EmptyBank: return "EmptyBank";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::EmptyDomain: return "EmptyDomain";
    case ErrorCode::UnknownPlaceholder: return "UnknownPlaceholder";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::ExhaustedRetries: return "ExhaustedRetries";
    case ErrorCode::SchemaInvalid: return "SchemaInvalid";
    case ErrorCode::AuthMissing: return "AuthMissing";
    case ErrorCode::Transport: return "Transport";
    case ErrorCode::UnscriptedRequest: return "UnscriptedRequest";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::MissingItems: return "MissingItems";
    case ErrorCode::ZeroAnswered: return "ZeroAnswered";
    case ErrorCode::Config: return "Config";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

}  // namespace psychoforge
