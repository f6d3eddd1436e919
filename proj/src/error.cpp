#include "lata/error.hpp"

namespace lata {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::BadMagic: return "BadMagic";
    case Errc::UnsupportedVersion: return "UnsupportedVersion";
    case Errc::UnsupportedDtype: return "UnsupportedDtype";
    case Errc::TruncatedPayload: return "TruncatedPayload";
    case Errc::NonFiniteElement: return "NonFiniteElement";
    case Errc::IoFailure: return "IoFailure";
    case Errc::MissingFile: return "MissingFile";
    case Errc::ManifestInvalid: return "ManifestInvalid";
    case Errc::RowCountMismatch: return "RowCountMismatch";
    case Errc::LabelOutOfRange: return "LabelOutOfRange";
    case Errc::ParseError: return "ParseError";
    case Errc::ZeroNormRow: return "ZeroNormRow";
    case Errc::ZeroNormQuery: return "ZeroNormQuery";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::KOutOfRange: return "KOutOfRange";
    case Errc::MissingPoolLabels: return "MissingPoolLabels";
    case Errc::PermutationDomainMismatch: return "PermutationDomainMismatch";
    case Errc::NonPositiveIdealDCG: return "NonPositiveIdealDCG";
    case Errc::InvalidImportance: return "InvalidImportance";
    case Errc::EmptyModelList: return "EmptyModelList";
    case Errc::UnknownModel: return "UnknownModel";
    case Errc::TooFewItems: return "TooFewItems";
    case Errc::DegenerateFeatures: return "DegenerateFeatures";
    case Errc::ZeroVariance: return "ZeroVariance";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::NonFiniteLogit: return "NonFiniteLogit";
    case Errc::EmptyValidationSet: return "EmptyValidationSet";
    case Errc::DegenerateLogits: return "DegenerateLogits";
    case Errc::MissingClassInPool: return "MissingClassInPool";
    case Errc::SingleClassDegenerate: return "SingleClassDegenerate";
    case Errc::SizeOutOfRange: return "SizeOutOfRange";
    case Errc::ConstructionViolated: return "ConstructionViolated";
    case Errc::ResampleBudgetExceeded: return "ResampleBudgetExceeded";
    case Errc::ConfigError: return "ConfigError";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

ErrorClass error_class(Errc code) noexcept {
  switch (code) {
    case Errc::MissingFile:
    case Errc::KOutOfRange:
    case Errc::SizeOutOfRange:
    case Errc::EmptyModelList:
    case Errc::UnknownModel:
    case Errc::ConfigError:
    case Errc::InvalidArgument:
      return ErrorClass::config;
    case Errc::NonPositiveIdealDCG:
    case Errc::ZeroVariance:
    case Errc::DegenerateFeatures:
    case Errc::DegenerateLogits:
    case Errc::SingleClassDegenerate:
    case Errc::ConstructionViolated:
    case Errc::ResampleBudgetExceeded:
      return ErrorClass::numeric;
    default:
      return ErrorClass::data;
  }
}

}  // namespace lata
