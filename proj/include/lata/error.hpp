#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lata {

enum class Errc {
  // arraystore
  BadMagic,
  UnsupportedVersion,
  UnsupportedDtype,
  TruncatedPayload,
  NonFiniteElement,
  IoFailure,
  MissingFile,
  ManifestInvalid,
  RowCountMismatch,
  LabelOutOfRange,
  ParseError,
  // neighborhood / agreement
  ZeroNormRow,
  ZeroNormQuery,
  DimensionMismatch,
  KOutOfRange,
  MissingPoolLabels,
  PermutationDomainMismatch,
  NonPositiveIdealDCG,
  InvalidImportance,
  EmptyModelList,
  UnknownModel,
  TooFewItems,
  DegenerateFeatures,
  ZeroVariance,
  LengthMismatch,
  // calibration / detection
  NonFiniteLogit,
  EmptyValidationSet,
  DegenerateLogits,
  MissingClassInPool,
  SingleClassDegenerate,
  SizeOutOfRange,
  // theory bench
  ConstructionViolated,
  ResampleBudgetExceeded,
  // cli
  ConfigError,
  InvalidArgument,
};

// Exit-code class of an error: 2 = config, 3 = data, 4 = numeric degenerate.
enum class ErrorClass { config = 2, data = 3, numeric = 4 };

std::string_view to_string(Errc code) noexcept;
ErrorClass error_class(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code),
        detail_(message) {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }
  int exit_code() const noexcept { return static_cast<int>(error_class(code_)); }

 private:
  Errc code_;
  std::string detail_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) { throw Error(code, message); }

}  // namespace lata
