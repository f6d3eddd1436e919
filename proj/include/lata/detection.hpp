#pragma once
// Failure-detection confidence scores and AUROC evaluation.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lata/matrix.hpp"
#include "lata/matrix.hpp"

namespace lata {

/// Per-sample confidence; higher means more likely correct.
struct MethodScore {
  std::string method_id;
  std::vector<double> scores;
};

MethodScore score_msp(const LogitsMatrix& logits);
/// Negative Shannon entropy of the softmax, in nats.
MethodScore score_entropy(const LogitsMatrix& logits);
/// logsumexp of the logits (negative energy at T = 1).
MethodScore score_energy(const LogitsMatrix& logits);
MethodScore score_maxlogit(const LogitsMatrix& logits);

inline constexpr double kTrustScoreCap = 1e6;
inline constexpr double kDistanceFloor = 1e-12;

/// Distance to the nearest pool point of any other class over distance to
/// the nearest pool point of the predicted class (Euclidean, raw features).
/// Distances floored at 1e-12; ratio capped at 1e6. Zero rows are valid here,
/// unlike in a cosine-similarity Pool.
MethodScore score_trustscore(const FeatureMatrix& test_features, const LabelVector& predicted,
                             const FeatureMatrix& pool_features, const LabelVector& pool_labels);

/// Row-wise argmax (first maximum).
LabelVector predicted_labels(const LogitsMatrix& logits);
std::vector<std::uint8_t> correctness(const LogitsMatrix& logits, const LabelVector& labels);

/// Probability that a random (correct, incorrect) pair is ordered correctly,
/// ties counted 1/2; computed from mid-ranks.
double auroc(std::span<const double> scores, std::span<const std::uint8_t> correct);

struct ReportRow {
  std::string method;
  double auroc = 0.0;
  std::optional<std::size_t> k;  // agreement-based rows only
  std::optional<std::size_t> m;
  std::size_t n = 0;
};

struct EvalReport {
  std::string dataset_id;
  std::string run_id;
  std::uint64_t seed = 0;
  std::vector<ReportRow> rows;
  std::string notes;
  std::string timestamp;         // excluded from determinism checks
  std::string calibration_json;  // JSON object text, embedded verbatim
  std::size_t pool_size = 0;
  std::size_t val_size = 0;
  std::size_t test_size = 0;

  const ReportRow& row(std::string_view method) const;
};

std::string report_to_json(const EvalReport& report, bool include_timestamp = true);
std::string report_to_csv(const EvalReport& report);

}  // namespace lata
