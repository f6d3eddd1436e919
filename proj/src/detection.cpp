#include "lata/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "lata/calibration.hpp"
#include "lata/csv.hpp"
#include "lata/error.hpp"
#include "lata/parallel.hpp"
#include "lata/simd.hpp"

namespace lata {

namespace {

template <typename Fn>
MethodScore rowwise(const LogitsMatrix& logits, std::string id, Fn&& fn) {
  check_logits(logits);
  MethodScore out{std::move(id), std::vector<double>(logits.rows())};
  for (std::size_t i = 0; i < logits.rows(); ++i) out.scores[i] = fn(logits.row(i));
  return out;
}

double logsumexp(std::span<const float> row) {
  double mx = -INFINITY;
  for (float v : row) mx = std::max(mx, static_cast<double>(v));
  double sum = 0.0;
  for (float v : row) sum += std::exp(static_cast<double>(v) - mx);
  return mx + std::log(sum);
}

}  // namespace

MethodScore score_msp(const LogitsMatrix& logits) {
  const auto conf = confidence(softmax(logits));
  return {"msp", conf};
}

MethodScore score_entropy(const LogitsMatrix& logits) {
  return rowwise(logits, "entropy", [](std::span<const float> row) {
    const double lse = logsumexp(row);
    double neg_h = 0.0;
    for (float v : row) {
      const double logp = static_cast<double>(v) - lse;
      neg_h += std::exp(logp) * logp;
    }
    return neg_h;
  });
}

MethodScore score_energy(const LogitsMatrix& logits) {
  return rowwise(logits, "energy", [](std::span<const float> row) { return logsumexp(row); });
}

MethodScore score_maxlogit(const LogitsMatrix& logits) {
  return rowwise(logits, "maxlogit", [](std::span<const float> row) {
    return static_cast<double>(*std::max_element(row.begin(), row.end()));
  });
}

MethodScore score_trustscore(const FeatureMatrix& test_features, const LabelVector& predicted,
                             const FeatureMatrix& pool_features, const LabelVector& labels) {
  if (labels.size() != pool_features.rows()) fail(Errc::LengthMismatch, "pool features vs pool labels");
  if (test_features.rows() != predicted.size()) fail(Errc::LengthMismatch, "features vs predicted labels");
  if (test_features.cols() != pool_features.cols()) fail(Errc::DimensionMismatch, "test features vs pool dimension");
  std::vector<std::int32_t> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) fail(Errc::MissingClassInPool, "pool labels cover fewer than two classes");
  for (auto p : predicted) {
    if (!std::binary_search(classes.begin(), classes.end(), p)) {
      fail(Errc::MissingClassInPool, "predicted class " + std::to_string(p) + " absent from pool");
    }
  }

  const auto& kern = simd::active_kernels();
  const std::size_t d = pool_features.cols();
  MethodScore out{"trustscore", std::vector<double>(test_features.rows())};
  parallel_for(test_features.rows(), [&](std::size_t i) {
    double best_pred = INFINITY;
    double best_other = INFINITY;
    const float* q = test_features.data() + i * d;
    for (std::size_t j = 0; j < pool_features.rows(); ++j) {
      const double sq = kern.squared_distance(q, pool_features.data() + j * d, d);
      if (labels[j] == predicted[i]) {
        best_pred = std::min(best_pred, sq);
      } else {
        best_other = std::min(best_other, sq);
      }
    }
    const double d_pred = std::max(std::sqrt(best_pred), kDistanceFloor);
    const double d_other = std::max(std::sqrt(best_other), kDistanceFloor);
    out.scores[i] = std::min(d_other / d_pred, kTrustScoreCap);
  });
  return out;
}

LabelVector predicted_labels(const LogitsMatrix& logits) {
  LabelVector out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    out[i] = static_cast<std::int32_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

std::vector<std::uint8_t> correctness(const LogitsMatrix& logits, const LabelVector& labels) {
  if (logits.rows() != labels.size()) fail(Errc::LengthMismatch, "logits vs labels");
  const auto pred = predicted_labels(logits);
  std::vector<std::uint8_t> out(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) out[i] = pred[i] == labels[i] ? 1 : 0;
  return out;
}

double auroc(std::span<const double> scores, std::span<const std::uint8_t> correct) {
  if (scores.size() != correct.size()) fail(Errc::LengthMismatch, "scores vs correctness");
  const std::size_t n = scores.size();
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(scores[i])) fail(Errc::InvalidArgument, "non-finite confidence score");
    positives += correct[i] ? 1 : 0;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    fail(Errc::SingleClassDegenerate, "AUROC needs both correct and incorrect predictions");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of (doubled) mid-ranks of the positives; integers, so exact.
  std::uint64_t twice_rank_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    const std::uint64_t twice_mid = static_cast<std::uint64_t>(i + 1 + j);  // 2 * (i+1 + j)/2
    for (std::size_t t = i; t < j; ++t) {
      if (correct[idx[t]]) twice_rank_sum += twice_mid;
    }
    i = j;
  }
  const double p = static_cast<double>(positives);
  const double u = (static_cast<double>(twice_rank_sum) - p * (p + 1.0)) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

const ReportRow& EvalReport::row(std::string_view method) const {
  for (const auto& r : rows) {
    if (r.method == method) return r;
  }
  fail(Errc::InvalidArgument, "report has no row '" + std::string(method) + "'");
}

std::string report_to_json(const EvalReport& report, bool include_timestamp) {
  nlohmann::ordered_json doc;
  doc["dataset_id"] = report.dataset_id;
  doc["run_id"] = report.run_id;
  doc["seed"] = report.seed;
  doc["pool_size"] = report.pool_size;
  doc["val_size"] = report.val_size;
  doc["test_size"] = report.test_size;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    nlohmann::ordered_json row;
    row["method"] = r.method;
    row["auroc"] = r.auroc;
    row["k"] = r.k ? nlohmann::ordered_json(*r.k) : nlohmann::ordered_json(nullptr);
    row["m"] = r.m ? nlohmann::ordered_json(*r.m) : nlohmann::ordered_json(nullptr);
    row["n"] = r.n;
    rows.push_back(row);
  }
  doc["rows"] = rows;
  doc["calibration"] = report.calibration_json.empty() ? nlohmann::ordered_json::object()
                                                       : nlohmann::ordered_json::parse(report.calibration_json);
  doc["notes"] = report.notes;
  if (include_timestamp) doc["timestamp"] = report.timestamp;
  return doc.dump(2) + "\n";
}

std::string report_to_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "method,auroc,k,m,n\n";
  for (const auto& r : report.rows) {
    out << r.method << ',' << format_double(r.auroc) << ',' << (r.k ? std::to_string(*r.k) : "") << ','
        << (r.m ? std::to_string(*r.m) : "") << ',' << r.n << '\n';
  }
  return out.str();
}

}  // namespace lata
