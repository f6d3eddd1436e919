#include "lata/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "lata/error.hpp"
#include "lata/nelder_mead.hpp"

namespace lata {

namespace {

constexpr int kGridT = 60;
constexpr int kGridTs = 61;
constexpr double kTMin = 0.05;
constexpr double kTMax = 10.0;

double grid_t(int i) { return kTMin * std::pow(kTMax / kTMin, static_cast<double>(i) / (kGridT - 1)); }
double grid_ts(int j) { return static_cast<double>(j - (kGridTs - 1) / 2) / 6.0; }

// Writes softmax(row / tau) into out; returns nothing, shared by apply and
// the fused NLL so both produce identical bits.
void softmax_row(const float* row, std::size_t c, double tau, double* out) {
  double mx = -INFINITY;
  for (std::size_t j = 0; j < c; ++j) {
    out[j] = static_cast<double>(row[j]) / tau;
    mx = std::max(mx, out[j]);
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < c; ++j) {
    out[j] = std::exp(out[j] - mx);
    sum += out[j];
  }
  for (std::size_t j = 0; j < c; ++j) out[j] /= sum;
}

void check_lengths(const CalibrationModel& model, const LogitsMatrix& logits, std::span<const double> agreement) {
  if (model.variant == CalibrationVariant::agreement && agreement.size() != logits.rows()) {
    fail(Errc::LengthMismatch, "agreement has " + std::to_string(agreement.size()) + " entries for " +
                                   std::to_string(logits.rows()) + " logit rows");
  }
}

double agreement_at(std::span<const double> agreement, std::size_t i) {
  return agreement.empty() ? 0.0 : agreement[i];
}

}  // namespace

std::string_view to_string(CalibrationVariant v) noexcept {
  return v == CalibrationVariant::vanilla ? "vanilla" : "agreement";
}

CalibrationVariant parse_variant(std::string_view text) {
  if (text == "vanilla") return CalibrationVariant::vanilla;
  if (text == "agreement") return CalibrationVariant::agreement;
  fail(Errc::InvalidArgument, "unknown calibration variant '" + std::string(text) + "'");
}

void check_logits(const LogitsMatrix& logits) {
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits.data()[i])) fail(Errc::NonFiniteLogit, "logit element " + std::to_string(i));
  }
}

ProbabilityMatrix apply(const CalibrationModel& model, const LogitsMatrix& logits, std::span<const double> agreement) {
  check_logits(logits);
  check_lengths(model, logits, agreement);
  ProbabilityMatrix out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    softmax_row(logits.row(i).data(), logits.cols(), model.temperature(agreement_at(agreement, i)), out.row(i).data());
  }
  return out;
}

ProbabilityMatrix softmax(const LogitsMatrix& logits) { return apply(CalibrationModel{}, logits); }

double nll(const ProbabilityMatrix& probabilities, const LabelVector& labels) {
  if (labels.size() != probabilities.rows()) fail(Errc::LengthMismatch, "labels vs probability rows");
  if (labels.empty()) fail(Errc::EmptyValidationSet, "no samples");
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= probabilities.cols()) {
      fail(Errc::LabelOutOfRange, "label " + std::to_string(labels[i]) + " at row " + std::to_string(i));
    }
    sum += -std::log(std::max(probabilities(i, static_cast<std::size_t>(labels[i])), kProbabilityFloor));
  }
  return sum / static_cast<double>(labels.size());
}

double calibration_nll(const CalibrationModel& model, const LogitsMatrix& logits, const LabelVector& labels,
                       std::span<const double> agreement) {
  check_lengths(model, logits, agreement);
  if (labels.size() != logits.rows()) fail(Errc::LengthMismatch, "labels vs logit rows");
  if (labels.empty()) fail(Errc::EmptyValidationSet, "no samples");
  std::vector<double> p(logits.cols());
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= logits.cols()) {
      fail(Errc::LabelOutOfRange, "label " + std::to_string(labels[i]) + " at row " + std::to_string(i));
    }
    softmax_row(logits.row(i).data(), logits.cols(), model.temperature(agreement_at(agreement, i)), p.data());
    sum += -std::log(std::max(p[static_cast<std::size_t>(labels[i])], kProbabilityFloor));
  }
  return sum / static_cast<double>(labels.size());
}

CalibrationModel fit(const LogitsMatrix& logits, const LabelVector& labels, std::span<const double> agreement,
                     CalibrationVariant variant) {
  if (logits.rows() == 0 || labels.empty()) fail(Errc::EmptyValidationSet, "validation split is empty");
  if (labels.size() != logits.rows()) fail(Errc::LengthMismatch, "labels vs logit rows");
  check_logits(logits);
  if (variant == CalibrationVariant::agreement && agreement.size() != logits.rows()) {
    fail(Errc::LengthMismatch, "agreement variant needs one score per validation row");
  }
  bool informative = false;
  for (std::size_t i = 0; i < logits.rows() && !informative; ++i) {
    const auto row = logits.row(i);
    informative = std::any_of(row.begin(), row.end(), [&](float v) { return v != row[0]; });
  }
  if (!informative) fail(Errc::DegenerateLogits, "every logit row is constant; temperature has no effect");

  CalibrationModel vanilla{CalibrationVariant::vanilla, 1.0, 0.0};
  auto vanilla_obj = [&](const std::vector<double>& x) {
    CalibrationModel m = vanilla;
    m.t = x[0];
    return calibration_nll(m, logits, labels);
  };

  int best_i = 0;
  double best = INFINITY;
  for (int i = 0; i < kGridT; ++i) {
    const double v = vanilla_obj({grid_t(i)});
    if (v < best) {
      best = v;
      best_i = i;
    }
  }
  const double t_step = grid_t(best_i) * (std::pow(kTMax / kTMin, 1.0 / (kGridT - 1)) - 1.0);
  const auto refined = nelder_mead(vanilla_obj, {grid_t(best_i)}, {t_step});
  vanilla.t = grid_t(best_i);
  if (refined.value < best) {
    vanilla.t = refined.x[0];
    best = refined.value;
  }
  // The identity start (t=1) bounds the result from above.
  if (vanilla_obj({1.0}) < best) vanilla.t = 1.0;
  if (variant == CalibrationVariant::vanilla) return vanilla;

  CalibrationModel model{CalibrationVariant::agreement, vanilla.t, 0.0};
  auto obj = [&](const std::vector<double>& x) {
    CalibrationModel m = model;
    m.t = x[0];
    m.t_s = x[1];
    return calibration_nll(m, logits, labels, agreement);
  };
  double grid_best = INFINITY;
  int gi = 0, gj = 0;
  for (int i = 0; i < kGridT; ++i) {
    for (int j = 0; j < kGridTs; ++j) {
      const double v = obj({grid_t(i), grid_ts(j)});
      if (v < grid_best) {
        grid_best = v;
        gi = i;
        gj = j;
      }
    }
  }
  const double step_t = grid_t(gi) * (std::pow(kTMax / kTMin, 1.0 / (kGridT - 1)) - 1.0);
  const double step_ts = 1.0 / 6.0;
  const auto from_grid = nelder_mead(obj, {grid_t(gi), grid_ts(gj)}, {step_t, step_ts});
  const auto from_vanilla = nelder_mead(obj, {vanilla.t, 0.0}, {t_step, step_ts});

  // Candidates in preference order; ties keep the earlier one.
  struct Candidate {
    double t, t_s, value;
  };
  const Candidate candidates[] = {
      {vanilla.t, 0.0, obj({vanilla.t, 0.0})},
      {from_vanilla.x[0], from_vanilla.x[1], from_vanilla.value},
      {from_grid.x[0], from_grid.x[1], from_grid.value},
      {grid_t(gi), grid_ts(gj), grid_best},
  };
  const Candidate* pick = &candidates[0];
  for (const auto& c : candidates) {
    if (c.value < pick->value) pick = &c;
  }
  model.t = pick->t;
  model.t_s = pick->t_s;
  return model;
}

std::vector<double> confidence(const ProbabilityMatrix& probabilities) {
  std::vector<double> out(probabilities.rows());
  for (std::size_t i = 0; i < probabilities.rows(); ++i) {
    const auto row = probabilities.row(i);
    out[i] = *std::max_element(row.begin(), row.end());
  }
  return out;
}

std::string model_to_json(const CalibrationModel& model) {
  nlohmann::ordered_json doc;
  doc["variant"] = std::string(to_string(model.variant));
  doc["t"] = model.t;
  doc["t_s"] = model.t_s;
  doc["tau_floor"] = model.tau_floor;
  return doc.dump(2) + "\n";
}

CalibrationModel model_from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    CalibrationModel m;
    m.variant = parse_variant(doc.at("variant").get<std::string>());
    m.t = doc.at("t").get<double>();
    m.t_s = doc.at("t_s").get<double>();
    m.tau_floor = doc.at("tau_floor").get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ParseError, std::string("calibration model: ") + e.what());
  }
}

}  // namespace lata
