#pragma once
// Temperature scaling with an input-dependent temperature
//   tau(x) = t + t_s * agreement(x),
// applied as softmax(logits / max(tau(x), tau_floor)).

#include <span>
#include <string>

#include "lata/matrix.hpp"

namespace lata {

enum class CalibrationVariant { vanilla, agreement };

std::string_view to_string(CalibrationVariant v) noexcept;
CalibrationVariant parse_variant(std::string_view text);

struct CalibrationModel {
  CalibrationVariant variant = CalibrationVariant::vanilla;
  double t = 1.0;
  double t_s = 0.0;  // ignored by the vanilla variant
  double tau_floor = 1e-3;

  double temperature(double agreement) const noexcept {
    const double tau = variant == CalibrationVariant::agreement ? t + t_s * agreement : t;
    return tau < tau_floor ? tau_floor : tau;
  }
};

inline constexpr double kProbabilityFloor = 1e-12;

/// Row-wise recalibrated probabilities. `agreement` may be empty for the
/// vanilla variant; otherwise it must have one entry per row.
ProbabilityMatrix apply(const CalibrationModel& model, const LogitsMatrix& logits,
                        std::span<const double> agreement = {});

/// Plain softmax (temperature 1).
ProbabilityMatrix softmax(const LogitsMatrix& logits);

/// Mean negative log-likelihood; probabilities floored at 1e-12 in the log.
double nll(const ProbabilityMatrix& probabilities, const LabelVector& labels);

/// nll(apply(model, ...), labels) without materialising the probabilities;
/// bit-identical to the two-step form.
double calibration_nll(const CalibrationModel& model, const LogitsMatrix& logits, const LabelVector& labels,
                       std::span<const double> agreement = {});

/// Minimises validation NLL: log-spaced grid over t in [0.05, 10] (60
/// points) x t_s in [-5, 5] (61 points, agreement variant only), then
/// Nelder-Mead from the best cell. The agreement variant also refines from
/// the vanilla optimum, so its NLL never exceeds the vanilla fit.
CalibrationModel fit(const LogitsMatrix& logits, const LabelVector& labels, std::span<const double> agreement,
                     CalibrationVariant variant);

/// Row-wise maximum probability.
std::vector<double> confidence(const ProbabilityMatrix& probabilities);

std::string model_to_json(const CalibrationModel& model);
CalibrationModel model_from_json(const std::string& text);

/// Throws NonFiniteLogit on NaN/Inf.
void check_logits(const LogitsMatrix& logits);

}  // namespace lata
