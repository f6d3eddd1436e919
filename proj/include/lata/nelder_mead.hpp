#pragma once

#include <functional>
#include <vector>

namespace lata {

struct NelderMeadOptions {
  double diameter_tol = 1e-6;  // stop once the simplex is this small
  int max_iterations = 500;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Downhill simplex minimiser with the standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2). Deterministic.
/// The initial simplex is x0 plus steps[i] along each axis.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                             std::vector<double> x0, const std::vector<double>& steps,
                             const NelderMeadOptions& options = {});

}  // namespace lata
