#include "lata/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lata/error.hpp"

namespace lata {

namespace {

double diameter(const std::vector<std::vector<double>>& simplex) {
  double best = 0.0;
  for (std::size_t i = 0; i < simplex.size(); ++i) {
    for (std::size_t j = i + 1; j < simplex.size(); ++j) {
      double sq = 0.0;
      for (std::size_t d = 0; d < simplex[i].size(); ++d) {
        const double diff = simplex[i][d] - simplex[j][d];
        sq += diff * diff;
      }
      best = std::max(best, std::sqrt(sq));
    }
  }
  return best;
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                             std::vector<double> x0, const std::vector<double>& steps,
                             const NelderMeadOptions& options) {
  const std::size_t dim = x0.size();
  if (dim == 0 || steps.size() != dim) fail(Errc::InvalidArgument, "Nelder-Mead needs matching x0 and steps");

  std::vector<std::vector<double>> simplex(dim + 1, x0);
  for (std::size_t i = 0; i < dim; ++i) simplex[i + 1][i] += steps[i];
  std::vector<double> values(dim + 1);
  for (std::size_t i = 0; i <= dim; ++i) values[i] = objective(simplex[i]);

  std::vector<std::size_t> order(dim + 1);
  NelderMeadResult result;
  auto point = [&](const std::vector<double>& centroid, const std::vector<double>& worst, double coeff) {
    std::vector<double> p(dim);
    for (std::size_t d = 0; d < dim; ++d) p[d] = centroid[d] + coeff * (worst[d] - centroid[d]);
    return p;
  };

  int it = 0;
  for (; it < options.max_iterations; ++it) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Stable on equal values so runs are reproducible.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    {
      std::vector<std::vector<double>> s(dim + 1);
      std::vector<double> v(dim + 1);
      for (std::size_t i = 0; i <= dim; ++i) {
        s[i] = simplex[order[i]];
        v[i] = values[order[i]];
      }
      simplex.swap(s);
      values.swap(v);
    }
    if (diameter(simplex) < options.diameter_tol) {
      result.converged = true;
      break;
    }

    std::vector<double> centroid(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t d = 0; d < dim; ++d) centroid[d] += simplex[i][d] / static_cast<double>(dim);

    const auto& worst = simplex[dim];
    const auto reflected = point(centroid, worst, -1.0);
    const double f_r = objective(reflected);
    if (f_r < values[0]) {
      const auto expanded = point(centroid, worst, -2.0);
      const double f_e = objective(expanded);
      if (f_e < f_r) {
        simplex[dim] = expanded;
        values[dim] = f_e;
      } else {
        simplex[dim] = reflected;
        values[dim] = f_r;
      }
      continue;
    }
    if (f_r < values[dim - 1]) {
      simplex[dim] = reflected;
      values[dim] = f_r;
      continue;
    }
    const bool outside = f_r < values[dim];
    const auto contracted = point(centroid, worst, outside ? -0.5 : 0.5);
    const double f_c = objective(contracted);
    if (f_c < (outside ? f_r : values[dim])) {
      simplex[dim] = contracted;
      values[dim] = f_c;
      continue;
    }
    for (std::size_t i = 1; i <= dim; ++i) {
      for (std::size_t d = 0; d < dim; ++d) simplex[i][d] = simplex[0][d] + 0.5 * (simplex[i][d] - simplex[0][d]);
      values[i] = objective(simplex[i]);
    }
  }

  const auto best = std::min_element(values.begin(), values.end()) - values.begin();
  result.x = simplex[static_cast<std::size_t>(best)];
  result.value = values[static_cast<std::size_t>(best)];
  result.iterations = it;
  return result;
}

}  // namespace lata
