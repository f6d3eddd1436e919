#include "lata/synthetic.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "lata/error.hpp"

namespace lata {

namespace {

Eigen::MatrixXd random_orthogonal(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = g(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  // Fix column signs so Q is Haar distributed.
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return q;
}

struct Generator {
  const SyntheticOptions& opt;
  std::mt19937_64 rng;
  std::normal_distribution<double> gauss{0.0, 1.0};
  std::uniform_real_distribution<double> unit{0.0, 1.0};
  std::vector<Eigen::VectorXd> centres;
  std::vector<Eigen::MatrixXd> rotations;

  explicit Generator(const SyntheticOptions& o) : opt(o), rng(o.seed) {
    for (std::size_t c = 0; c < opt.classes; ++c) {
      Eigen::VectorXd v(opt.dim);
      for (auto& x : v) x = gauss(rng);
      centres.push_back(v.normalized());
    }
    for (std::size_t h : opt.foundation_dims) {
      if (h < opt.dim) fail(Errc::InvalidArgument, "foundation dimension must be >= classifier dimension");
      rotations.push_back(random_orthogonal(h, rng));
    }
  }

  Eigen::VectorXd noise_vec(std::size_t d, double scale) {
    Eigen::VectorXd v(d);
    for (auto& x : v) x = scale * gauss(rng);
    return v;
  }

  std::size_t draw_class() { return static_cast<std::size_t>(unit(rng) * static_cast<double>(opt.classes)) % opt.classes; }

  Dataset make(std::size_t n, Split split, bool allow_failures) {
    Dataset d;
    d.split = split;
    d.seed = opt.seed;
    d.classifier = FeatureMatrix(n, opt.dim);
    for (std::size_t m = 0; m < rotations.size(); ++m) {
      d.foundation.push_back({"fm" + std::to_string(m), FeatureMatrix(n, opt.foundation_dims[m])});
    }
    d.logits = LogitsMatrix(n, opt.classes);
    d.labels.resize(n);

    const double rho = opt.correlation;
    const double rest = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t y = draw_class();
      const Eigen::VectorXd eps = noise_vec(opt.dim, opt.noise);
      Eigen::VectorXd z = centres[y] + eps;
      if (allow_failures && unit(rng) < opt.failure_rate) {
        std::size_t w = draw_class();
        while (w == y) w = draw_class();
        const double alpha = 0.4 * unit(rng);
        z = alpha * centres[y] + (1.0 - alpha) * centres[w] + eps;
      }
      for (std::size_t j = 0; j < opt.dim; ++j) d.classifier(i, j) = static_cast<float>(z[static_cast<Eigen::Index>(j)]);

      for (std::size_t m = 0; m < rotations.size(); ++m) {
        const std::size_t h = opt.foundation_dims[m];
        Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(h));
        u.head(static_cast<Eigen::Index>(opt.dim)) = centres[y] + rho * eps + rest * noise_vec(opt.dim, opt.noise);
        if (h > opt.dim) u.tail(static_cast<Eigen::Index>(h - opt.dim)) = noise_vec(h - opt.dim, 0.02);
        const Eigen::VectorXd out = rotations[m] * u;
        auto& f = d.foundation[m].features;
        for (std::size_t j = 0; j < h; ++j) f(i, j) = static_cast<float>(out[static_cast<Eigen::Index>(j)]);
      }

      const double beta = opt.beta_min + (opt.beta_max - opt.beta_min) * unit(rng);
      for (std::size_t c = 0; c < opt.classes; ++c) {
        (*d.logits)(i, c) = static_cast<float>(beta * centres[c].dot(z) + opt.logit_noise * gauss(rng));
      }
      d.labels[i] = static_cast<std::int32_t>(y);
    }
    return d;
  }
};

}  // namespace

SyntheticBundle make_synthetic_bundle(const SyntheticOptions& options) {
  if (options.classes < 2 || options.dim == 0 || options.foundation_dims.empty()) {
    fail(Errc::InvalidArgument, "synthetic bundle needs >= 2 classes, a positive dimension and a foundation space");
  }
  if (options.n_pool == 0 || options.n_val == 0 || options.n_test == 0) {
    fail(Errc::InvalidArgument, "synthetic splits must be non-empty");
  }
  Generator gen(options);
  SyntheticBundle b;
  b.pool = gen.make(options.n_pool, Split::pool, false);
  b.val = gen.make(options.n_val, Split::validation, true);
  b.test = gen.make(options.n_test, Split::test, true);
  return b;
}

BundlePaths write_bundle(const SyntheticBundle& bundle, const std::filesystem::path& dir) {
  return {write_dataset(bundle.pool, dir / "pool"), write_dataset(bundle.val, dir / "val"),
          write_dataset(bundle.test, dir / "test")};
}

}  // namespace lata
