#pragma once
// Synthetic classifier/foundation bundles where failures carry distorted
// foundation neighbourhoods.
//
// Class c has a unit centre mu_c in the classifier space. A correctly
// modelled sample of class y sits at mu_y + eps; the foundation spaces see
// mu_y + rho*eps + sqrt(1-rho^2)*xi, embedded by a random rotation. A failure
// sample is pulled towards a wrong class w in the classifier space
// (alpha*mu_y + (1-alpha)*mu_w + eps, alpha < 0.4) while every foundation
// space still places it with class y. Logits are beta * <mu_c, z> + noise
// with a per-sample sharpness beta, so softmax confidence alone is only
// partly informative.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lata/arraystore.hpp"

namespace lata {

struct SyntheticOptions {
  std::size_t n_pool = 10000;
  std::size_t n_val = 2000;
  std::size_t n_test = 2000;
  std::size_t dim = 64;
  std::size_t classes = 10;
  std::vector<std::size_t> foundation_dims = {96, 80};
  double failure_rate = 0.25;
  double noise = 0.12;        // per-coordinate classifier noise
  double correlation = 0.8;   // rho between classifier and foundation noise
  double beta_min = 2.0;
  double beta_max = 8.0;
  double logit_noise = 0.3;
  std::uint64_t seed = 7;
};

struct SyntheticBundle {
  Dataset pool;
  Dataset val;
  Dataset test;
};

SyntheticBundle make_synthetic_bundle(const SyntheticOptions& options);

struct BundlePaths {
  std::filesystem::path pool, val, test;
};

BundlePaths write_bundle(const SyntheticBundle& bundle, const std::filesystem::path& dir);

}  // namespace lata
