#pragma once
// Executable checks of the two agreement guarantees:
//  * regression error bound: if a rotated foundation encoder with a nearby
//    head predicts exactly, the classifier's error is at most
//    (C + |w0|) * |B0(x) - U H(x)| + C;
//  * NDCG lower bound: under a delta-local approximate isometry of the
//    k-neighbourhood, reciprocal-distance NDCG >= 1 / delta^2.
// Distances here are Euclidean, unlike the cosine ranking of the pipeline.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace lata::theory {

struct SyntheticRegression {
  Eigen::MatrixXd b0;   // n x k, unit rows
  Eigen::MatrixXd h;    // n x k foundation features
  Eigen::MatrixXd u_h;  // k x k orthogonal
  Eigen::VectorXd w0;
  Eigen::VectorXd delta;  // |delta| <= c
  Eigen::VectorXd w_h;
  Eigen::VectorXd y;
  double c = 0.0;
};

/// Per-sample residual |B0(x) - U_h H(x)| is uniform in [0, noise].
SyntheticRegression gen_regression(std::size_t n, std::size_t k, double c, double noise, std::uint64_t seed);

struct Prop1Row {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  bool holds = false;
};

inline constexpr double kBoundTolerance = 1e-9;

/// Throws ConstructionViolated if the foundation head does not fit y exactly.
std::vector<Prop1Row> check_prop1(const SyntheticRegression& instance);

struct DistortionField {
  Eigen::MatrixXd base;         // n x d
  Eigen::MatrixXd transformed;  // f(base)
  Eigen::VectorXd query;
  Eigen::VectorXd query_image;  // f(query)
  std::vector<std::size_t> neighborhood;  // k nearest base rows to query, nearest first
  std::vector<double> ratios;             // |f(z)-f(x)| / |z-x| on the neighbourhood
  double delta = 1.0;
  int attempts = 0;
};

/// f = random rotation composed with a smooth radial modulation about the
/// query; certified against the ratio bound on the k-neighbourhood.
DistortionField gen_distortion(std::size_t n, std::size_t d, std::size_t k, double delta, std::uint64_t seed);

/// Same construction over caller-supplied base points. Rejects any base
/// point within 1e-12 of the query (reciprocal importance is undefined there).
DistortionField make_distortion(Eigen::MatrixXd base, Eigen::VectorXd query, std::size_t k, double delta,
                                std::uint64_t seed);

/// Re-verifies the ratio bound on the neighbourhood of an existing field.
bool certify(const DistortionField& field);

struct Prop2Result {
  double ndcg = 0.0;
  double lower_bound = 0.0;
  bool holds = false;
};

Prop2Result check_prop2(const DistortionField& field);

struct BenchOptions {
  std::size_t trials = 1000;
  std::uint64_t seed = 1;
  std::vector<double> cs = {0.0, 0.1, 1.0};
  std::vector<double> deltas = {1.1, 1.5, 2.0, 5.0};
  std::size_t regression_n = 64;
  std::size_t regression_k = 16;
  std::size_t field_n = 200;
  std::size_t field_d = 8;
  std::size_t field_k = 20;
};

struct Prop1Trial {
  std::size_t trial = 0;
  double c = 0.0;
  double noise = 0.0;
  std::size_t violations = 0;
  double min_slack = 0.0;  // min over samples of rhs - lhs
  double max_slack = 0.0;
};

struct Prop2Trial {
  std::size_t trial = 0;
  double delta = 1.0;
  double ndcg = 0.0;
  double lower_bound = 0.0;
  bool holds = false;
};

struct BenchSummary {
  std::vector<Prop1Trial> prop1;
  std::vector<Prop2Trial> prop2;
  std::size_t prop1_violations = 0;
  std::size_t prop2_violations = 0;
};

/// Trial i uses seed derived from (options.seed, i), so results do not
/// depend on scheduling.
BenchSummary run_bench(const BenchOptions& options);

std::string summary_json(const BenchSummary& summary);
std::string prop1_csv(const BenchSummary& summary);
std::string prop2_csv(const BenchSummary& summary);

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t index) noexcept;

}  // namespace lata::theory
