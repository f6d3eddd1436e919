#include "lata/theory.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "lata/agreement.hpp"
#include "lata/csv.hpp"
#include "lata/error.hpp"
#include "lata/parallel.hpp"

namespace lata::theory {

namespace {

constexpr int kResampleBudget = 100;
constexpr double kCoincident = 1e-12;

Eigen::MatrixXd random_orthogonal(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = g(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ();
}

Eigen::VectorXd random_direction(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd v(n);
  do {
    for (auto& x : v) x = g(rng);
  } while (v.norm() == 0.0);
  return v.normalized();
}

std::uint64_t splitmix(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

bool ratio_ok(double ratio, double delta) {
  if (delta == 1.0) return std::abs(ratio - 1.0) <= 1e-12;
  return ratio > 1.0 / delta && ratio < delta;
}

DistortionField build_field(Eigen::MatrixXd base, Eigen::VectorXd query, std::size_t k, double delta,
                            std::mt19937_64& rng) {
  if (!(delta >= 1.0)) fail(Errc::InvalidArgument, "delta must be >= 1");
  const auto n = static_cast<std::size_t>(base.rows());
  if (k == 0 || k > n) fail(Errc::KOutOfRange, "neighbourhood size outside [1, n]");
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    dist[i] = (base.row(static_cast<Eigen::Index>(i)).transpose() - query).norm();
    if (dist[i] < kCoincident) {
      fail(Errc::InvalidArgument, "pool point " + std::to_string(i) + " coincides with the query");
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
  order.resize(k);

  DistortionField field;
  field.base = std::move(base);
  field.query = std::move(query);
  field.neighborhood = order;
  field.delta = delta;

  const auto d = field.base.cols();
  const double r_min = dist[order.front()];
  const double r_max = dist[order.back()];
  const double span = std::max(r_max - r_min, 1e-9);
  const double delta_inner = 0.99 * delta + 0.01;
  const double amplitude = 0.999 * std::log(delta_inner);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int attempt = 1; attempt <= kResampleBudget; ++attempt) {
    const Eigen::MatrixXd q = random_orthogonal(d, rng);
    const Eigen::VectorXd shift = random_direction(d, rng) * 3.0 * unit(rng);
    const double omega = 2.0 * M_PI * (0.5 + 4.5 * unit(rng)) / span;
    const double phase = 2.0 * M_PI * unit(rng);
    auto g = [&](double rho) { return std::exp(amplitude * std::sin(omega * rho + phase)); };

    field.query_image = q * field.query + shift;
    field.transformed.resize(field.base.rows(), d);
    for (Eigen::Index i = 0; i < field.base.rows(); ++i) {
      const Eigen::VectorXd offset = field.base.row(i).transpose() - field.query;
      field.transformed.row(i) = (q * (field.query + g(offset.norm()) * offset) + shift).transpose();
    }
    field.attempts = attempt;
    field.ratios.clear();
    for (std::size_t i : order) {
      const auto row = static_cast<Eigen::Index>(i);
      field.ratios.push_back((field.transformed.row(row).transpose() - field.query_image).norm() / dist[i]);
    }
    if (certify(field)) return field;
  }
  fail(Errc::ResampleBudgetExceeded, "no certified distortion after " + std::to_string(kResampleBudget) + " attempts");
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix(master ^ splitmix(index + 1));
}

SyntheticRegression gen_regression(std::size_t n, std::size_t k, double c, double noise, std::uint64_t seed) {
  if (k < 2) fail(Errc::InvalidArgument, "latent dimension k must be >= 2");
  if (n == 0) fail(Errc::InvalidArgument, "need at least one sample");
  if (!(c >= 0.0) || !(noise >= 0.0)) fail(Errc::InvalidArgument, "C and noise must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto kk = static_cast<Eigen::Index>(k);
  const auto nn = static_cast<Eigen::Index>(n);

  SyntheticRegression s;
  s.c = c;
  s.u_h = random_orthogonal(kk, rng);
  s.w0.resize(kk);
  for (auto& x : s.w0) x = gauss(rng);
  s.delta = random_direction(kk, rng) * (c * unit(rng));
  s.w_h = s.u_h.transpose() * (s.w0 + s.delta);

  s.b0.resize(nn, kk);
  s.h.resize(nn, kk);
  s.y.resize(nn);
  for (Eigen::Index i = 0; i < nn; ++i) {
    const Eigen::VectorXd b = random_direction(kk, rng);
    const Eigen::VectorXd e = random_direction(kk, rng) * (noise * unit(rng));
    s.b0.row(i) = b.transpose();
    const Eigen::VectorXd h = s.u_h.transpose() * (b + e);
    s.h.row(i) = h.transpose();
    s.y[i] = s.w_h.dot(h);
  }
  return s;
}

std::vector<Prop1Row> check_prop1(const SyntheticRegression& s) {
  const double w0_norm = s.w0.norm();
  std::vector<Prop1Row> rows(static_cast<std::size_t>(s.b0.rows()));
  for (Eigen::Index i = 0; i < s.b0.rows(); ++i) {
    const Eigen::VectorXd h = s.h.row(i).transpose();
    const Eigen::VectorXd b = s.b0.row(i).transpose();
    if (std::abs(s.w_h.dot(h) - s.y[i]) > kBoundTolerance) {
      fail(Errc::ConstructionViolated, "foundation head does not fit sample " + std::to_string(i));
    }
    Prop1Row& r = rows[static_cast<std::size_t>(i)];
    r.lhs = std::abs(s.w0.dot(b) - s.y[i]);
    r.residual = (b - s.u_h * h).norm();
    r.rhs = (s.c + w0_norm) * r.residual + s.c;
    r.holds = r.lhs <= r.rhs + kBoundTolerance;
  }
  return rows;
}

DistortionField gen_distortion(std::size_t n, std::size_t d, std::size_t k, double delta, std::uint64_t seed) {
  if (n == 0 || d == 0) fail(Errc::InvalidArgument, "need a non-empty pool");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto nn = static_cast<Eigen::Index>(n);
  const auto dd = static_cast<Eigen::Index>(d);
  Eigen::VectorXd query(dd);
  for (auto& x : query) x = gauss(rng);
  Eigen::MatrixXd base(nn, dd);
  for (Eigen::Index i = 0; i < nn; ++i) {
    do {
      for (Eigen::Index j = 0; j < dd; ++j) base(i, j) = gauss(rng);
    } while ((base.row(i).transpose() - query).norm() < kCoincident);
  }
  return build_field(std::move(base), std::move(query), k, delta, rng);
}

DistortionField make_distortion(Eigen::MatrixXd base, Eigen::VectorXd query, std::size_t k, double delta,
                                std::uint64_t seed) {
  if (base.cols() != query.size()) fail(Errc::DimensionMismatch, "query dimension differs from base points");
  std::mt19937_64 rng(seed);
  return build_field(std::move(base), std::move(query), k, delta, rng);
}

bool certify(const DistortionField& field) {
  if (field.ratios.size() != field.neighborhood.size()) return false;
  for (std::size_t j = 0; j < field.neighborhood.size(); ++j) {
    const auto row = static_cast<Eigen::Index>(field.neighborhood[j]);
    const double before = (field.base.row(row).transpose() - field.query).norm();
    const double after = (field.transformed.row(row).transpose() - field.query_image).norm();
    if (!(before > 0.0) || !ratio_ok(after / before, field.delta)) return false;
  }
  return true;
}

Prop2Result check_prop2(const DistortionField& field) {
  const std::size_t k = field.neighborhood.size();
  std::vector<double> base_dist(k), image_dist(k);
  for (std::size_t j = 0; j < k; ++j) {
    const auto row = static_cast<Eigen::Index>(field.neighborhood[j]);
    base_dist[j] = (field.base.row(row).transpose() - field.query).norm();
    image_dist[j] = (field.transformed.row(row).transpose() - field.query_image).norm();
  }
  // Local ids follow the base-space order, so the ideal ranking is 0..k-1.
  std::vector<PoolIndex> ideal(k), candidate(k);
  std::iota(ideal.begin(), ideal.end(), PoolIndex{0});
  std::iota(candidate.begin(), candidate.end(), PoolIndex{0});
  std::stable_sort(candidate.begin(), candidate.end(),
                   [&](PoolIndex a, PoolIndex b) { return image_dist[a] < image_dist[b]; });
  Prop2Result r;
  r.ndcg = ndcg(ideal, candidate, Importance::reciprocal_distance(base_dist));
  r.lower_bound = 1.0 / (field.delta * field.delta);
  r.holds = r.ndcg >= r.lower_bound - kBoundTolerance;
  return r;
}

BenchSummary run_bench(const BenchOptions& opt) {
  BenchSummary s;
  s.prop1.resize(opt.trials);
  s.prop2.resize(opt.trials);
  parallel_for(opt.trials, [&](std::size_t t) {
    const std::uint64_t seed = trial_seed(opt.seed, t);
    std::mt19937_64 rng(seed);
    const double noise = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    Prop1Trial p1;
    p1.trial = t;
    p1.c = opt.cs[t % opt.cs.size()];
    p1.noise = noise;
    const auto rows = check_prop1(gen_regression(opt.regression_n, opt.regression_k, p1.c, noise, seed));
    p1.min_slack = INFINITY;
    p1.max_slack = -INFINITY;
    for (const auto& r : rows) {
      p1.violations += r.holds ? 0 : 1;
      p1.min_slack = std::min(p1.min_slack, r.rhs - r.lhs);
      p1.max_slack = std::max(p1.max_slack, r.rhs - r.lhs);
    }
    s.prop1[t] = p1;

    Prop2Trial p2;
    p2.trial = t;
    p2.delta = opt.deltas[t % opt.deltas.size()];
    const auto res = check_prop2(gen_distortion(opt.field_n, opt.field_d, opt.field_k, p2.delta, seed ^ 0x5151));
    p2.ndcg = res.ndcg;
    p2.lower_bound = res.lower_bound;
    p2.holds = res.holds;
    s.prop2[t] = p2;
  });
  for (const auto& p : s.prop1) s.prop1_violations += p.violations;
  for (const auto& p : s.prop2) s.prop2_violations += p.holds ? 0 : 1;
  return s;
}

std::string summary_json(const BenchSummary& s) {
  nlohmann::ordered_json doc;
  double p1_min = INFINITY, p1_max = -INFINITY;
  for (const auto& p : s.prop1) {
    p1_min = std::min(p1_min, p.min_slack);
    p1_max = std::max(p1_max, p.max_slack);
  }
  doc["prop1"] = {{"trials", s.prop1.size()},
                  {"violations", s.prop1_violations},
                  {"min_slack", s.prop1.empty() ? 0.0 : p1_min},
                  {"max_slack", s.prop1.empty() ? 0.0 : p1_max}};
  double p2_min = INFINITY, p2_max = -INFINITY;
  std::map<double, std::pair<double, std::size_t>> by_delta;
  for (const auto& p : s.prop2) {
    p2_min = std::min(p2_min, p.ndcg - p.lower_bound);
    p2_max = std::max(p2_max, p.ndcg - p.lower_bound);
    by_delta[p.delta].first += p.ndcg;
    by_delta[p.delta].second += 1;
  }
  nlohmann::ordered_json means = nlohmann::ordered_json::object();
  for (const auto& [delta, acc] : by_delta) means[format_double(delta)] = acc.first / static_cast<double>(acc.second);
  doc["prop2"] = {{"trials", s.prop2.size()},
                  {"violations", s.prop2_violations},
                  {"min_slack", s.prop2.empty() ? 0.0 : p2_min},
                  {"max_slack", s.prop2.empty() ? 0.0 : p2_max},
                  {"mean_ndcg_by_delta", means}};
  return doc.dump(2) + "\n";
}

std::string prop1_csv(const BenchSummary& s) {
  std::ostringstream out;
  out << "trial,c,noise,violations,min_slack,max_slack\n";
  for (const auto& p : s.prop1) {
    out << p.trial << ',' << format_double(p.c) << ',' << format_double(p.noise) << ',' << p.violations << ','
        << format_double(p.min_slack) << ',' << format_double(p.max_slack) << '\n';
  }
  return out.str();
}

std::string prop2_csv(const BenchSummary& s) {
  std::ostringstream out;
  out << "trial,delta,ndcg,lower_bound,slack,holds\n";
  for (const auto& p : s.prop2) {
    out << p.trial << ',' << format_double(p.delta) << ',' << format_double(p.ndcg) << ','
        << format_double(p.lower_bound) << ',' << format_double(p.ndcg - p.lower_bound) << ',' << (p.holds ? 1 : 0)
        << '\n';
  }
  return out.str();
}

}  // namespace lata::theory
