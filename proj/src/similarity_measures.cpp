#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "lata/agreement.hpp"
#include "lata/error.hpp"

namespace lata {

namespace {

Eigen::MatrixXd to_eigen(const FeatureMatrix& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

Eigen::MatrixXd center_columns(Eigen::MatrixXd x) {
  x.rowwise() -= x.colwise().mean();
  return x;
}

Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& x) {
  const auto n = x.rows();
  Eigen::MatrixXd sq(n, n);
  std::vector<double> dists;
  for (Eigen::Index i = 0; i < n; ++i) {
    sq(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      sq(i, j) = sq(j, i) = (x.row(i) - x.row(j)).squaredNorm();
      dists.push_back(std::sqrt(sq(i, j)));
    }
  }
  auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
  std::nth_element(dists.begin(), mid, dists.end());
  double sigma = *mid;
  if (dists.size() % 2 == 0) sigma = 0.5 * (sigma + *std::max_element(dists.begin(), mid));
  if (!(sigma > 0.0)) fail(Errc::DegenerateFeatures, "RBF bandwidth is zero");
  return (-sq / (2.0 * sigma * sigma)).array().exp().matrix();
}

Eigen::MatrixXd center_gram(const Eigen::MatrixXd& k) {
  const Eigen::VectorXd row_mean = k.rowwise().mean();
  const Eigen::VectorXd col_mean = k.colwise().mean().transpose();
  Eigen::MatrixXd out = k;
  out.colwise() -= row_mean;
  out.rowwise() -= col_mean.transpose();
  out.array() += k.mean();
  return out;
}

}  // namespace

double spearman_agreement(std::span<const PoolIndex> a, std::span<const PoolIndex> b) {
  const std::size_t n = a.size();
  if (n < 2) fail(Errc::TooFewItems, "Spearman needs at least two items");
  if (b.size() != n) fail(Errc::PermutationDomainMismatch, "rankings differ in size");
  std::vector<std::int64_t> pos_a(n, -1), pos_b(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] >= n || b[i] >= n || pos_a[a[i]] >= 0 || pos_b[b[i]] >= 0) {
      fail(Errc::PermutationDomainMismatch, "rankings are not permutations of the same index set");
    }
    pos_a[a[i]] = static_cast<std::int64_t>(i);
    pos_b[b[i]] = static_cast<std::int64_t>(i);
  }
  double sum_sq = 0.0;
  for (std::size_t id = 0; id < n; ++id) {
    const double d = static_cast<double>(pos_a[id] - pos_b[id]);
    sum_sq += d * d;
  }
  const double nd = static_cast<double>(n);
  return 1.0 - 6.0 * sum_sq / (nd * (nd * nd - 1.0));
}

double jaccard_agreement(std::span<const PoolIndex> a, std::span<const PoolIndex> b, std::size_t k) {
  if (k == 0 || k > a.size() || k > b.size()) {
    fail(Errc::KOutOfRange, "k=" + std::to_string(k) + " outside the ranking length");
  }
  std::unordered_set<PoolIndex> left(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(k));
  std::unordered_set<PoolIndex> uni = left;
  std::size_t inter = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (left.count(b[i])) ++inter;
    uni.insert(b[i]);
  }
  return static_cast<double>(inter) / static_cast<double>(uni.size());
}

double cka_agreement(const FeatureMatrix& a, const FeatureMatrix& b, CkaKernel kernel) {
  if (a.rows() != b.rows()) fail(Errc::LengthMismatch, "CKA inputs must be row aligned");
  if (a.rows() < 2) fail(Errc::TooFewItems, "CKA needs at least two rows");
  if (kernel.kind == CkaKernel::Kind::linear) {
    const Eigen::MatrixXd x = center_columns(to_eigen(a));
    const Eigen::MatrixXd y = center_columns(to_eigen(b));
    const double xx = (x.transpose() * x).norm();
    const double yy = (y.transpose() * y).norm();
    if (!(xx > 0.0) || !(yy > 0.0)) fail(Errc::DegenerateFeatures, "all rows identical");
    return (y.transpose() * x).squaredNorm() / (xx * yy);
  }
  const Eigen::MatrixXd k = center_gram(rbf_gram(to_eigen(a)));
  const Eigen::MatrixXd l = center_gram(rbf_gram(to_eigen(b)));
  const double kl = (k.array() * l.array()).sum();
  const double kk = (k.array() * k.array()).sum();
  const double ll = (l.array() * l.array()).sum();
  if (!(kk > 0.0) || !(ll > 0.0)) fail(Errc::DegenerateFeatures, "centered Gram matrix vanishes");
  return kl / std::sqrt(kk * ll);
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(Errc::LengthMismatch, "Pearson inputs differ in length");
  if (a.size() < 2) fail(Errc::TooFewItems, "Pearson needs at least two samples");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) fail(Errc::ZeroVariance, "Pearson input has zero variance");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<AccuracyBin> agreement_accuracy_curve(std::span<const double> scores,
                                                  std::span<const std::uint8_t> correct, std::size_t bins) {
  if (scores.size() != correct.size()) fail(Errc::LengthMismatch, "scores vs correctness");
  if (bins == 0) fail(Errc::InvalidArgument, "need at least one bin");
  if (scores.empty()) fail(Errc::InvalidArgument, "no scores");
  const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<std::size_t> count(bins, 0), hits(bins, 0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    std::size_t b = 0;
    if (width > 0.0) b = std::min(bins - 1, static_cast<std::size_t>((scores[i] - lo) / width));
    ++count[b];
    hits[b] += correct[i] ? 1 : 0;
  }
  std::vector<AccuracyBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].center = lo + (static_cast<double>(b) + 0.5) * width;
    out[b].count = count[b];
    if (count[b] > 0) out[b].accuracy = static_cast<double>(hits[b]) / static_cast<double>(count[b]);
  }
  return out;
}

}  // namespace lata
