#include "lata/neighborhood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "lata/error.hpp"
#include "lata/parallel.hpp"
#include "lata/simd.hpp"

namespace lata {

namespace {

// Pool rows per block in rank_batch; queries in a block reuse the same rows
// while they are cache resident.
constexpr std::size_t kPoolBlock = 512;
constexpr std::size_t kQueryBlock = 16;

double inverse_norm_of(std::span<const float> v) {
  const double sq = simd::dot(v.data(), v.data(), v.size());
  return sq > 0.0 ? 1.0 / std::sqrt(sq) : 0.0;
}

}  // namespace

Pool::Pool(FeatureMatrix features, std::optional<LabelVector> labels)
    : features_(std::move(features)), labels_(std::move(labels)) {
  if (features_.rows() == 0 || features_.cols() == 0) fail(Errc::InvalidArgument, "pool is empty");
  if (features_.rows() > std::numeric_limits<PoolIndex>::max()) fail(Errc::InvalidArgument, "pool too large");
  if (labels_ && labels_->size() != features_.rows()) {
    fail(Errc::RowCountMismatch, "pool labels do not match pool rows");
  }
  inv_norms_.resize(features_.rows());
  for (std::size_t i = 0; i < features_.rows(); ++i) {
    inv_norms_[i] = inverse_norm_of(features_.row(i));
    if (inv_norms_[i] == 0.0 || !std::isfinite(inv_norms_[i])) {
      fail(Errc::ZeroNormRow, "pool row " + std::to_string(i) + " has zero norm");
    }
  }
}

void check_query(std::span<const float> query, const Pool& pool) {
  if (query.size() != pool.dim()) {
    fail(Errc::DimensionMismatch,
         "query has dimension " + std::to_string(query.size()) + ", pool has " + std::to_string(pool.dim()));
  }
  if (inverse_norm_of(query) == 0.0) fail(Errc::ZeroNormQuery, "query vector has zero norm");
}

void Pool::similarities(std::span<const float> query, std::span<double> out) const {
  check_query(query, *this);
  const double q_inv = inverse_norm_of(query);
  const auto& k = simd::active_kernels();
  const std::size_t d = dim();
  for (std::size_t i = 0; i < size(); ++i) {
    out[i] = k.dot(query.data(), features_.data() + i * d, d) * inv_norms_[i] * q_inv;
  }
}

std::vector<double> Pool::similarities(std::span<const float> query) const {
  std::vector<double> sims(size());
  similarities(query, sims);
  return sims;
}

Permutation permutation_from_similarities(std::vector<double> sims) {
  Permutation perm;
  perm.order.resize(sims.size());
  std::iota(perm.order.begin(), perm.order.end(), PoolIndex{0});
  std::sort(perm.order.begin(), perm.order.end(),
            [&](PoolIndex a, PoolIndex b) { return ranks_before(sims[a], a, sims[b], b); });
  perm.similarities.resize(sims.size());
  for (std::size_t i = 0; i < sims.size(); ++i) perm.similarities[i] = sims[perm.order[i]];
  return perm;
}

Permutation rank(std::span<const float> query, const Pool& pool) {
  return permutation_from_similarities(pool.similarities(query));
}

std::vector<Permutation> rank_batch(const FeatureMatrix& queries, const Pool& pool) {
  const std::size_t q = queries.rows();
  if (q == 0) return {};
  const std::size_t n = pool.size();
  const std::size_t d = pool.dim();
  if (queries.cols() != d) {
    fail(Errc::DimensionMismatch,
         "queries have dimension " + std::to_string(queries.cols()) + ", pool has " + std::to_string(d));
  }
  std::vector<double> q_inv(q);
  for (std::size_t i = 0; i < q; ++i) {
    check_query(queries.row(i), pool);
    q_inv[i] = inverse_norm_of(queries.row(i));
  }

  const auto& kern = simd::active_kernels();
  const std::size_t blocks = (q + kQueryBlock - 1) / kQueryBlock;
  std::vector<Permutation> out(q);
  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t q0 = b * kQueryBlock;
    const std::size_t q1 = std::min(q, q0 + kQueryBlock);
    std::vector<std::vector<double>> sims(q1 - q0, std::vector<double>(n));
    for (std::size_t p0 = 0; p0 < n; p0 += kPoolBlock) {
      const std::size_t p1 = std::min(n, p0 + kPoolBlock);
      for (std::size_t qi = q0; qi < q1; ++qi) {
        const float* qv = queries.data() + qi * d;
        auto& row = sims[qi - q0];
        for (std::size_t p = p0; p < p1; ++p) {
          row[p] = kern.dot(qv, pool.features().data() + p * d, d) * pool.inverse_norm(p) * q_inv[qi];
        }
      }
    }
    for (std::size_t qi = q0; qi < q1; ++qi) out[qi] = permutation_from_similarities(std::move(sims[qi - q0]));
  });
  return out;
}

std::vector<PoolIndex> top_k_from_similarities(std::span<const double> sims, std::size_t k) {
  if (k == 0 || k > sims.size()) {
    fail(Errc::KOutOfRange, "k=" + std::to_string(k) + " outside [1, " + std::to_string(sims.size()) + "]");
  }
  std::vector<PoolIndex> ids(sims.size());
  std::iota(ids.begin(), ids.end(), PoolIndex{0});
  auto before = [&](PoolIndex a, PoolIndex b) { return ranks_before(sims[a], a, sims[b], b); };
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(), before);
  ids.resize(k);
  return ids;
}

NeighborSet top_k(const Permutation& perm, std::size_t k) {
  if (k == 0 || k > perm.size()) {
    fail(Errc::KOutOfRange, "k=" + std::to_string(k) + " outside [1, " + std::to_string(perm.size()) + "]");
  }
  return {std::vector<PoolIndex>(perm.order.begin(), perm.order.begin() + static_cast<std::ptrdiff_t>(k)), k};
}

double knn_proxy_accuracy(const Pool& pool, const FeatureMatrix& eval_features, const LabelVector& eval_labels,
                          std::size_t k) {
  if (!pool.labels()) fail(Errc::MissingPoolLabels, "kNN proxy needs pool labels");
  if (k == 0 || k > pool.size()) {
    fail(Errc::KOutOfRange, "k=" + std::to_string(k) + " outside [1, " + std::to_string(pool.size()) + "]");
  }
  if (eval_features.rows() != eval_labels.size()) fail(Errc::LengthMismatch, "eval features vs labels");
  if (eval_features.rows() == 0) fail(Errc::InvalidArgument, "empty eval set");
  const auto& labels = *pool.labels();
  const std::int32_t classes = 1 + std::max(*std::max_element(labels.begin(), labels.end()),
                                            *std::max_element(eval_labels.begin(), eval_labels.end()));
  std::vector<unsigned char> hit(eval_features.rows());
  parallel_for(eval_features.rows(), [&](std::size_t i) {
    const auto sims = pool.similarities(eval_features.row(i));
    const auto nn = top_k_from_similarities(sims, k);
    std::vector<double> votes(static_cast<std::size_t>(classes), 0.0);
    for (PoolIndex j : nn) votes[static_cast<std::size_t>(labels[j])] += sims[j];
    // max_element returns the first maximum: ties go to the smaller class id.
    const auto best = std::max_element(votes.begin(), votes.end()) - votes.begin();
    hit[i] = best == eval_labels[i] ? 1 : 0;
  });
  const auto correct = std::accumulate(hit.begin(), hit.end(), std::size_t{0});
  return static_cast<double>(correct) / static_cast<double>(hit.size());
}

}  // namespace lata
