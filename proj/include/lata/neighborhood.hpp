#pragma once
// Exact cosine-similarity ranking of a feature pool against queries.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lata/matrix.hpp"

namespace lata {

using PoolIndex = std::uint32_t;

/// Reference set whose embeddings define neighborhoods.
///
/// Rows are kept as given; each row's inverse L2 norm is stored in f64 and
/// applied inside the similarity, so row(i) * inverse_norm(i) is the
/// unit-norm row. Zero-norm rows are rejected.
class Pool {
 public:
  explicit Pool(FeatureMatrix features, std::optional<LabelVector> labels = std::nullopt);

  std::size_t size() const noexcept { return features_.rows(); }
  std::size_t dim() const noexcept { return features_.cols(); }
  const FeatureMatrix& features() const noexcept { return features_; }
  double inverse_norm(std::size_t i) const noexcept { return inv_norms_[i]; }
  const std::optional<LabelVector>& labels() const noexcept { return labels_; }

  /// Cosine similarity of `query` to every pool row, in pool order.
  std::vector<double> similarities(std::span<const float> query) const;
  void similarities(std::span<const float> query, std::span<double> out) const;

 private:
  FeatureMatrix features_;
  std::vector<double> inv_norms_;
  std::optional<LabelVector> labels_;
};

/// Pool indices nearest-first with their cosine similarities.
struct Permutation {
  std::vector<PoolIndex> order;
  std::vector<double> similarities;

  std::size_t size() const noexcept { return order.size(); }
};

struct NeighborSet {
  std::vector<PoolIndex> indices;
  std::size_t k = 0;
};

/// Ordering used everywhere: larger similarity first, ties to the smaller index.
inline bool ranks_before(double sim_a, PoolIndex a, double sim_b, PoolIndex b) noexcept {
  return sim_a > sim_b || (sim_a == sim_b && a < b);
}

Permutation rank(std::span<const float> query, const Pool& pool);

/// Blocked query x pool evaluation; element i equals rank(queries.row(i), pool).
std::vector<Permutation> rank_batch(const FeatureMatrix& queries, const Pool& pool);

/// Sorts a similarity vector into a Permutation.
Permutation permutation_from_similarities(std::vector<double> sims);

/// First k ids of the ranking implied by `sims`, nearest first, in O(n log k).
std::vector<PoolIndex> top_k_from_similarities(std::span<const double> sims, std::size_t k);

NeighborSet top_k(const Permutation& perm, std::size_t k);

/// Weighted kNN vote (similarity-weighted, class ties to the smaller id);
/// returns the fraction of eval rows predicted correctly.
double knn_proxy_accuracy(const Pool& pool, const FeatureMatrix& eval_features, const LabelVector& eval_labels,
                          std::size_t k);

/// Throws DimensionMismatch / ZeroNormQuery if `query` cannot be ranked against `pool`.
void check_query(std::span<const float> query, const Pool& pool);

}  // namespace lata
