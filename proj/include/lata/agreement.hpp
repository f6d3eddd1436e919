#pragma once
// Neighborhood-ranking agreement between a classifier's latent space and one
// or more foundation-model spaces.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lata/arraystore.hpp"
#include "lata/neighborhood.hpp"

namespace lata {

/// Per-pool-index importance r(i). Must be non-negative and non-increasing
/// along the ideal ranking it was built from.
class Importance {
 public:
  /// 1 for the k nearest items of `ideal`, 0 elsewhere.
  static Importance indicator(std::span<const PoolIndex> ideal, std::size_t k);
  /// r(i) = 1 / distances[i]; every distance must be positive.
  static Importance reciprocal_distance(std::span<const double> distances);

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](PoolIndex i) const noexcept { return weights_[i]; }
  const std::vector<double>& weights() const noexcept { return weights_; }

 private:
  explicit Importance(std::vector<double> w) : weights_(std::move(w)) {}
  std::vector<double> weights_;
};

/// Discounted-gain ratio of `candidate` against `ideal`:
///   sum_i r(candidate_i) / log(i+1)  /  sum_i r(ideal_i) / log(i+1),  i = 1..n.
/// The log base cancels; it is a parameter only so that can be checked.
double ndcg(std::span<const PoolIndex> ideal, std::span<const PoolIndex> candidate, const Importance& r,
            double log_base = 2.0);

inline double ndcg(const Permutation& ideal, const Permutation& candidate, const Importance& r,
                   double log_base = 2.0) {
  return ndcg(ideal.order, candidate.order, r, log_base);
}

/// Mean over foundation permutations of ndcg(classifier, foundation_i, indicator(classifier, k)).
double agreement_score(const Permutation& classifier_perm, std::span<const Permutation> foundation_perms,
                       std::size_t k);

/// 0-based positions that each target id takes in the ranking implied by
/// `sims` (descending, ties to the smaller index). O(n log |targets|).
std::vector<std::size_t> positions_in_ranking(std::span<const double> sims, std::span<const PoolIndex> targets);

/// Indicator NDCG from the candidate-ranking positions of the k ideal
/// neighbours. Bit-identical to the full-sum ndcg().
double indicator_ndcg_from_positions(std::vector<std::size_t> positions);

struct AgreementVector {
  std::vector<double> scores;
  std::vector<std::string> model_ids;
  std::size_t k = 0;
};

/// ndcg values for every (query, model, k) triple.
struct NdcgTable {
  std::vector<std::size_t> ks;
  std::vector<std::string> model_ids;
  std::size_t queries = 0;
  std::vector<double> values;  // [query][model][k]

  double at(std::size_t q, std::size_t m, std::size_t ki) const noexcept {
    return values[(q * model_ids.size() + m) * ks.size() + ki];
  }
  std::size_t model_index(std::string_view id) const;

  /// Mean over the chosen models at ks[k_index].
  AgreementVector agreement(std::size_t k_index, std::span<const std::size_t> models) const;
  /// Per-query ndcg for one model at ks[k_index].
  std::vector<double> single_model(std::size_t k_index, std::size_t model) const;
};

enum class AlternateMeasure { spearman, jaccard, cka_linear, cka_rbf };
std::string_view to_string(AlternateMeasure m) noexcept;

/// Pools for the classifier space and every foundation space of a pool
/// dataset; scores query datasets against them.
class AgreementEngine {
 public:
  explicit AgreementEngine(const Dataset& pool);

  std::size_t pool_size() const noexcept { return classifier_.size(); }
  const Pool& classifier_pool() const noexcept { return classifier_; }
  const std::vector<std::string>& model_ids() const noexcept { return model_ids_; }
  const Pool& foundation_pool(std::size_t m) const noexcept { return foundation_[m]; }

  /// Every k must be in [1, pool_size]. Queries must carry the same model ids.
  NdcgTable ndcg_table(const Dataset& queries, std::span<const std::size_t> ks) const;

  AgreementVector score(const Dataset& queries, std::size_t k, std::span<const std::string> models) const;

  /// Ablation measures averaged over the selected models.
  AgreementVector alternate(const Dataset& queries, AlternateMeasure measure, std::size_t k,
                            std::span<const std::string> models) const;

 private:
  std::size_t index_of(std::string_view id) const;

  Pool classifier_;
  std::vector<Pool> foundation_;
  std::vector<std::string> model_ids_;
};

/// Convenience wrapper around AgreementEngine::score.
AgreementVector agreement_batch(const Dataset& pool, const Dataset& queries, std::size_t k,
                                std::span<const std::string> models);

void write_agreement_latc(const AgreementVector& v, const std::filesystem::path& path);
std::string agreement_csv(const AgreementVector& v);

// ---------------------------------------------------------------------------
// Alternative agreement measures and diagnostics.

/// Spearman rho between the positions each pool index takes in the two rankings.
double spearman_agreement(std::span<const PoolIndex> a, std::span<const PoolIndex> b);
double jaccard_agreement(std::span<const PoolIndex> a, std::span<const PoolIndex> b, std::size_t k);

struct CkaKernel {
  enum class Kind { linear, rbf } kind = Kind::linear;
  static CkaKernel linear() { return {Kind::linear}; }
  static CkaKernel rbf() { return {Kind::rbf}; }
};

/// Centered kernel alignment of two row-aligned matrices. The RBF bandwidth
/// is the median pairwise distance of each matrix.
double cka_agreement(const FeatureMatrix& a, const FeatureMatrix& b, CkaKernel kernel);

double pearson_correlation(std::span<const double> a, std::span<const double> b);

struct AccuracyBin {
  double center = 0.0;
  std::optional<double> accuracy;  // empty bins have none
  std::size_t count = 0;
};

/// Equal-width bins over [min, max] of the scores; per-bin mean correctness.
std::vector<AccuracyBin> agreement_accuracy_curve(std::span<const double> scores,
                                                  std::span<const std::uint8_t> correct, std::size_t bins);

}  // namespace lata
