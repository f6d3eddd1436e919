#include "lata/agreement.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lata/csv.hpp"
#include "lata/error.hpp"
#include "lata/parallel.hpp"

namespace lata {

namespace {

inline double discount_log(std::size_t position_1based, double log_base) {
  const double x = static_cast<double>(position_1based) + 1.0;
  if (log_base == 2.0) return std::log2(x);
  if (log_base == 10.0) return std::log10(x);
  if (log_base == M_E) return std::log(x);
  return std::log(x) / std::log(log_base);
}

void check_domain(std::span<const PoolIndex> a, std::span<const PoolIndex> b) {
  if (a.size() != b.size() || a.empty()) {
    fail(Errc::PermutationDomainMismatch, "rankings have sizes " + std::to_string(a.size()) + " and " +
                                              std::to_string(b.size()));
  }
  const std::size_t n = a.size();
  std::vector<unsigned char> seen_a(n, 0), seen_b(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] >= n || seen_a[a[i]]++ || b[i] >= n || seen_b[b[i]]++) {
      fail(Errc::PermutationDomainMismatch, "rankings are not permutations of the same index set");
    }
  }
}

}  // namespace

Importance Importance::indicator(std::span<const PoolIndex> ideal, std::size_t k) {
  if (k == 0 || k > ideal.size()) {
    fail(Errc::KOutOfRange, "k=" + std::to_string(k) + " outside [1, " + std::to_string(ideal.size()) + "]");
  }
  std::vector<double> w(ideal.size(), 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    if (ideal[i] >= w.size()) fail(Errc::PermutationDomainMismatch, "ideal ranking index out of range");
    w[ideal[i]] = 1.0;
  }
  return Importance(std::move(w));
}

Importance Importance::reciprocal_distance(std::span<const double> distances) {
  std::vector<double> w(distances.size());
  for (std::size_t i = 0; i < distances.size(); ++i) {
    if (!(distances[i] > 0.0) || !std::isfinite(distances[i])) {
      fail(Errc::InvalidImportance, "reciprocal importance needs positive finite distances");
    }
    w[i] = 1.0 / distances[i];
  }
  return Importance(std::move(w));
}

double ndcg(std::span<const PoolIndex> ideal, std::span<const PoolIndex> candidate, const Importance& r,
            double log_base) {
  check_domain(ideal, candidate);
  if (r.size() != ideal.size()) fail(Errc::PermutationDomainMismatch, "importance size differs from rankings");
  for (std::size_t i = 0; i < ideal.size(); ++i) {
    if (r[ideal[i]] < 0.0 || (i > 0 && r[ideal[i]] > r[ideal[i - 1]])) {
      fail(Errc::InvalidImportance, "importance must be non-negative and non-increasing along the ideal ranking");
    }
  }
  double gain = 0.0;
  double ideal_gain = 0.0;
  for (std::size_t i = 0; i < ideal.size(); ++i) {
    const double disc = discount_log(i + 1, log_base);
    gain += r[candidate[i]] / disc;
    ideal_gain += r[ideal[i]] / disc;
  }
  if (!(ideal_gain > 0.0)) fail(Errc::NonPositiveIdealDCG, "ideal DCG is not positive");
  return gain / ideal_gain;
}

double agreement_score(const Permutation& classifier_perm, std::span<const Permutation> foundation_perms,
                       std::size_t k) {
  if (foundation_perms.empty()) fail(Errc::EmptyModelList, "agreement needs at least one foundation model");
  const Importance r = Importance::indicator(classifier_perm.order, k);
  double sum = 0.0;
  for (const auto& p : foundation_perms) sum += ndcg(classifier_perm, p, r);
  return sum / static_cast<double>(foundation_perms.size());
}

std::vector<std::size_t> positions_in_ranking(std::span<const double> sims, std::span<const PoolIndex> targets) {
  const std::size_t k = targets.size();
  std::vector<PoolIndex> sorted(targets.begin(), targets.end());
  auto before = [&](PoolIndex a, PoolIndex b) { return ranks_before(sims[a], a, sims[b], b); };
  std::sort(sorted.begin(), sorted.end(), before);
  if (k == 0) return {};

  // ahead[j] counts items ranking before sorted[j] but not before sorted[j-1].
  std::vector<std::size_t> ahead(k + 1, 0);
  const PoolIndex last = sorted.back();
  const double last_sim = sims[last];
  for (std::size_t p = 0; p < sims.size(); ++p) {
    const auto id = static_cast<PoolIndex>(p);
    if (sims[p] < last_sim || !ranks_before(sims[p], id, last_sim, last)) continue;
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), id, before);
    ++ahead[static_cast<std::size_t>(it - sorted.begin())];
  }
  std::vector<std::size_t> sorted_pos(k);
  std::size_t running = 0;
  for (std::size_t j = 0; j < k; ++j) {
    running += ahead[j];
    sorted_pos[j] = running;
  }
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), targets[i], before);
    out[i] = sorted_pos[static_cast<std::size_t>(it - sorted.begin())];
  }
  return out;
}

double indicator_ndcg_from_positions(std::vector<std::size_t> positions) {
  const std::size_t k = positions.size();
  if (k == 0) fail(Errc::KOutOfRange, "k must be at least 1");
  std::sort(positions.begin(), positions.end());
  double gain = 0.0;
  double ideal_gain = 0.0;
  for (std::size_t p : positions) gain += 1.0 / discount_log(p + 1, 2.0);
  for (std::size_t i = 0; i < k; ++i) ideal_gain += 1.0 / discount_log(i + 1, 2.0);
  return gain / ideal_gain;
}

// ---------------------------------------------------------------------------

std::size_t NdcgTable::model_index(std::string_view id) const {
  for (std::size_t m = 0; m < model_ids.size(); ++m) {
    if (model_ids[m] == id) return m;
  }
  fail(Errc::UnknownModel, "no foundation model '" + std::string(id) + "'");
}

AgreementVector NdcgTable::agreement(std::size_t k_index, std::span<const std::size_t> models) const {
  if (models.empty()) fail(Errc::EmptyModelList, "agreement needs at least one foundation model");
  AgreementVector out;
  out.k = ks.at(k_index);
  for (std::size_t m : models) out.model_ids.push_back(model_ids.at(m));
  out.scores.resize(queries);
  for (std::size_t q = 0; q < queries; ++q) {
    double sum = 0.0;
    for (std::size_t m : models) sum += at(q, m, k_index);
    out.scores[q] = sum / static_cast<double>(models.size());
  }
  return out;
}

std::vector<double> NdcgTable::single_model(std::size_t k_index, std::size_t model) const {
  std::vector<double> out(queries);
  for (std::size_t q = 0; q < queries; ++q) out[q] = at(q, model, k_index);
  return out;
}

std::string_view to_string(AlternateMeasure m) noexcept {
  switch (m) {
    case AlternateMeasure::spearman: return "spearman";
    case AlternateMeasure::jaccard: return "jaccard";
    case AlternateMeasure::cka_linear: return "cka_linear";
    case AlternateMeasure::cka_rbf: return "cka_rbf";
  }
  return "unknown";
}

AgreementEngine::AgreementEngine(const Dataset& pool)
    : classifier_(pool.classifier, pool.labels.empty() ? std::nullopt : std::optional<LabelVector>(pool.labels)) {
  if (pool.foundation.empty()) fail(Errc::EmptyModelList, "pool manifest lists no foundation features");
  for (const auto& f : pool.foundation) {
    foundation_.emplace_back(f.features);
    model_ids_.push_back(f.model_id);
  }
}

std::size_t AgreementEngine::index_of(std::string_view id) const {
  for (std::size_t m = 0; m < model_ids_.size(); ++m) {
    if (model_ids_[m] == id) return m;
  }
  fail(Errc::UnknownModel, "pool has no foundation model '" + std::string(id) + "'");
}

NdcgTable AgreementEngine::ndcg_table(const Dataset& queries, std::span<const std::size_t> ks) const {
  const std::size_t n = pool_size();
  if (ks.empty()) fail(Errc::KOutOfRange, "no neighbourhood size given");
  for (std::size_t k : ks) {
    if (k == 0 || k > n) fail(Errc::KOutOfRange, "k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  const std::size_t k_max = *std::max_element(ks.begin(), ks.end());
  const std::size_t models = model_ids_.size();

  // Query-side spaces matched by model id.
  std::vector<const FeatureMatrix*> query_spaces(models);
  for (std::size_t m = 0; m < models; ++m) query_spaces[m] = &queries.space(model_ids_[m]).features;

  NdcgTable table;
  table.ks.assign(ks.begin(), ks.end());
  table.model_ids = model_ids_;
  table.queries = queries.size();
  table.values.resize(table.queries * models * ks.size());

  parallel_for(table.queries, [&](std::size_t q) {
    std::vector<double> sims(n);
    classifier_.similarities(queries.classifier.row(q), sims);
    const auto ideal = top_k_from_similarities(sims, k_max);
    for (std::size_t m = 0; m < models; ++m) {
      foundation_[m].similarities(query_spaces[m]->row(q), sims);
      const auto pos = positions_in_ranking(sims, ideal);
      for (std::size_t ki = 0; ki < ks.size(); ++ki) {
        std::vector<std::size_t> first(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(ks[ki]));
        table.values[(q * models + m) * ks.size() + ki] = indicator_ndcg_from_positions(std::move(first));
      }
    }
  });
  return table;
}

AgreementVector AgreementEngine::score(const Dataset& queries, std::size_t k,
                                       std::span<const std::string> models) const {
  if (models.empty()) fail(Errc::EmptyModelList, "agreement needs at least one foundation model");
  std::vector<std::size_t> chosen;
  for (const auto& id : models) chosen.push_back(index_of(id));
  const std::size_t ks[] = {k};
  return ndcg_table(queries, ks).agreement(0, chosen);
}

AgreementVector AgreementEngine::alternate(const Dataset& queries, AlternateMeasure measure, std::size_t k,
                                           std::span<const std::string> models) const {
  if (models.empty()) fail(Errc::EmptyModelList, "agreement needs at least one foundation model");
  const std::size_t n = pool_size();
  if (k == 0 || k > n) fail(Errc::KOutOfRange, "k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  std::vector<std::size_t> chosen;
  for (const auto& id : models) chosen.push_back(index_of(id));

  AgreementVector out;
  out.k = k;
  out.model_ids.assign(models.begin(), models.end());
  out.scores.resize(queries.size());
  parallel_for(queries.size(), [&](std::size_t q) {
    const auto class_sims = classifier_.similarities(queries.classifier.row(q));
    double sum = 0.0;
    for (std::size_t m : chosen) {
      const auto found_sims = foundation_[m].similarities(queries.space(model_ids_[m]).features.row(q));
      switch (measure) {
        case AlternateMeasure::spearman: {
          const auto a = permutation_from_similarities(class_sims);
          const auto b = permutation_from_similarities(found_sims);
          sum += spearman_agreement(a.order, b.order);
          break;
        }
        case AlternateMeasure::jaccard: {
          const auto a = top_k_from_similarities(class_sims, k);
          const auto b = top_k_from_similarities(found_sims, k);
          sum += jaccard_agreement(a, b, k);
          break;
        }
        case AlternateMeasure::cka_linear:
        case AlternateMeasure::cka_rbf: {
          const auto ids = top_k_from_similarities(class_sims, k);
          const std::vector<std::size_t> rows(ids.begin(), ids.end());
          const auto x = classifier_.features().select_rows(rows);
          const auto y = foundation_[m].features().select_rows(rows);
          sum += cka_agreement(x, y,
                               measure == AlternateMeasure::cka_linear ? CkaKernel::linear() : CkaKernel::rbf());
          break;
        }
      }
    }
    out.scores[q] = sum / static_cast<double>(chosen.size());
  });
  return out;
}

AgreementVector agreement_batch(const Dataset& pool, const Dataset& queries, std::size_t k,
                                std::span<const std::string> models) {
  return AgreementEngine(pool).score(queries, k, models);
}

void write_agreement_latc(const AgreementVector& v, const std::filesystem::path& path) {
  FeatureMatrix m(v.scores.size(), 1);
  for (std::size_t i = 0; i < v.scores.size(); ++i) m(i, 0) = static_cast<float>(v.scores[i]);
  write_container(m, path);
}

std::string agreement_csv(const AgreementVector& v) {
  std::ostringstream out;
  out << "sample_id,score\n";
  for (std::size_t i = 0; i < v.scores.size(); ++i) out << i << ',' << format_double(v.scores[i]) << '\n';
  return out.str();
}

}  // namespace lata
