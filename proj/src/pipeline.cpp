#include "lata/pipeline.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "json.hpp"
#include "lata/csv.hpp"
#include "lata/error.hpp"

namespace lata {

namespace {

void require_logits(const Dataset& d, const char* what) {
  if (!d.logits) fail(Errc::ManifestInvalid, std::string(what) + " split has no logits");
}

double ts_auroc(const CalibrationModel& model, const Dataset& eval, std::span<const double> agreement,
                std::span<const std::uint8_t> correct) {
  const auto conf = confidence(apply(model, *eval.logits, agreement));
  return auroc(conf, correct);
}

// Uniform integer in [0, bound) independent of the standard library's
// distribution implementation.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

ModelSelection ModelSelection::parse(std::string_view text) {
  if (text == "single") return {Kind::single, {}};
  if (text == "multiple" || text.empty()) return {Kind::multiple, {}};
  ModelSelection sel{Kind::list, {}};
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const auto part = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    if (part.empty()) fail(Errc::ConfigError, "empty model id in --models");
    sel.ids.emplace_back(part);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return sel;
}

std::vector<std::string> ModelSelection::resolve(const std::vector<std::string>& available) const {
  if (available.empty()) fail(Errc::EmptyModelList, "no foundation models available");
  switch (kind) {
    case Kind::single: return {available.front()};
    case Kind::multiple: return available;
    case Kind::list:
      for (const auto& id : ids) {
        if (std::find(available.begin(), available.end(), id) == available.end()) {
          fail(Errc::UnknownModel, "unknown foundation model '" + id + "'");
        }
      }
      if (ids.empty()) fail(Errc::EmptyModelList, "empty model list");
      return ids;
  }
  return available;
}

std::vector<std::size_t> default_k_grid() { return {10, 20, 50, 100, 200, 500, 1000}; }

EvalReport run_pipeline(const Dataset& pool, const Dataset& val, const Dataset& test, const PipelineOptions& options) {
  if (val.size() == 0) fail(Errc::EmptyValidationSet, "validation split is empty");
  if (test.size() == 0) fail(Errc::InvalidArgument, "test split is empty");
  require_logits(val, "validation");
  require_logits(test, "test");
  if (val.logits->cols() != test.logits->cols()) fail(Errc::DimensionMismatch, "validation and test class counts differ");

  const AgreementEngine engine(pool);
  const auto models = options.models.resolve(engine.model_ids());
  const std::size_t k = options.k;
  const std::size_t ks[] = {k};
  const NdcgTable val_table = engine.ndcg_table(val, ks);
  const NdcgTable test_table = engine.ndcg_table(test, ks);

  std::vector<std::size_t> chosen;
  for (const auto& id : models) chosen.push_back(val_table.model_index(id));
  const std::size_t single[] = {chosen.front()};

  const auto correct = correctness(*test.logits, test.labels);
  const std::size_t n = test.size();

  EvalReport report;
  report.dataset_id = options.dataset_id;
  report.run_id = options.run_id;
  report.seed = options.seed;
  report.pool_size = pool.size();
  report.val_size = val.size();
  report.test_size = n;
  report.notes =
      "entropy in nats; energy at T=1 (logsumexp); trustscore is the nearest-neighbour class-distance ratio "
      "without density filtering; agreement = mean indicator-NDCG over the selected foundation models";

  auto add = [&](const std::string& method, double value, std::optional<std::size_t> rk,
                 std::optional<std::size_t> rm) { report.rows.push_back({method, value, rk, rm, n}); };

  add("msp", auroc(score_msp(*test.logits).scores, correct), {}, {});
  add("entropy", auroc(score_entropy(*test.logits).scores, correct), {}, {});
  add("energy", auroc(score_energy(*test.logits).scores, correct), {}, {});
  add("maxlogit", auroc(score_maxlogit(*test.logits).scores, correct), {}, {});
  add("trustscore",
      auroc(score_trustscore(test.classifier, predicted_labels(*test.logits), pool.classifier, pool.labels).scores,
            correct),
      {}, {});

  nlohmann::ordered_json calib;
  const auto vanilla = fit(*val.logits, val.labels, {}, CalibrationVariant::vanilla);
  calib["ts_vanilla"] = nlohmann::ordered_json::parse(model_to_json(vanilla));
  add("ts_vanilla", ts_auroc(vanilla, test, {}, correct), {}, {});

  auto agreement_row = [&](const std::string& method, const AgreementVector& val_as, const AgreementVector& test_as) {
    const auto model = fit(*val.logits, val.labels, val_as.scores, CalibrationVariant::agreement);
    calib[method] = nlohmann::ordered_json::parse(model_to_json(model));
    add(method, ts_auroc(model, test, test_as.scores, correct), k, val_as.model_ids.size());
  };

  agreement_row("ts_agreement_single", val_table.agreement(0, single), test_table.agreement(0, single));
  if (chosen.size() >= 2) {
    agreement_row("ts_agreement_multi", val_table.agreement(0, chosen), test_table.agreement(0, chosen));
  }

  if (options.ablation) {
    for (auto measure : {AlternateMeasure::spearman, AlternateMeasure::jaccard, AlternateMeasure::cka_linear,
                         AlternateMeasure::cka_rbf}) {
      const std::string method = "ts_" + std::string(to_string(measure));
      agreement_row(method, engine.alternate(val, measure, k, models), engine.alternate(test, measure, k, models));
    }
  }

  report.calibration_json = calib.dump();
  return report;
}

std::size_t select_best_k(std::span<const SweepKRow> rows) {
  const SweepKRow* best = nullptr;
  for (const auto& r : rows) {
    if (!r.auroc) continue;
    if (best == nullptr || *r.auroc > *best->auroc || (*r.auroc == *best->auroc && r.k < best->k)) best = &r;
  }
  if (best == nullptr) fail(Errc::KOutOfRange, "no k in the grid fits the pool");
  return best->k;
}

SweepKResult sweep_k_with(std::span<const std::size_t> grid, std::size_t pool_size,
                          const std::function<double(std::size_t)>& evaluate) {
  if (grid.empty()) fail(Errc::ConfigError, "empty k grid");
  SweepKResult result;
  for (std::size_t k : grid) {
    SweepKRow row{k, std::nullopt, ""};
    if (k == 0 || k > pool_size) {
      row.note = "skipped: k outside [1, " + std::to_string(pool_size) + "]";
    } else {
      row.auroc = evaluate(k);
    }
    result.rows.push_back(row);
  }
  result.best_k = select_best_k(result.rows);
  return result;
}

SweepKResult sweep_k(const Dataset& pool, const Dataset& val, std::span<const std::size_t> grid,
                     const ModelSelection& selection) {
  if (val.size() == 0) fail(Errc::EmptyValidationSet, "validation split is empty");
  require_logits(val, "validation");
  const AgreementEngine engine(pool);
  const auto models = selection.resolve(engine.model_ids());
  const auto correct = correctness(*val.logits, val.labels);

  std::vector<std::size_t> valid;
  for (std::size_t k : grid) {
    if (k >= 1 && k <= pool.size()) valid.push_back(k);
  }
  std::optional<NdcgTable> table;
  std::vector<std::size_t> chosen;
  if (!valid.empty()) {
    table = engine.ndcg_table(val, valid);
    for (const auto& id : models) chosen.push_back(table->model_index(id));
  }
  return sweep_k_with(grid, pool.size(), [&](std::size_t k) {
    const std::size_t ki = static_cast<std::size_t>(std::find(valid.begin(), valid.end(), k) - valid.begin());
    const auto as = table->agreement(ki, chosen);
    const auto model = fit(*val.logits, val.labels, as.scores, CalibrationVariant::agreement);
    return ts_auroc(model, val, as.scores, correct);
  });
}

Dataset subsample_pool(const Dataset& pool, std::size_t size, std::uint64_t seed) {
  const std::size_t n = pool.size();
  if (size == 0 || size > n) {
    fail(Errc::SizeOutOfRange, "pool size " + std::to_string(size) + " outside [1, " + std::to_string(n) + "]");
  }
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ull * (size + 1)));
  for (std::size_t i = 0; i < size && size < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(bounded(rng, n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(size);
  std::sort(idx.begin(), idx.end());
  return pool.select_rows(idx);
}

PoolSweepResult sweep_pool_size(const Dataset& pool, const Dataset& val, std::span<const std::size_t> sizes,
                                std::span<const std::size_t> grid, const ModelSelection& models, std::uint64_t seed) {
  for (std::size_t s : sizes) {
    if (s == 0 || s > pool.size()) {
      fail(Errc::SizeOutOfRange, "pool size " + std::to_string(s) + " outside [1, " + std::to_string(pool.size()) + "]");
    }
  }
  PoolSweepResult result;
  for (std::size_t s : sizes) {
    const auto sweep = sweep_k(subsample_pool(pool, s, seed), val, grid, models);
    for (const auto& r : sweep.rows) result.rows.push_back({s, r.k, r.auroc});
    result.best_k.push_back(sweep.best_k);
  }
  return result;
}

std::string sweep_k_csv(const SweepKResult& result) {
  std::ostringstream out;
  out << "k,auroc,selected,note\n";
  for (const auto& r : result.rows) {
    out << r.k << ',' << (r.auroc ? format_double(*r.auroc) : "") << ',' << (r.k == result.best_k ? 1 : 0) << ','
        << r.note << '\n';
  }
  return out.str();
}

std::string sweep_pool_csv(const PoolSweepResult& result) {
  std::ostringstream out;
  out << "pool_size,k,auroc\n";
  for (const auto& r : result.rows) {
    out << r.pool_size << ',' << r.k << ',' << (r.auroc ? format_double(*r.auroc) : "") << '\n';
  }
  return out.str();
}

}  // namespace lata
