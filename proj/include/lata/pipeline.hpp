#pragma once
// End-to-end failure-detection evaluation and hyper-parameter sweeps.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lata/agreement.hpp"
#include "lata/arraystore.hpp"
#include "lata/calibration.hpp"
#include "lata/detection.hpp"

namespace lata {

struct ModelSelection {
  enum class Kind { single, multiple, list } kind = Kind::multiple;
  std::vector<std::string> ids;  // Kind::list only

  /// "single", "multiple", or a comma-separated list of model ids.
  static ModelSelection parse(std::string_view text);
  /// Ordered model ids; the first is the "single" model.
  std::vector<std::string> resolve(const std::vector<std::string>& available) const;
};

/// {10, 20, 50, 100, 200, 500, 1000}
std::vector<std::size_t> default_k_grid();

struct PipelineOptions {
  std::size_t k = 50;
  ModelSelection models;
  std::uint64_t seed = 0;
  std::string dataset_id = "dataset";
  std::string run_id = "0";
  bool ablation = false;  // add Spearman / Jaccard / CKA temperature-scaling rows
};

/// Agreement on validation and test, calibration fitted on validation, every
/// method scored on test. Correctness is always argmax(logits) == label.
EvalReport run_pipeline(const Dataset& pool, const Dataset& val, const Dataset& test, const PipelineOptions& options);

struct SweepKRow {
  std::size_t k = 0;
  std::optional<double> auroc;  // empty when skipped
  std::string note;
};

struct SweepKResult {
  std::size_t best_k = 0;
  std::vector<SweepKRow> rows;
};

/// Highest AUROC wins; ties go to the smaller k. Throws KOutOfRange if every row was skipped.
std::size_t select_best_k(std::span<const SweepKRow> rows);

/// Generic sweep: k values above `pool_size` are recorded as skipped,
/// every other k is scored by `evaluate`.
SweepKResult sweep_k_with(std::span<const std::size_t> grid, std::size_t pool_size,
                          const std::function<double(std::size_t)>& evaluate);

/// Validation AUROC of agreement temperature scaling for each k.
SweepKResult sweep_k(const Dataset& pool, const Dataset& val, std::span<const std::size_t> grid,
                     const ModelSelection& models);

struct PoolSweepRow {
  std::size_t pool_size = 0;
  std::size_t k = 0;
  std::optional<double> auroc;
};

struct PoolSweepResult {
  std::vector<PoolSweepRow> rows;
  std::vector<std::size_t> best_k;  // per size, in input order
};

/// Seeded uniform row subsample of `pool` (kept in original row order).
Dataset subsample_pool(const Dataset& pool, std::size_t size, std::uint64_t seed);

PoolSweepResult sweep_pool_size(const Dataset& pool, const Dataset& val, std::span<const std::size_t> sizes,
                                std::span<const std::size_t> grid, const ModelSelection& models, std::uint64_t seed);

std::string sweep_k_csv(const SweepKResult& result);
std::string sweep_pool_csv(const PoolSweepResult& result);

}  // namespace lata
