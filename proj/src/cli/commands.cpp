#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lata/agreement.hpp"
#include "lata/arraystore.hpp"
#include "lata/calibration.hpp"
#include "lata/cli.hpp"
#include "lata/csv.hpp"
#include "lata/detection.hpp"
#include "lata/error.hpp"
#include "lata/pipeline.hpp"
#include "lata/synthetic.hpp"
#include "lata/theory.hpp"

namespace lata::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

enum class Format { json, csv, both };

struct RunConfig {
  std::string manifest;
  std::string pool;
  std::string val;
  std::string test;
  std::size_t k = 50;
  std::vector<std::size_t> k_grid = default_k_grid();
  std::vector<std::size_t> pool_sizes;
  std::string models = "multiple";
  std::uint64_t seed = 0;
  std::string out = ".";
  Format format = Format::both;
  std::string dataset_id;
  std::string run_id = "0";
  bool ablation = false;
  std::size_t bins = 10;
  // ingest
  std::string classifier_csv;
  std::vector<std::string> foundation_csv;
  std::string logits_csv;
  std::string labels_csv;
  std::string split = "test";
  // theory
  std::size_t trials = 1000;
  // synth
  std::size_t n_pool = 10000;
  std::size_t n_val = 2000;
  std::size_t n_test = 2000;
  std::size_t dim = 64;
  std::size_t classes = 10;
};

const std::vector<std::size_t> kDefaultPoolSizes = {2000, 5000, 10000, 20000, 50000};

bool want_json(const RunConfig& c) { return c.format != Format::csv; }
bool want_csv(const RunConfig& c) { return c.format != Format::json; }

struct Context {
  RunConfig& cfg;
  std::ostream& out;
};

void emit(Context& ctx, const fs::path& path, const std::string& contents) {
  write_text_file(path, contents);
  ctx.out << "wrote " << path.generic_string() << '\n';
}

fs::path out_dir(const RunConfig& c) {
  const fs::path dir = c.out;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(Errc::ConfigError, "cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

Dataset load_required(const std::string& path, const char* flag) {
  if (path.empty()) fail(Errc::ConfigError, std::string(flag) + " is required");
  return load_manifest(path);
}

std::string dataset_id_for(const RunConfig& c) {
  if (!c.dataset_id.empty()) return c.dataset_id;
  const fs::path p(c.test);
  const auto parent = p.parent_path().filename().string();
  return parent.empty() ? p.stem().string() : parent;
}

// --------------------------------------------------------------------------
// commands

void cmd_ingest(Context& ctx) {
  const auto& c = ctx.cfg;
  if (c.classifier_csv.empty()) fail(Errc::ConfigError, "--classifier is required");
  if (c.labels_csv.empty()) fail(Errc::ConfigError, "--labels is required");
  Dataset d;
  d.split = parse_split(c.split);
  d.seed = c.seed;
  d.classifier = read_csv_matrix(c.classifier_csv);
  for (const auto& spec : c.foundation_csv) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) fail(Errc::ConfigError, "--foundation expects id=path, got '" + spec + "'");
    d.foundation.push_back({spec.substr(0, eq), read_csv_matrix(spec.substr(eq + 1))});
  }
  if (!c.logits_csv.empty()) d.logits = read_csv_matrix(c.logits_csv);
  if (!d.logits && d.split != Split::pool) fail(Errc::ConfigError, "--logits is required for non-pool splits");
  d.labels = read_csv_labels(c.labels_csv);
  const auto manifest = write_dataset(d, out_dir(c));
  ctx.out << "wrote " << manifest.generic_string() << '\n';
}

void cmd_agree(Context& ctx) {
  const auto& c = ctx.cfg;
  const Dataset pool = load_required(c.pool, "--pool");
  const Dataset queries = load_required(c.manifest, "--manifest");
  const AgreementEngine engine(pool);
  const auto models = ModelSelection::parse(c.models).resolve(engine.model_ids());
  const auto as = engine.score(queries, c.k, models);
  const auto dir = out_dir(c);
  write_agreement_latc(as, dir / "agreement.latc");
  ctx.out << "wrote " << (dir / "agreement.latc").generic_string() << '\n';
  if (want_csv(c)) emit(ctx, dir / "agreement.csv", agreement_csv(as));
  if (want_json(c)) {
    json doc;
    doc["k"] = as.k;
    doc["models"] = as.model_ids;
    doc["scores"] = as.scores;
    emit(ctx, dir / "agreement.json", doc.dump(2) + "\n");
  }
}

void cmd_calibrate(Context& ctx) {
  const auto& c = ctx.cfg;
  const Dataset pool = load_required(c.pool, "--pool");
  const Dataset val = load_required(c.val, "--val");
  if (!val.logits) fail(Errc::ManifestInvalid, "validation split has no logits");
  const AgreementEngine engine(pool);
  const auto models = ModelSelection::parse(c.models).resolve(engine.model_ids());
  const auto as = engine.score(val, c.k, models);
  const auto vanilla = fit(*val.logits, val.labels, {}, CalibrationVariant::vanilla);
  const auto agreement = fit(*val.logits, val.labels, as.scores, CalibrationVariant::agreement);
  const auto dir = out_dir(c);
  emit(ctx, dir / "calibration_vanilla.json", model_to_json(vanilla));
  emit(ctx, dir / "calibration_agreement.json", model_to_json(agreement));
}

PipelineOptions pipeline_options(const RunConfig& c) {
  PipelineOptions o;
  o.k = c.k;
  o.models = ModelSelection::parse(c.models);
  o.seed = c.seed;
  o.dataset_id = dataset_id_for(c);
  o.run_id = c.run_id;
  o.ablation = c.ablation;
  return o;
}

std::string timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void cmd_eval(Context& ctx) {
  const auto& c = ctx.cfg;
  const Dataset pool = load_required(c.pool, "--pool");
  const Dataset val = load_required(c.val, "--val");
  const Dataset test = load_required(c.test, "--test");
  auto report = run_pipeline(pool, val, test, pipeline_options(c));
  report.timestamp = timestamp_now();
  const auto dir = out_dir(c);
  if (want_json(c)) emit(ctx, dir / "report.json", report_to_json(report));
  if (want_csv(c)) emit(ctx, dir / "report.csv", report_to_csv(report));
}

void cmd_sweep_k(Context& ctx) {
  const auto& c = ctx.cfg;
  const Dataset pool = load_required(c.pool, "--pool");
  const Dataset val = load_required(c.val, "--val");
  const auto result = sweep_k(pool, val, c.k_grid, ModelSelection::parse(c.models));
  const auto dir = out_dir(c);
  if (want_csv(c)) emit(ctx, dir / "sweep_k.csv", sweep_k_csv(result));
  if (want_json(c)) {
    json doc;
    doc["best_k"] = result.best_k;
    auto rows = json::array();
    for (const auto& r : result.rows) {
      rows.push_back({{"k", r.k}, {"auroc", r.auroc ? json(*r.auroc) : json(nullptr)}, {"note", r.note}});
    }
    doc["rows"] = rows;
    emit(ctx, dir / "sweep_k.json", doc.dump(2) + "\n");
  }
}

void cmd_sweep_pool(Context& ctx) {
  const auto& c = ctx.cfg;
  const Dataset pool = load_required(c.pool, "--pool");
  const Dataset val = load_required(c.val, "--val");
  std::vector<std::size_t> sizes = c.pool_sizes;
  if (sizes.empty()) {
    for (std::size_t s : kDefaultPoolSizes) {
      if (s <= pool.size()) sizes.push_back(s);
    }
    if (sizes.empty()) sizes.push_back(pool.size());
  }
  const auto result = sweep_pool_size(pool, val, sizes, c.k_grid, ModelSelection::parse(c.models), c.seed);
  const auto dir = out_dir(c);
  if (want_csv(c)) emit(ctx, dir / "sweep_pool.csv", sweep_pool_csv(result));
  if (want_json(c)) {
    json doc;
    doc["seed"] = c.seed;
    auto rows = json::array();
    for (const auto& r : result.rows) {
      rows.push_back({{"pool_size", r.pool_size}, {"k", r.k}, {"auroc", r.auroc ? json(*r.auroc) : json(nullptr)}});
    }
    doc["rows"] = rows;
    auto best = json::array();
    for (std::size_t i = 0; i < sizes.size(); ++i) best.push_back({{"pool_size", sizes[i]}, {"best_k", result.best_k[i]}});
    doc["best_k"] = best;
    emit(ctx, dir / "sweep_pool.json", doc.dump(2) + "\n");
  }
}

void cmd_theory(Context& ctx) {
  const auto& c = ctx.cfg;
  theory::BenchOptions opt;
  opt.trials = c.trials;
  opt.seed = c.seed;
  const auto summary = theory::run_bench(opt);
  const auto dir = out_dir(c);
  if (want_json(c)) emit(ctx, dir / "theory.json", theory::summary_json(summary));
  if (want_csv(c)) {
    emit(ctx, dir / "theory_prop1.csv", theory::prop1_csv(summary));
    emit(ctx, dir / "theory_prop2.csv", theory::prop2_csv(summary));
  }
}

void cmd_report(Context& ctx) {
  const auto& c = ctx.cfg;
  const Dataset pool = load_required(c.pool, "--pool");
  const Dataset val = load_required(c.val, "--val");
  const Dataset test = load_required(c.test, "--test");
  if (!test.logits) fail(Errc::ManifestInvalid, "test split has no logits");
  const auto options = pipeline_options(c);
  auto report = run_pipeline(pool, val, test, options);
  report.timestamp = timestamp_now();

  const AgreementEngine engine(pool);
  const auto models = options.models.resolve(engine.model_ids());
  const std::size_t ks[] = {c.k};
  const auto table = engine.ndcg_table(test, ks);
  std::vector<std::size_t> chosen;
  for (const auto& id : models) chosen.push_back(table.model_index(id));
  const auto as = table.agreement(0, chosen);
  const auto correct = correctness(*test.logits, test.labels);
  const auto bins = agreement_accuracy_curve(as.scores, correct, c.bins);

  std::vector<double> correct_d(correct.begin(), correct.end());
  json diag;
  diag["pearson_agreement_correctness"] = pearson_correlation(as.scores, correct_d);
  diag["test_accuracy"] =
      static_cast<double>(std::count(correct.begin(), correct.end(), 1)) / static_cast<double>(correct.size());

  const auto& ids = engine.model_ids();
  std::vector<std::vector<double>> per_model;
  for (std::size_t m = 0; m < ids.size(); ++m) per_model.push_back(table.single_model(0, m));
  std::ostringstream corr_csv;
  corr_csv << "model";
  for (const auto& id : ids) corr_csv << ',' << id;
  corr_csv << '\n';
  auto corr_json = json::array();
  for (std::size_t a = 0; a < ids.size(); ++a) {
    corr_csv << ids[a];
    auto row = json::array();
    for (std::size_t b = 0; b < ids.size(); ++b) {
      double r = a == b ? 1.0 : pearson_correlation(per_model[a], per_model[b]);
      corr_csv << ',' << format_double(r);
      row.push_back(r);
    }
    corr_csv << '\n';
    corr_json.push_back(row);
  }
  diag["model_correlation"] = {{"models", ids}, {"matrix", corr_json}};

  std::ostringstream knn_csv;
  knn_csv << "space,k,accuracy\n";
  json knn;
  {
    const double acc = knn_proxy_accuracy(engine.classifier_pool(), test.classifier, test.labels, c.k);
    knn_csv << "classifier," << c.k << ',' << format_double(acc) << '\n';
    knn["classifier"] = acc;
  }
  for (std::size_t m = 0; m < ids.size(); ++m) {
    const Pool labelled(engine.foundation_pool(m).features(), pool.labels);
    const double acc = knn_proxy_accuracy(labelled, test.space(ids[m]).features, test.labels, c.k);
    knn_csv << ids[m] << ',' << c.k << ',' << format_double(acc) << '\n';
    knn[ids[m]] = acc;
  }
  diag["knn_proxy_accuracy"] = knn;

  std::ostringstream bins_csv;
  bins_csv << "bin_center,accuracy,count\n";
  for (const auto& b : bins) {
    bins_csv << format_double(b.center) << ',' << (b.accuracy ? format_double(*b.accuracy) : "") << ',' << b.count
             << '\n';
  }

  const auto dir = out_dir(c);
  if (want_json(c)) {
    json doc = json::parse(report_to_json(report));
    doc["diagnostics"] = diag;
    emit(ctx, dir / "report.json", doc.dump(2) + "\n");
  }
  if (want_csv(c)) emit(ctx, dir / "report.csv", report_to_csv(report));
  emit(ctx, dir / "agreement_accuracy_bins.csv", bins_csv.str());
  emit(ctx, dir / "model_correlation.csv", corr_csv.str());
  emit(ctx, dir / "knn_proxy.csv", knn_csv.str());
}

void cmd_synth(Context& ctx) {
  const auto& c = ctx.cfg;
  SyntheticOptions o;
  o.n_pool = c.n_pool;
  o.n_val = c.n_val;
  o.n_test = c.n_test;
  o.dim = c.dim;
  o.classes = c.classes;
  o.foundation_dims = {c.dim + c.dim / 2, c.dim + c.dim / 4};
  o.seed = c.seed;
  const auto paths = write_bundle(make_synthetic_bundle(o), out_dir(c));
  ctx.out << "wrote " << paths.pool.generic_string() << '\n'
          << "wrote " << paths.val.generic_string() << '\n'
          << "wrote " << paths.test.generic_string() << '\n';
}

// --------------------------------------------------------------------------
// parser

struct Command {
  const char* name;
  const char* description;
  void (*handler)(Context&);
  std::vector<std::string> flags;
};

const std::vector<Command>& commands() {
  static const std::vector<Command> table = {
      {"ingest", "Convert CSV inputs into LATC containers and a validated manifest", &cmd_ingest,
       {"classifier", "foundation", "logits", "labels", "split", "seed", "out"}},
      {"agree", "Per-sample agreement scores of a query manifest against a pool", &cmd_agree,
       {"pool", "manifest", "k", "models", "out", "format"}},
      {"calibrate", "Fit vanilla and agreement temperature scaling on a validation split", &cmd_calibrate,
       {"pool", "val", "k", "models", "out"}},
      {"eval", "Failure-detection AUROC of every confidence method on a test split", &cmd_eval,
       {"pool", "val", "test", "k", "models", "seed", "out", "format", "dataset-id", "run-id", "ablation"}},
      {"sweep-k", "Validation AUROC over a grid of neighbourhood sizes", &cmd_sweep_k,
       {"pool", "val", "k-grid", "models", "out", "format"}},
      {"sweep-pool", "Validation AUROC over subsampled pool sizes and k", &cmd_sweep_pool,
       {"pool", "val", "pool-sizes", "k-grid", "models", "seed", "out", "format"}},
      {"theory", "Randomised checks of the error bound and the NDCG lower bound", &cmd_theory,
       {"seed", "trials", "out", "format"}},
      {"report", "Evaluation report plus plot-data CSVs (accuracy bins, model correlation, kNN proxy)", &cmd_report,
       {"pool", "val", "test", "k", "models", "seed", "out", "format", "dataset-id", "run-id", "ablation", "bins"}},
      {"synth", "Write a synthetic pool/val/test bundle", &cmd_synth,
       {"out", "seed", "n-pool", "n-val", "n-test", "dim", "classes"}},
  };
  return table;
}

void add_flag(CLI::App& sub, const std::string& flag, RunConfig& c) {
  const std::string name = "--" + flag;
  if (flag == "manifest") sub.add_option(name, c.manifest, "Query manifest.json");
  else if (flag == "pool") sub.add_option(name, c.pool, "Pool manifest.json (neighbour candidates)");
  else if (flag == "val") sub.add_option(name, c.val, "Validation manifest.json");
  else if (flag == "test") sub.add_option(name, c.test, "Test manifest.json");
  else if (flag == "k") sub.add_option(name, c.k, "Neighbourhood size")->capture_default_str();
  else if (flag == "k-grid") sub.add_option(name, c.k_grid, "Neighbourhood sizes to sweep")->delimiter(',')->capture_default_str();
  else if (flag == "pool-sizes") sub.add_option(name, c.pool_sizes, "Pool sizes to subsample (default: 2000,5000,10000,20000,50000 up to the pool size)")->delimiter(',');
  else if (flag == "models") sub.add_option(name, c.models, "single | multiple | comma-separated model ids")->capture_default_str();
  else if (flag == "seed") sub.add_option(name, c.seed, "Seed for subsampling and generators")->capture_default_str();
  else if (flag == "out") sub.add_option(name, c.out, "Output directory")->capture_default_str();
  else if (flag == "format") {
    sub.add_option(name, c.format, "Report format: json | csv | both")
        ->transform(CLI::CheckedTransformer(std::map<std::string, Format>{{"json", Format::json}, {"csv", Format::csv}, {"both", Format::both}}));
  } else if (flag == "dataset-id") sub.add_option(name, c.dataset_id, "Dataset id recorded in the report");
  else if (flag == "run-id") sub.add_option(name, c.run_id, "Run id recorded in the report")->capture_default_str();
  else if (flag == "ablation") sub.add_flag(name, c.ablation, "Add Spearman/Jaccard/CKA temperature-scaling rows");
  else if (flag == "bins") sub.add_option(name, c.bins, "Bins for the agreement-accuracy curve")->capture_default_str();
  else if (flag == "classifier") sub.add_option(name, c.classifier_csv, "Classifier features CSV (n x d)");
  else if (flag == "foundation") sub.add_option(name, c.foundation_csv, "Foundation features as id=path.csv (repeatable)");
  else if (flag == "logits") sub.add_option(name, c.logits_csv, "Logits CSV (n x C)");
  else if (flag == "labels") sub.add_option(name, c.labels_csv, "Labels CSV, 0-based class ids");
  else if (flag == "split") sub.add_option(name, c.split, "pool | validation | test")->capture_default_str();
  else if (flag == "trials") sub.add_option(name, c.trials, "Randomised trials per bound check")->capture_default_str();
  else if (flag == "n-pool") sub.add_option(name, c.n_pool, "Synthetic pool rows")->capture_default_str();
  else if (flag == "n-val") sub.add_option(name, c.n_val, "Synthetic validation rows")->capture_default_str();
  else if (flag == "n-test") sub.add_option(name, c.n_test, "Synthetic test rows")->capture_default_str();
  else if (flag == "dim") sub.add_option(name, c.dim, "Synthetic classifier dimension")->capture_default_str();
  else if (flag == "classes") sub.add_option(name, c.classes, "Synthetic class count")->capture_default_str();
}

std::unique_ptr<CLI::App> build_app(RunConfig& c) {
  auto app = std::make_unique<CLI::App>("Latent-agreement failure detection", "lata");
  app->require_subcommand(1, 1);
  app->set_config("--config", "", "TOML config; values are overridden by flags ([command] sections)");
  app->fallthrough();
  for (const auto& cmd : commands()) {
    auto* sub = app->add_subcommand(cmd.name, cmd.description);
    for (const auto& f : cmd.flags) add_flag(*sub, f, c);
  }
  return app;
}

void print_error(std::ostream& err, const std::string& code, const std::string& message, int exit_code) {
  json doc;
  doc["error"] = code;
  doc["message"] = message;
  doc["exit_code"] = exit_code;
  err << doc.dump() << '\n';
}

}  // namespace

std::vector<std::string> command_names() {
  std::vector<std::string> out;
  for (const auto& c : commands()) out.emplace_back(c.name);
  return out;
}

std::vector<std::string> registered_flags(const std::string& command) {
  RunConfig c;
  auto app = build_app(c);
  auto* sub = app->get_subcommand(command);
  std::vector<std::string> out;
  for (const auto* opt : sub->get_options()) {
    for (const auto& name : opt->get_lnames()) out.push_back("--" + name);
  }
  return out;
}

std::string help_text(const std::string& command) {
  RunConfig c;
  auto app = build_app(c);
  return app->get_subcommand(command)->help();
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  auto app = build_app(cfg);
  try {
    app->parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    const CLI::App* target = app.get();
    for (const auto* sub : app->get_subcommands()) target = sub;
    out << (target == app.get() ? app->help() : target->help());
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app->help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    print_error(err, "ConfigError", e.what(), 2);
    return 2;
  }
  for (const auto& cmd : commands()) {
    if (!app->got_subcommand(cmd.name)) continue;
    Context ctx{cfg, out};
    try {
      cmd.handler(ctx);
      return 0;
    } catch (const Error& e) {
      print_error(err, std::string(to_string(e.code())), e.detail(), e.exit_code());
      return e.exit_code();
    } catch (const fs::filesystem_error& e) {
      print_error(err, "IoFailure", e.what(), 3);
      return 3;
    } catch (const std::exception& e) {
      print_error(err, "InternalError", e.what(), 3);
      return 3;
    }
  }
  print_error(err, "ConfigError", "no command given", 2);
  return 2;
}

}  // namespace lata::cli
