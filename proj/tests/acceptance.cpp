// Acceptance suite: one PASS/FAIL line per criterion, each with its time limit.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "lata/agreement.hpp"
#include "lata/arraystore.hpp"
#include "lata/calibration.hpp"
#include "lata/detection.hpp"
#include "lata/pipeline.hpp"
#include "lata/synthetic.hpp"
#include "lata/theory.hpp"

using namespace lata;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

struct Criterion {
  const char* name;
  double limit_seconds;
  std::function<void(Outcome&)> body;
};

using Perm = std::vector<PoolIndex>;

Perm iota(std::size_t n) {
  Perm p(n);
  std::iota(p.begin(), p.end(), 0u);
  return p;
}

double oracle_ndcg(const Perm& ideal, const Perm& cand, const std::vector<double>& r) {
  long double num = 0, den = 0;
  for (std::size_t i = 0; i < ideal.size(); ++i) {
    const long double disc = 1.0L / std::log2(static_cast<long double>(i) + 2.0L);
    num += r[cand[i]] * disc;
    den += r[ideal[i]] * disc;
  }
  return static_cast<double>(num / den);
}

void ndcg_correctness(Outcome& o) {
  const Perm star = {0, 1, 2, 3}, prime = {1, 2, 0, 3};
  o.require(ndcg(star, star, Importance::indicator(star, 2)) == 1.0, "identity != 1");
  const double fixture = ndcg(star, prime, Importance::indicator(star, 2));
  o.require(std::abs(fixture - 0.91972078914818770) <= 1e-9, "n=4/k=2 fixture");
  std::mt19937_64 rng(1);
  std::size_t checked = 0;
  double worst = 0.0;
  for (std::size_t n = 1; n <= 6; ++n) {
    Perm ideal = iota(n);
    std::shuffle(ideal.begin(), ideal.end(), rng);
    for (std::size_t k = 1; k <= n; ++k) {
      std::vector<double> w(n, 0.0);
      for (std::size_t i = 0; i < k; ++i) w[ideal[i]] = 1.0;
      const auto r = Importance::indicator(ideal, k);
      Perm cand = iota(n);
      do {
        const double err = std::abs(ndcg(ideal, cand, r) - oracle_ndcg(ideal, cand, w));
        worst = std::max(worst, err);
        ++checked;
      } while (std::next_permutation(cand.begin(), cand.end()));
    }
  }
  o.require(worst <= 1e-12, "exhaustive oracle");
  o.detail << "fixture=" << std::setprecision(12) << fixture << " exhaustive=" << checked << " max_err=" << worst;
}

void ndcg_log_base(Outcome& o) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng() % 60;
    Perm ideal = iota(n), cand = iota(n);
    std::shuffle(cand.begin(), cand.end(), rng);
    double v2, ve, v10;
    if (trial % 2 == 0) {
      std::vector<double> dist(n);
      for (auto& d : dist) d = u(rng);
      std::sort(ideal.begin(), ideal.end(), [&](PoolIndex a, PoolIndex b) { return dist[a] < dist[b]; });
      const auto r = Importance::reciprocal_distance(dist);
      v2 = ndcg(ideal, cand, r, 2.0), ve = ndcg(ideal, cand, r, std::exp(1.0)), v10 = ndcg(ideal, cand, r, 10.0);
    } else {
      std::shuffle(ideal.begin(), ideal.end(), rng);
      const auto r = Importance::indicator(ideal, 1 + rng() % n);
      v2 = ndcg(ideal, cand, r, 2.0), ve = ndcg(ideal, cand, r, std::exp(1.0)), v10 = ndcg(ideal, cand, r, 10.0);
    }
    worst = std::max({worst, std::abs(v2 - ve), std::abs(v2 - v10)});
  }
  o.require(worst <= 1e-12, "base disagreement");
  o.detail << "instances=1000 max_diff=" << worst;
}

// Integer-valued features and exactly representable maps: signed coordinate
// permutation, disjoint 3-4-5 Givens rotations (5x an orthogonal matrix),
// and positive integer rescales.
FeatureMatrix integer_features(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> v(-64, 64);
  FeatureMatrix m(n, d);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(v(rng));
  for (std::size_t i = 0; i < n; ++i) m(i, i % d) += 65.0f;  // no zero rows
  return m;
}

struct ExactOrthogonal {
  std::vector<std::size_t> perm;
  std::vector<float> sign;
  std::vector<bool> givens;  // rotate pair (2j, 2j+1)

  static ExactOrthogonal random(std::size_t d, std::mt19937_64& rng) {
    ExactOrthogonal q;
    q.perm.resize(d);
    std::iota(q.perm.begin(), q.perm.end(), 0);
    std::shuffle(q.perm.begin(), q.perm.end(), rng);
    for (std::size_t j = 0; j < d; ++j) q.sign.push_back((rng() & 1) ? -1.0f : 1.0f);
    for (std::size_t j = 0; j < d / 2; ++j) q.givens.push_back(rng() & 1);
    return q;
  }

  FeatureMatrix apply(const FeatureMatrix& m, float scale) const {
    FeatureMatrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t j = 0; j < m.cols(); ++j) out(i, perm[j]) = sign[j] * m(i, j);
      // Every pair is scaled by 5, rotated or not, so the map stays 5 * orthogonal.
      for (std::size_t j = 0; j + 1 < m.cols(); j += 2) {
        const float a = out(i, j), b = out(i, j + 1);
        if (givens[j / 2]) {
          out(i, j) = 3.0f * a - 4.0f * b;
          out(i, j + 1) = 4.0f * a + 3.0f * b;
        } else {
          out(i, j) = 5.0f * a;
          out(i, j + 1) = 5.0f * b;
        }
      }
      for (auto& v : out.row(i)) v *= scale;
    }
    return out;
  }
};

Dataset as_dataset(FeatureMatrix cls, FeatureMatrix fm) {
  Dataset d;
  const std::size_t n = cls.rows();
  d.classifier = std::move(cls);
  d.foundation.push_back({"fm", std::move(fm)});
  d.labels.assign(n, 0);
  d.split = Split::pool;
  return d;
}

void as_invariance(Outcome& o) {
  const std::size_t n = 500, d = 32, queries = 20, k = 50;
  std::mt19937_64 rng(3);
  const std::vector<std::string> models = {"fm"};
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto pool_c = integer_features(n, d, rng), pool_f = integer_features(n, d + 8, rng);
    const auto q_c = integer_features(queries, d, rng), q_f = integer_features(queries, d + 8, rng);
    const auto base = agreement_batch(as_dataset(pool_c, pool_f), as_dataset(q_c, q_f), k, models);
    const float scale = static_cast<float>(1 + rng() % 7);
    const bool classifier_side = trial % 2 == 0;
    AgreementVector moved;
    if (trial % 4 < 2) {
      const auto q = ExactOrthogonal::random(classifier_side ? d : d + 8, rng);
      moved = classifier_side
                  ? agreement_batch(as_dataset(q.apply(pool_c, 1.0f), pool_f), as_dataset(q.apply(q_c, 1.0f), q_f), k, models)
                  : agreement_batch(as_dataset(pool_c, q.apply(pool_f, 1.0f)), as_dataset(q_c, q.apply(q_f, 1.0f)), k, models);
    } else {
      auto scaled = [&](const FeatureMatrix& m) {
        FeatureMatrix s = m;
        for (std::size_t i = 0; i < s.size(); ++i) s.data()[i] *= scale;
        return s;
      };
      moved = classifier_side ? agreement_batch(as_dataset(scaled(pool_c), pool_f), as_dataset(scaled(q_c), q_f), k, models)
                              : agreement_batch(as_dataset(pool_c, scaled(pool_f)), as_dataset(q_c, scaled(q_f)), k, models);
    }
    for (std::size_t i = 0; i < queries; ++i) worst = std::max(worst, std::abs(base.scores[i] - moved.scores[i]));
  }
  o.require(worst <= 1e-9, "AS changed");
  o.detail << "trials=100 n=500 d=32 max_diff=" << worst;
}

void prop1_bench(Outcome& o) {
  const double cs[] = {0.0, 0.1, 1.0};
  std::size_t violations = 0, samples = 0;
  double min_slack = INFINITY;
  for (std::size_t t = 0; t < 1000; ++t) {
    const auto inst = theory::gen_regression(64, 16, cs[t % 3], 1.0, theory::trial_seed(11, t));
    for (const auto& row : theory::check_prop1(inst)) {
      violations += row.holds ? 0 : 1;
      min_slack = std::min(min_slack, row.rhs - row.lhs);
      ++samples;
    }
  }
  o.require(violations == 0, "bound violated");
  o.detail << "instances=1000 samples=" << samples << " violations=" << violations << " min_slack=" << min_slack;
}

void prop2_bench(Outcome& o) {
  const double deltas[] = {1.1, 1.5, 2.0, 5.0};
  std::size_t violations = 0, below_one = 0;
  double min_slack = INFINITY;
  for (std::size_t t = 0; t < 1000; ++t) {
    const double delta = deltas[t % 4];
    const auto field = theory::gen_distortion(200, 8, 20, delta, theory::trial_seed(12, t));
    if (!theory::certify(field)) ++violations;
    const auto r = theory::check_prop2(field);
    violations += r.holds ? 0 : 1;
    below_one += r.ndcg < 0.999 ? 1 : 0;
    min_slack = std::min(min_slack, r.ndcg - 1.0 / (delta * delta));
  }
  std::size_t iso_failures = 0;
  for (std::size_t t = 0; t < 50; ++t) {
    const auto r = theory::check_prop2(theory::gen_distortion(200, 8, 20, 1.0, theory::trial_seed(13, t)));
    iso_failures += r.ndcg == 1.0 ? 0 : 1;
  }
  o.require(violations == 0, "bound violated");
  o.require(iso_failures == 0, "delta=1 ndcg != 1");
  o.detail << "fields=1000 violations=" << violations << " min_slack=" << min_slack << " ndcg<0.999: " << below_one
           << " delta=1 exact: " << 50 - iso_failures << "/50";
}

struct Calibrated {
  LogitsMatrix logits;
  LabelVector labels;
};

Calibrated well_calibrated(std::size_t n, std::size_t classes, float scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.5f);
  Calibrated out{LogitsMatrix(n, classes), LabelVector(n)};
  for (std::size_t i = 0; i < out.logits.size(); ++i) out.logits.data()[i] = g(rng);
  const auto p = softmax(out.logits);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    double draw = u(rng), acc = 0.0;
    std::size_t c = 0;
    for (; c + 1 < classes; ++c) {
      acc += p(i, c);
      if (draw < acc) break;
    }
    out.labels[i] = static_cast<std::int32_t>(c);
  }
  for (std::size_t i = 0; i < out.logits.size(); ++i) out.logits.data()[i] *= scale;
  return out;
}

void calibration(Outcome& o) {
  std::mt19937_64 rng(4);
  std::normal_distribution<float> g(0.0f, 4.0f);
  std::uniform_real_distribution<double> t(-1.0, 10.0), ts(-5.0, 5.0), a(0.0, 1.0);
  std::size_t flips = 0, rows = 0;
  for (int block = 0; block < 100; ++block) {
    LogitsMatrix logits(1000, 10);
    for (std::size_t i = 0; i < logits.size(); ++i) logits.data()[i] = g(rng);
    std::vector<double> as(1000);
    for (auto& v : as) v = a(rng);
    const CalibrationModel m{CalibrationVariant::agreement, t(rng), ts(rng)};
    const auto before = predicted_labels(logits);
    const auto p = apply(m, logits, as);
    for (std::size_t i = 0; i < p.rows(); ++i, ++rows) {
      const auto row = p.row(i);
      flips += (std::max_element(row.begin(), row.end()) - row.begin()) == before[i] ? 0 : 1;
    }
  }
  o.require(flips == 0, "argmax flipped");

  const auto scaled = well_calibrated(10000, 10, 3.0f, 5);
  const auto vanilla = fit(scaled.logits, scaled.labels, {}, CalibrationVariant::vanilla);
  o.require(std::abs(vanilla.t - 3.0) <= 0.15, "scale 3 not recovered");

  const auto correct = correctness(scaled.logits, scaled.labels);
  std::normal_distribution<double> noise(0.0, 0.2);
  std::vector<double> as(scaled.labels.size());
  for (std::size_t i = 0; i < as.size(); ++i) as[i] = std::clamp((correct[i] ? 0.7 : 0.4) + noise(rng), 0.0, 1.0);
  const auto agree = fit(scaled.logits, scaled.labels, as, CalibrationVariant::agreement);
  const double nv = calibration_nll(vanilla, scaled.logits, scaled.labels);
  const double na = calibration_nll(agree, scaled.logits, scaled.labels, as);
  o.require(na <= nv + 1e-9, "agreement NLL above vanilla");
  o.detail << "rows=" << rows << " flips=" << flips << " fitted_t=" << std::setprecision(6) << vanilla.t
           << " nll_vanilla=" << nv << " nll_agreement=" << na;
}

double pairwise_auroc(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
  long double good = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j]) continue;
      pairs += 1;
      good += s[i] > s[j] ? 1.0L : (s[i] == s[j] ? 0.5L : 0.0L);
    }
  }
  return static_cast<double>(good / pairs);
}

void auroc_oracle(Outcome& o) {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  std::size_t monotone_failures = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 999;
    const int levels = 2 + static_cast<int>(rng() % 200);
    std::vector<double> s(n), mapped(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % levels) / levels;
      y[i] = static_cast<std::uint8_t>(rng() % 2);
    }
    y[0] = 1, y[1] = 0;
    const double a = auroc(s, y);
    worst = std::max(worst, std::abs(a - pairwise_auroc(s, y)));
    for (std::size_t i = 0; i < n; ++i) mapped[i] = std::atan(5.0 * s[i]) * 3.0 + 1.0;
    monotone_failures += auroc(mapped, y) == a ? 0 : 1;
  }
  o.require(worst <= 1e-12, "pairwise mismatch");
  o.require(monotone_failures == 0, "monotone transform changed AUROC");
  o.detail << "instances=200 max_err=" << worst << " monotone_failures=" << monotone_failures;
}

void synthetic_end_to_end(Outcome& o) {
  const auto bundle = make_synthetic_bundle(SyntheticOptions{});
  PipelineOptions opt;
  opt.k = 50;
  const auto report = run_pipeline(bundle.pool, bundle.val, bundle.test, opt);

  const AgreementEngine engine(bundle.pool);
  const auto as = engine.score(bundle.test, 50, engine.model_ids());
  const auto correct = correctness(*bundle.test.logits, bundle.test.labels);
  const std::vector<double> correct_d(correct.begin(), correct.end());
  const double r = pearson_correlation(as.scores, correct_d);

  const double msp = report.row("msp").auroc;
  const double multi = report.row("ts_agreement_multi").auroc;
  const double single = report.row("ts_agreement_single").auroc;
  o.require(r > 0.3, "Pearson(AS, correctness) <= 0.3");
  o.require(multi >= msp + 0.01, "ts_agreement_multi < msp + 1 point");
  o.require(single >= msp + 0.01, "ts_agreement_single < msp + 1 point");
  o.detail << std::setprecision(4) << "n_pool=" << bundle.pool.size() << " pearson=" << r << " msp=" << msp
           << " ts_agreement_single=" << single << " ts_agreement_multi=" << multi;
}

void k_sweep(Outcome& o) {
  o.require(default_k_grid() == std::vector<std::size_t>{10, 20, 50, 100, 200, 500, 1000}, "default grid");
  const std::map<std::size_t, double> table = {{10, 0.61}, {20, 0.66}, {50, 0.70}, {100, 0.72},
                                               {200, 0.72}, {500, 0.69}, {1000, 0.65}};
  const auto grid = default_k_grid();
  const auto fixture = sweep_k_with(grid, 5000, [&](std::size_t k) { return table.at(k); });
  o.require(fixture.best_k == 100, "known-optimal k (tie 100/200) not selected");
  const auto skipped = sweep_k_with(grid, 300, [&](std::size_t k) { return table.at(k); });
  o.require(skipped.best_k == 100 && !skipped.rows[5].auroc && !skipped.rows[6].auroc, "k > n not skipped");

  SyntheticOptions so;
  so.n_pool = 3000, so.n_val = 600, so.n_test = 10;
  const auto b = make_synthetic_bundle(so);
  const auto real = sweep_k(b.pool, b.val, grid, ModelSelection{});
  std::size_t expect = 0;
  double best = -1.0;
  for (const auto& row : real.rows) {
    if (row.auroc && *row.auroc > best) best = *row.auroc, expect = row.k;
  }
  o.require(real.best_k == expect, "real sweep selection");
  o.detail << "fixture_best=" << fixture.best_k << " synthetic_best=" << real.best_k << " (auroc " << best << ")";
}

void latc_round_trip(Outcome& o) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("lata_acceptance_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::uint32_t> bits;
  std::size_t mismatches = 0;
  for (int t = 0; t < 1000; ++t) {
    FeatureMatrix m(1 + rng() % 40, 1 + rng() % 40);
    for (std::size_t i = 0; i < m.size(); ++i) {
      float v;
      do {
        const std::uint32_t u = bits(rng);
        std::memcpy(&v, &u, 4);
      } while (!std::isfinite(v));
      m.data()[i] = v;
    }
    write_container(m, dir / "m.latc");
    const auto back = read_matrix(dir / "m.latc");
    if (back.rows() != m.rows() || back.cols() != m.cols() ||
        std::memcmp(back.data(), m.data(), m.size() * sizeof(float)) != 0) {
      ++mismatches;
    }
  }
  o.require(mismatches == 0, "round-trip mismatch");

  auto expect = [&](Errc code, const std::function<void()>& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (e.code() == code) return;
    } catch (...) {
    }
    o.require(false, std::string(to_string(code)) + " not raised");
  };
  FeatureMatrix good(2, 2, {1, 2, 3, 4});
  write_container(good, dir / "good.latc");
  std::ifstream in(dir / "good.latc", std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), {});
  auto variant = [&](const std::string& name, const std::function<void(std::string&)>& edit) {
    std::string b = bytes;
    edit(b);
    std::ofstream(dir / name, std::ios::binary) << b;
    return dir / name;
  };
  const auto bad_magic = variant("magic", [](std::string& b) { b[0] = 'X'; });
  const auto truncated = variant("trunc", [](std::string& b) { b.resize(b.size() - 3); });
  const auto short_header = variant("short", [](std::string& b) { b.resize(10); });
  const auto version = variant("version", [](std::string& b) { b[4] = 7; });
  const auto dtype = variant("dtype", [](std::string& b) { b[5] = 9; });
  const auto nan = variant("nan", [](std::string& b) {
    const float q = NAN;
    std::memcpy(&b[24], &q, 4);
  });
  expect(Errc::BadMagic, [&] { read_container(bad_magic); });
  expect(Errc::TruncatedPayload, [&] { read_container(truncated); });
  expect(Errc::TruncatedPayload, [&] { read_container(short_header); });
  expect(Errc::UnsupportedVersion, [&] { read_container(version); });
  expect(Errc::UnsupportedDtype, [&] { read_container(dtype); });
  expect(Errc::NonFiniteElement, [&] { read_container(nan); });
  expect(Errc::MissingFile, [&] { read_container(dir / "absent.latc"); });
  expect(Errc::NonFiniteElement, [&] { write_container(FeatureMatrix(1, 1, {INFINITY}), dir / "x.latc"); });
  fs::remove_all(dir);
  o.detail << "matrices=1000 mismatches=" << mismatches << " error cases=8";
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"ndcg_correctness", 1.0, ndcg_correctness},
      {"ndcg_log_base_invariance", 1.0, ndcg_log_base},
      {"agreement_invariances", 5.0, as_invariance},
      {"error_bound_bench", 10.0, prop1_bench},
      {"ndcg_lower_bound_bench", 30.0, prop2_bench},
      {"calibration", 30.0, calibration},
      {"auroc_oracle", 5.0, auroc_oracle},
      {"synthetic_end_to_end", 60.0, synthetic_end_to_end},
      {"k_sweep", 10.0, k_sweep},
      {"latc_round_trip", 5.0, latc_round_trip},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_seconds;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::cout << (pass ? "PASS " : "FAIL ") << c.name << "  " << std::fixed << std::setprecision(3) << secs
              << "s (limit " << std::setprecision(0) << c.limit_seconds << "s)" << (in_time ? "" : " TIMEOUT")
              << std::defaultfloat << "  " << o.detail.str() << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
