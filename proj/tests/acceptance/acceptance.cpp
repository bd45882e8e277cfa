// Copyright 2026 The apfusion Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per headline property of the toolkit.
// Exits non-zero if any property fails.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "apf/apf.hpp"

namespace fs = std::filesystem;
using namespace apf;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  std::function<Outcome()> check;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

TraitVector uniform(double x) { return TraitVector{{x, x, x, x, x}}; }

unsigned worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

// --- metric exactness ----------------------------------------------------------

Outcome metric_exactness() {
  double worst = 0.0;
  auto check = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };

  // accuracy: constant 0.1 error; per-trait mixed errors; three-video average.
  {
    const std::vector<TraitVector> p{uniform(0.9)}, g{uniform(1.0)};
    check(metrics::accuracy(p, g).mean_accuracy, 0.9);
  }
  {
    const std::vector<TraitVector> p{TraitVector{{0.5, 0.25, 1.0, 0.0, 0.75}}, TraitVector{{0.5, 0.75, 0.0, 0.0, 0.25}}};
    const std::vector<TraitVector> g{TraitVector{{0.5, 0.5, 0.0, 1.0, 0.5}}, TraitVector{{0.0, 0.5, 0.0, 1.0, 0.5}}};
    const auto r = metrics::accuracy(p, g);
    const double want[] = {0.75, 0.75, 0.5, 0.0, 0.75};
    for (std::size_t j = 0; j < kNumTraits; ++j) check(r.accuracy[j], want[j]);
    check(r.mean_accuracy, 0.55);
  }
  {
    const std::vector<TraitVector> p{uniform(0.2), uniform(0.4), uniform(0.6)};
    const std::vector<TraitVector> g{uniform(0.3), uniform(0.4), uniform(0.4)};
    check(metrics::accuracy(p, g).mean_accuracy, 0.9);
  }

  // residuals: signs and magnitudes.
  {
    const std::vector<TraitVector> g{uniform(0.5)}, b{uniform(0.9)}, c{uniform(0.6)};
    check(metrics::residuals(b, c, g)[0][0], 0.3);
  }
  {
    const std::vector<TraitVector> g{uniform(0.5)}, b{uniform(0.5)}, c{uniform(0.25)};
    check(metrics::residuals(b, c, g)[0][2], -0.25);
  }
  {
    const std::vector<TraitVector> g{uniform(0.0)}, b{uniform(1.0)}, c{uniform(1.0)};
    check(metrics::residuals(b, c, g)[0][4], 0.0);
  }

  // residual curve: residuals {0.1, 0.3}; mixed signs on a 0.25 grid; all-equal models.
  {
    const std::vector<TraitVector> g{uniform(0.0), uniform(0.0)}, b{uniform(0.1), uniform(0.3)};
    const auto curve = metrics::residual_curve(b, g, g);
    check(curve.values[0][0], 1.0);
    check(curve.values[0][200], 0.5);
    check(curve.values[0][400], 0.0);
  }
  {
    const std::vector<TraitVector> g{uniform(0.5), uniform(0.5), uniform(0.5), uniform(0.5)};
    const std::vector<TraitVector> b{uniform(1.0), uniform(0.5), uniform(0.75), uniform(0.25)};
    const std::vector<TraitVector> c{uniform(0.5), uniform(0.75), uniform(0.5), uniform(0.75)};
    const auto curve = metrics::residual_curve(b, c, g, 0.25);
    const double want[] = {0.75, 0.5, 0.25, 0.0, 0.0};
    for (std::size_t k = 0; k < 5; ++k) check(curve.values[3][k], want[k]);
  }
  {
    const std::vector<TraitVector> g{uniform(0.2), uniform(0.7), uniform(0.4)};
    const std::vector<TraitVector> b{uniform(0.3), uniform(0.3), uniform(0.3)};
    const auto curve = metrics::residual_curve(b, b, g, 0.5);
    check(curve.values[1][0], 1.0);
    check(curve.values[1][1], 0.0);
  }
  return {worst <= 1e-12, fmt("9 fixtures (accuracy, residuals, residual curve x3), max |error| %.3g", worst)};
}

// --- mean baseline -------------------------------------------------------------

Outcome mean_baseline() {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail = "accuracy per seed:";
  bool ok = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SynthConfig c;
    c.n_videos = 5000;
    c.seed = seed;
    const auto records = generate_records(c);
    std::vector<VideoRecord> train, test;
    for (const auto& r : records) {
      if (r.split == Split::train) train.push_back(r);
      if (r.split == Split::test) test.push_back(r);
    }
    const auto mean = mean_baseline_labels(train);
    std::vector<TraitVector> p(test.size(), mean), g;
    for (const auto& r : test) g.push_back(r.labels);
    const double acc = metrics::accuracy(p, g).mean_accuracy;
    ok = ok && std::abs(acc - 0.880) <= 0.005;
    detail += fmt(" %.4f", acc);
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 10.0;
  return {ok, detail + fmt(" (target 0.880 +/- 0.005), %.2f s", secs)};
}

// --- gradients -----------------------------------------------------------------

Outcome gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  ModalityConfig c;
  c.audio = AudioSlice::whole;
  c.attributes.fill(true);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) worst = std::max(worst, fusion_grad_check(c, seed));
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 60.0,
          fmt("%s, 20 seeds, max relative error %.3g (limit 1e-4), %.1f s", describe(c).c_str(), worst, secs)};
}

// --- dimensions ----------------------------------------------------------------

Outcome dimensions() {
  ModalityConfig all;
  all.audio = AudioSlice::whole;
  all.attributes.fill(true);
  const auto m = build_model(all, 0);
  const auto v = build_model(ModalityConfig{}, 0);
  const bool ok = m.fused_dim() == 264 && m.attribute_raw_dim() == 18 && m.attribute_joint_fc &&
                  m.attribute_joint_fc->out_dim == 8 && m.head.in_dim == 264 && m.head.out_dim == 5 &&
                  v.visual_dim() == 256 && v.fused_dim() == 256;
  return {ok, fmt("all attributes + audio: fused %zu, attributes %zu->%zu; visual only: %zu", m.fused_dim(),
                  m.attribute_raw_dim(), m.attribute_dim(), v.fused_dim())};
}

// --- histogram composition -----------------------------------------------------

Outcome histogram_identity() {
  Rng rng(20260101);
  double worst = 0.0;
  int streams = 0;
  while (streams < 1000) {
    const auto t = static_cast<std::uint32_t>(1 + rng.below(80));
    FrameAttributeSeries s;
    s.video_id = "x";
    s.frame_count = t;
    std::size_t n1 = 0, n2 = 0;
    for (std::uint32_t f = 0; f < t; ++f) {
      FrameAttributeRecord r;
      r.frame_index = f;
      r.face_detected = rng.uniform() > 0.2;
      r.attractiveness = rng.uniform();
      double sum = 0.0;
      for (auto& p : r.emotion_probs) sum += (p = rng.uniform());
      for (auto& p : r.emotion_probs) p /= sum;
      r.gender_probs = {0.5, 0.5};
      r.ethnicity_probs = {0.2, 0.3, 0.5};
      if (r.face_detected) (f < segment_boundary(t) ? n1 : n2)++;
      s.records.push_back(r);
    }
    if (n1 + n2 == 0) continue;
    ++streams;
    const double w1 = static_cast<double>(n1) / static_cast<double>(n1 + n2);
    auto compare = [&](const DynamicBlock& whole, const DynamicBlock& halves, std::size_t width) {
      for (std::size_t i = 0; i < width; ++i)
        worst = std::max(worst, std::abs(whole.values[i] - (w1 * halves.values[i] + (1 - w1) * halves.values[width + i])));
    };
    compare(attractiveness_consensus(s, ConsensusMode::orderless), attractiveness_consensus(s, ConsensusMode::ordered),
            kHistogramBins);
    compare(emotion_consensus(s, ConsensusMode::orderless), emotion_consensus(s, ConsensusMode::ordered),
            kNumEmotions * kHistogramBins);
  }
  return {worst <= 1e-12, fmt("1000 streams (emotion and attractiveness), max |whole - weighted halves| %.3g", worst)};
}

// --- learnability --------------------------------------------------------------

struct Margin {
  double model = 0.0, baseline = 0.0;
};

Margin proposed_margin(double signal) {
  SynthConfig c;
  c.n_videos = 200;
  c.seed = 0;
  c.signal_strength = signal;
  const auto d = generate_synthetic(c);
  const auto config = modality_grid().back().config;
  const auto trained = train(build_model(config, 0), d, 0);
  const auto preds = predict_split(trained.model, d, Split::test);
  std::vector<TraitVector> p;
  for (const auto& x : preds.predictions) p.push_back(x.traits);
  const auto mean = mean_baseline_labels(d.records_in(Split::train));
  const std::vector<TraitVector> base(preds.labels.size(), mean);
  return {metrics::accuracy(p, preds.labels).mean_accuracy, metrics::accuracy(base, preds.labels).mean_accuracy};
}

Outcome learnability() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rich = proposed_margin(0.9);
  const auto none = proposed_margin(0.0);
  const double secs = seconds_since(t0);
  const double m1 = rich.model - rich.baseline, m0 = none.model - none.baseline;
  return {m1 >= 0.02 && m0 < 0.005 && secs < 300.0,
          fmt("Proposed vs mean baseline, 200 videos, 40+100 epochs: signal 0.9 %+.4f (need >= 0.02), signal 0 "
              "%+.4f (need < 0.005), %.0f s",
              m1, m0, secs)};
}

// --- slice ordering ------------------------------------------------------------

Outcome slice_ordering() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail = "mean accuracy whole/first/second:";
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    SynthConfig c;
    c.n_videos = 200;
    c.seed = seed;
    const auto d = generate_synthetic(c);
    const auto rows = run_ablation(d, audio_slice_grid(), seed, TrainOptions{}, worker_count());
    for (const auto& r : rows)
      if (!r.ok) return {false, "config " + r.config.name + " failed: " + r.error};
    const double whole = rows[0].result.mean_accuracy, first = rows[1].result.mean_accuracy,
                 second = rows[2].result.mean_accuracy;
    ok = ok && first >= whole && whole >= second;
    detail += fmt(" seed %llu %.4f/%.4f/%.4f;", static_cast<unsigned long long>(seed), whole, first, second);
  }
  return {ok, detail + fmt(" need first >= whole >= second on every seed, %.0f s", seconds_since(t0))};
}

// --- bias recovery -------------------------------------------------------------

double openness_gap(std::uint64_t seed) {
  SynthConfig c;
  c.n_videos = 2000;
  c.seed = seed;
  c.bias_offsets["female"] = {0.05, 0, 0, 0, 0};
  const auto t = audit::group_stats(generate_records(c), {}, audit::GroupSource::metadata);
  return t.find(std::nullopt, Gender::female)->stats.mean[0] - t.find(std::nullopt, Gender::male)->stats.mean[0];
}

Outcome bias_recovery() {
  const double gap0 = openness_gap(0);
  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) sum += openness_gap(seed);
  const double mean_gap = sum / 20;

  SynthConfig c;
  c.n_videos = 2000;
  c.seed = 0;
  const auto t = audit::group_stats(generate_records(c), {}, audit::GroupSource::metadata);
  const auto& all = t.rows[0];
  std::size_t comparisons = 0, exceed = 0;
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    const auto& g = t.rows[i];
    if (g.count == 0) continue;
    for (std::size_t k = 0; k < kNumTraits; ++k) {
      ++comparisons;
      const double bound = 3 * all.stats.stddev[k] / std::sqrt(static_cast<double>(g.count));
      if (std::abs(g.stats.mean[k] - all.stats.mean[k]) >= bound) ++exceed;
    }
  }
  const bool ok = std::abs(gap0 - 0.05) <= 0.01 && std::abs(mean_gap - 0.05) <= 0.01 && exceed == 0;
  return {ok, fmt("female-male O gap %.4f at seed 0, %.4f averaged over 20 seeds (target 0.05 +/- 0.01); zero "
                  "offsets: %zu of %zu group-vs-population differences reach 3 sigma/sqrt(n)",
                  gap0, mean_gap, exceed, comparisons)};
}

// --- residual curve properties -------------------------------------------------

Outcome residual_properties() {
  Rng rng(77);
  auto random_set = [&](std::size_t n) {
    std::vector<TraitVector> v(n);
    for (auto& x : v)
      for (auto& y : x.values) y = rng.uniform();
    return v;
  };
  bool identical_ok = true;
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_set(50), g = random_set(50);
    const auto c = metrics::residual_curve(p, p, g);
    for (const auto& v : c.values) {
      identical_ok = identical_ok && v[0] == 1.0;
      for (std::size_t k = 1; k < v.size(); ++k) identical_ok = identical_ok && v[k] == 0.0;
    }
  }
  int violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(60);
    const auto b = random_set(n), c = random_set(n), g = random_set(n);
    const auto curve = metrics::residual_curve(b, c, g);
    for (const auto& v : curve.values)
      for (std::size_t k = 1; k < v.size(); ++k) violations += v[k] > v[k - 1];
  }
  return {identical_ok && violations == 0,
          fmt("identical models give 1 then 0: %s; monotonicity violations on 100 random instances: %d",
              identical_ok ? "yes" : "no", violations)};
}

// --- CLI determinism -----------------------------------------------------------

int run_cli(const fs::path& cwd, const std::string& args) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" APF_CLI_PATH "' " + args + " > /dev/null 2> cli.err";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome cli_determinism() {
  const auto root = fs::temp_directory_path() / ("apf_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::vector<std::pair<std::string, std::string>> steps{
      {"synth", "synth --out data --videos 60 --frames 90 --seed 11 --bias female:O:+0.05"},
      {"train", "train --out train --manifest data/manifest.jsonl --seed 3"},
      {"ablate", "ablate --out ablate --manifest data/manifest.jsonl --grid modalities --grid audio --seed 3 "
                 "--epochs-a 5 --epochs-b 5 --jobs " + std::to_string(worker_count())},
      {"audit", "audit --out audit --manifest data/manifest.jsonl --extremes-split all"}};
  std::string detail;
  bool ok = true;
  for (const char* rep : {"a", "b"}) {
    fs::create_directories(root / rep);
    for (const auto& [name, args] : steps) {
      const int rc = run_cli(root / rep, args);
      if (rc != 0) return {false, name + " exited with " + std::to_string(rc) + ": " + slurp(root / rep / "cli.err")};
    }
  }
  for (const auto& [name, args] : steps) {
    const auto dir = args.substr(args.find("--out ") + 6, args.find(' ', args.find("--out ") + 6) - args.find("--out ") - 6);
    std::size_t files = 0, differing = 0;
    for (const auto& e : fs::recursive_directory_iterator(root / "a" / dir)) {
      if (!e.is_regular_file()) continue;
      const auto rel = fs::relative(e.path(), root / "a");
      ++files;
      if (!fs::exists(root / "b" / rel) || slurp(e.path()) != slurp(root / "b" / rel)) ++differing;
    }
    ok = ok && differing == 0 && files > 0;
    detail += fmt("%s %zu files%s; ", name.c_str(), files, differing ? fmt(" (%zu differ)", differing).c_str() : " identical");
  }
  fs::remove_all(root);
  return {ok, detail + "reruns with identical flags"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"metric exactness", metric_exactness},
      {"mean baseline near 0.88", mean_baseline},
      {"gradient correctness", gradients},
      {"dimension bookkeeping", dimensions},
      {"histogram composition identity", histogram_identity},
      {"learnability", learnability},
      {"audio slice ordering", slice_ordering},
      {"bias recovery", bias_recovery},
      {"residual curve properties", residual_properties},
      {"CLI determinism", cli_determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", c.name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
