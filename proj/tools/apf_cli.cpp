// Copyright 2026 The apfusion Authors
// SPDX-License-Identifier: Apache-2.0

// apf: command-line front end for synthetic data generation, fusion-model
// training, prediction, evaluation, ablation grids, bias audits and gradient
// checks. Every command writes into a run directory that receives a
// config.json echo of the resolved flags and a produced_files.txt listing.
//
// Exit codes: 0 success, 2 I/O, 3 schema/validation, 4 numeric, 64 usage.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "apf/apf.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Run directory bookkeeping

class RunDir {
 public:
  RunDir(fs::path dir, std::string command) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) throw apf::IoError("cannot create output directory " + dir_.string());
    echo_["command"] = std::move(command);
  }

  const fs::path& dir() const { return dir_; }
  fs::path operator/(const std::string& name) const { return dir_ / name; }
  ordered_json& echo() { return echo_; }

  /// Prints the summary and stores it as summary.txt.
  void summary(const std::string& text) {
    std::cout << text;
    apf::report::Table::write_text(dir_ / "summary.txt", text);
  }

  /// Writes config.json and produced_files.txt (every file under the run
  /// directory, sorted, with its size in bytes).
  void finish() {
    apf::report::Table::write_text(dir_ / "config.json", echo_.dump(2) + "\n");
    std::vector<std::pair<std::string, std::uintmax_t>> files;
    for (const auto& e : fs::recursive_directory_iterator(dir_)) {
      if (!e.is_regular_file()) continue;
      const auto rel = fs::relative(e.path(), dir_).generic_string();
      if (rel == "produced_files.txt") continue;
      files.emplace_back(rel, e.file_size());
    }
    std::sort(files.begin(), files.end());
    std::string text = "path\tbytes\n";
    for (const auto& [p, n] : files) text += p + "\t" + std::to_string(n) + "\n";
    apf::report::Table::write_text(dir_ / "produced_files.txt", text);
  }

 private:
  fs::path dir_;
  ordered_json echo_;
};

std::string fmt4(double x) { return apf::report::fixed4(x); }

// Flag values are validated by the library; report their failures as usage errors.
template <class F>
auto flag_value(F&& parse) -> decltype(parse()) {
  try {
    return parse();
  } catch (const apf::SchemaError& e) {
    throw apf::UsageError(e.what());
  }
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

// ---------------------------------------------------------------------------
// Shared flag groups

struct ModalityFlags {
  std::string audio;
  std::string attributes;
  std::string emotion_consensus = "ordered";
  std::string attractiveness_consensus = "ordered";
  int m_train = 10;
  int m_test = 50;

  ModalityFlags(std::string default_audio, std::string default_attributes)
      : audio(std::move(default_audio)), attributes(std::move(default_attributes)) {}

  void add(CLI::App* app) {
    app->add_option("--audio", audio, "Audio slice: none, whole, first_half, second_half")->capture_default_str();
    app->add_option("--attributes", attributes,
                    "Comma-separated attributes (emotion, attractiveness, age, gender, ethnicity), 'all' or 'none'")
        ->capture_default_str();
    app->add_option("--emotion-consensus", emotion_consensus,
                    "Emotion aggregation: orderless, ordered, first_half, second_half")
        ->capture_default_str();
    app->add_option("--attractiveness-consensus", attractiveness_consensus,
                    "Attractiveness aggregation: orderless, ordered, first_half, second_half")
        ->capture_default_str();
    app->add_option("--m-train", m_train, "Equidistant frames per training video")->capture_default_str();
    app->add_option("--m-test", m_test, "Equidistant frames per evaluated video")->capture_default_str();
  }

  apf::ModalityConfig resolve() const {
    return flag_value([&] { return parse(); });
  }

 private:
  apf::ModalityConfig parse() const {
    apf::ModalityConfig c;
    c.audio = apf::parse_audio_slice(audio);
    if (attributes == "all") {
      c.attributes.fill(true);
    } else if (attributes != "none") {
      for (const auto& a : split_list(attributes, ',')) c.with(apf::parse_attribute(a));
    }
    c.emotion_consensus = apf::parse_consensus_mode(emotion_consensus);
    c.attractiveness_consensus = apf::parse_consensus_mode(attractiveness_consensus);
    c.m_train = m_train;
    c.m_test = m_test;
    apf::validate_config(c);
    return c;
  }
};

struct TrainFlags {
  apf::TrainOptions opt;

  void add(CLI::App* app) {
    app->add_option("--epochs-a", opt.stage_a_epochs, "Stage A epochs")->capture_default_str()->check(CLI::NonNegativeNumber);
    app->add_option("--epochs-b", opt.stage_b_epochs, "Stage B epochs")->capture_default_str()->check(CLI::NonNegativeNumber);
    app->add_option("--lr-a", opt.stage_a_learning_rate, "Stage A learning rate")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--lr-b", opt.stage_b_learning_rate, "Stage B learning rate")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--batch-size", opt.batch_size, "Mini-batch size")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--patience", opt.patience, "Plateau patience in epochs")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--decay", opt.decay, "Learning-rate factor applied on a plateau")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  }

  ordered_json json() const {
    return {{"epochs_a", opt.stage_a_epochs}, {"epochs_b", opt.stage_b_epochs},
            {"lr_a", opt.stage_a_learning_rate}, {"lr_b", opt.stage_b_learning_rate},
            {"batch_size", opt.batch_size},      {"patience", opt.patience},
            {"decay", opt.decay}};
  }
};

struct DatasetFlags {
  std::string manifest;
  bool invert_neuroticism = false;

  void add(CLI::App* app) {
    app->add_option("--manifest", manifest, "Dataset manifest (manifest.jsonl)")->required();
    app->add_flag("--invert-neuroticism", invert_neuroticism,
                  "Labels carry emotional stability in the N slot; flip it to neuroticism on load");
  }

  apf::Dataset load() const { return apf::load_dataset(manifest, invert_neuroticism); }

  void echo(ordered_json& j) const {
    j["manifest"] = manifest;
    j["invert_neuroticism"] = invert_neuroticism;
  }
};

std::string trait_line(const std::string& label, const std::array<double, apf::kNumTraits>& v, double avg) {
  std::string s = label + "\t" + fmt4(avg);
  for (double x : v) s += "\t" + fmt4(x);
  return s + "\n";
}

// ---------------------------------------------------------------------------
// synth

struct SynthFlags {
  std::string out;
  apf::SynthConfig config;
  std::string ethnicity_shares = "0.11,0.03,0.86";
  std::vector<std::string> bias;
};

// "group:trait:offset", e.g. "female:O:+0.05".
void apply_bias(apf::SynthConfig& c, const std::string& text) {
  const auto parts = split_list(text, ':');
  if (parts.size() != 3) throw apf::UsageError("--bias expects group:trait:offset, got '" + text + "'");
  const auto trait = static_cast<std::size_t>(flag_value([&] { return apf::parse_trait(parts[1]); }));
  double offset = 0.0;
  try {
    std::size_t used = 0;
    offset = std::stod(parts[2], &used);
    if (used != parts[2].size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw apf::UsageError("--bias offset is not a number: '" + parts[2] + "'");
  }
  auto& offsets = c.bias_offsets[parts[0]];
  offsets[trait] += offset;
}

ordered_json synth_json(const apf::SynthConfig& c) {
  ordered_json j;
  j["videos"] = c.n_videos;
  j["frames"] = c.frames_per_video;
  j["seed"] = c.seed;
  j["label_mean"] = c.label_mean;
  j["label_std"] = c.label_std;
  j["female_share"] = c.gender_proportion_female;
  j["ethnicity_shares"] = c.ethnicity_proportions;
  ordered_json bias = ordered_json::object();
  for (const auto& [group, offsets] : c.bias_offsets) {
    ordered_json o;
    for (std::size_t t = 0; t < apf::kNumTraits; ++t) o[std::string(apf::kTraitLetters[t])] = offsets[t];
    bias[group] = o;
  }
  j["bias_offsets"] = bias;
  j["signal_strength"] = c.signal_strength;
  j["noise_std"] = c.noise_std;
  j["face_miss_rate"] = c.face_miss_rate;
  j["visual_sample_counts"] = c.visual_sample_counts;
  return j;
}

int cmd_synth(SynthFlags& f) {
  auto& c = f.config;
  const auto shares = split_list(f.ethnicity_shares, ',');
  if (shares.size() != apf::kNumEthnicities) throw apf::UsageError("--ethnicity-shares expects 3 comma-separated values");
  for (std::size_t i = 0; i < shares.size(); ++i) {
    try {
      c.ethnicity_proportions[i] = std::stod(shares[i]);
    } catch (const std::exception&) {
      throw apf::UsageError("--ethnicity-shares: not a number: '" + shares[i] + "'");
    }
  }
  for (const auto& b : f.bias) apply_bias(c, b);
  flag_value([&] { apf::validate_synth_config(c); });

  RunDir run(f.out, "synth");
  run.echo()["generator"] = synth_json(c);
  const auto d = apf::generate_synthetic(c);
  apf::write_dataset(d, run.dir());

  std::ostringstream s;
  s << "videos\t" << d.size() << "\n";
  for (auto split : {apf::Split::train, apf::Split::validation, apf::Split::test})
    s << to_string(split) << "\t" << d.indices(split).size() << "\n";
  std::array<std::size_t, apf::kNumGenders> genders{};
  std::array<std::size_t, apf::kNumEthnicities> ethnicities{};
  for (const auto& r : d.records) {
    if (r.gender) ++genders[static_cast<std::size_t>(*r.gender)];
    if (r.ethnicity) ++ethnicities[static_cast<std::size_t>(*r.ethnicity)];
  }
  const double n = static_cast<double>(d.size());
  for (std::size_t g = 0; g < apf::kNumGenders; ++g)
    s << "share_" << apf::kGenderNames[g] << "\t" << fmt4(static_cast<double>(genders[g]) / n) << "\n";
  for (std::size_t e = 0; e < apf::kNumEthnicities; ++e)
    s << "share_" << apf::kEthnicityNames[e] << "\t" << fmt4(static_cast<double>(ethnicities[e]) / n) << "\n";
  s << "manifest\t" << (run.dir() / "manifest.jsonl").generic_string() << "\n";
  run.summary(s.str());
  run.finish();
  return 0;
}

// ---------------------------------------------------------------------------
// train / predict

struct TrainCmd {
  std::string out;
  DatasetFlags data;
  ModalityFlags modality{"first_half", "emotion,attractiveness,age"};
  TrainFlags train;
  std::uint64_t seed = 0;
};

int cmd_train(TrainCmd& f) {
  const auto config = f.modality.resolve();
  RunDir run(f.out, "train");
  f.data.echo(run.echo());
  run.echo()["seed"] = f.seed;
  run.echo()["modality"] = apf::to_json(config);
  run.echo()["training"] = f.train.json();

  const auto d = f.data.load();
  auto result = apf::train(apf::build_model(config, f.seed), d, f.seed, f.train.opt);
  apf::save_model(result.model, run / "model.apfm");
  apf::report::train_log_table(result.report).write(run / "train_log.tsv");

  std::vector<apf::report::Series> curves(2);
  curves[0].name = "train_loss";
  curves[1].name = "val_mae";
  for (const auto& e : result.report.epochs) {
    curves[0].points.emplace_back(e.epoch, e.train_loss);
    curves[1].points.emplace_back(e.epoch, e.val_mae);
  }
  apf::report::Table::write_text(run / "learning_curve.svg",
                                 apf::report::svg_line_chart(curves, "Training progress", "epoch", "value"));
  // One "<video_id>: reason" line per video left out of training or validation.
  std::string skipped;
  for (const auto& s : result.report.skipped) skipped += s + "\n";
  apf::report::Table::write_text(run / "skipped.txt", skipped);

  std::ostringstream s;
  s << "config\t" << apf::describe(config) << "\n";
  s << "parameters\t" << result.model.parameter_count() << "\n";
  s << "fused_dim\t" << result.model.fused_dim() << "\n";
  s << "train_samples\t" << result.report.train_samples << "\n";
  s << "skipped_videos\t" << result.report.skipped.size() << "\n";
  if (!result.report.epochs.empty()) {
    const auto& last = result.report.epochs.back();
    s << "final_train_loss\t" << fmt4(last.train_loss) << "\n";
    s << "final_val_mae\t" << fmt4(last.val_mae) << "\n";
    s << "final_learning_rate\t" << apf::format_real(last.learning_rate) << "\n";
  }
  run.summary(s.str());
  run.finish();
  return 0;
}

struct PredictCmd {
  std::string out;
  std::string model;
  DatasetFlags data;
  std::string split = "test";
};

int cmd_predict(PredictCmd& f) {
  const auto split = flag_value([&] { return apf::parse_split(f.split); });
  RunDir run(f.out, "predict");
  f.data.echo(run.echo());
  run.echo()["model"] = f.model;
  run.echo()["split"] = f.split;
  const auto model = apf::load_model(f.model);
  const auto d = f.data.load();
  const auto preds = apf::predict_split(model, d, split);
  apf::write_predictions(preds.predictions, run / "predictions.tsv");
  std::ostringstream s;
  s << "config\t" << apf::describe(model.config) << "\n";
  s << "predicted\t" << preds.predictions.size() << "\n";
  s << "skipped\t" << preds.skipped.size() << "\n";
  for (const auto& sk : preds.skipped) s << "skipped_video\t" << sk << "\n";
  run.summary(s.str());
  run.finish();
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateCmd {
  std::string out;
  DatasetFlags data;
  std::string predictions;
  std::string reference;
  bool baseline = false;
  std::string split = "test";
  double grid_step = 0.001;
  std::size_t top_k = 5;
};

// Aligns `preds` with the dataset labels by video id.
std::vector<apf::TraitVector> labels_for(const apf::Dataset& d, const std::vector<apf::Prediction>& preds) {
  std::map<std::string, const apf::VideoRecord*> by_id;
  for (const auto& r : d.records) by_id[r.video_id] = &r;
  std::vector<apf::TraitVector> out;
  for (const auto& p : preds) {
    auto it = by_id.find(p.video_id);
    if (it == by_id.end()) throw apf::SchemaError("prediction for unknown video '" + p.video_id + "'");
    out.push_back(it->second->labels);
  }
  return out;
}

std::vector<apf::TraitVector> traits_aligned(const std::vector<apf::Prediction>& source,
                                             const std::vector<apf::Prediction>& order, const std::string& what) {
  std::map<std::string, apf::TraitVector> by_id;
  for (const auto& p : source) by_id[p.video_id] = p.traits;
  std::vector<apf::TraitVector> out;
  for (const auto& p : order) {
    auto it = by_id.find(p.video_id);
    if (it == by_id.end()) throw apf::SchemaError(what + " has no prediction for video '" + p.video_id + "'");
    out.push_back(it->second);
  }
  return out;
}

std::vector<apf::TraitVector> traits_of(const std::vector<apf::Prediction>& p) {
  std::vector<apf::TraitVector> out;
  for (const auto& x : p) out.push_back(x.traits);
  return out;
}

int cmd_evaluate(EvaluateCmd& f) {
  if (f.predictions.empty() && !f.baseline)
    throw apf::UsageError("evaluate: give --predictions, --baseline, or both");
  if (!f.reference.empty() && f.predictions.empty())
    throw apf::UsageError("evaluate: --reference needs --predictions");
  const auto split = flag_value([&] { return apf::parse_split(f.split); });
  RunDir run(f.out, "evaluate");
  f.data.echo(run.echo());
  run.echo()["predictions"] = f.predictions;
  run.echo()["reference"] = f.reference;
  run.echo()["baseline"] = f.baseline;
  run.echo()["split"] = f.split;
  run.echo()["grid_step"] = f.grid_step;
  run.echo()["top_k"] = f.top_k;

  const auto d = f.data.load();
  std::ostringstream s;
  s << "model\tAvg.\tO\tC\tE\tA\tN\n";

  std::optional<std::vector<apf::Prediction>> baseline;
  if (f.baseline) {
    const auto train = d.records_in(apf::Split::train);
    if (train.empty()) throw apf::SchemaError("evaluate --baseline: empty training split");
    const auto mean = apf::mean_baseline_labels(train);
    baseline.emplace();
    for (const auto& r : d.records_in(split)) baseline->push_back({r.video_id, mean});
    if (baseline->empty()) throw apf::SchemaError("evaluate --baseline: empty " + f.split + " split");
    apf::write_predictions(*baseline, run / "baseline_predictions.tsv");
    const auto r = apf::metrics::accuracy(traits_of(*baseline), labels_for(d, *baseline));
    apf::report::evaluation_table(r).write(run / "baseline_metrics.tsv");
    s << trait_line("mean_baseline", r.accuracy, r.mean_accuracy);
  }

  if (!f.predictions.empty()) {
    const auto preds = apf::read_predictions(f.predictions);
    const auto gt = labels_for(d, preds);
    const auto r = apf::metrics::accuracy(traits_of(preds), gt);
    apf::report::evaluation_table(r).write(run / "metrics.tsv");
    s << trait_line("predictions", r.accuracy, r.mean_accuracy);

    std::optional<std::vector<apf::TraitVector>> ref;
    if (!f.reference.empty()) ref = traits_aligned(apf::read_predictions(f.reference), preds, "reference");
    else if (baseline) ref = traits_aligned(*baseline, preds, "mean baseline");
    if (ref) {
      const auto compared = traits_of(preds);
      const auto curve = apf::metrics::residual_curve(*ref, compared, gt, f.grid_step);
      apf::report::write_residual_curve(curve, run.dir());
      std::vector<std::string> ids;
      for (const auto& p : preds) ids.push_back(p.video_id);
      const auto top = apf::metrics::top_improvers(*ref, compared, gt, ids, std::min(f.top_k, ids.size()));
      apf::report::Table t({"trait", "rank", "video_id"});
      for (std::size_t j = 0; j < apf::kNumTraits; ++j)
        for (std::size_t k = 0; k < top[j].size(); ++k)
          t.row({std::string(apf::kTraitLetters[j]), std::to_string(k + 1), top[j][k]});
      t.write(run / "top_improvers.tsv");
      s << "improved_share_at_0\t-";
      for (std::size_t j = 0; j < apf::kNumTraits; ++j) s << "\t" << fmt4(curve.values[j][0]);
      s << "\n";
    }
  }
  run.summary(s.str());
  run.finish();
  return 0;
}

// ---------------------------------------------------------------------------
// ablate

struct AblateCmd {
  std::string out;
  DatasetFlags data;
  std::vector<std::string> grids{"modalities"};
  TrainFlags train;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

int cmd_ablate(AblateCmd& f) {
  std::vector<apf::NamedConfig> configs;
  for (const auto& g : f.grids) {
    std::vector<std::string> names = g == "all" ? std::vector<std::string>{"modalities", "emotion", "attractiveness", "audio"}
                                                : std::vector<std::string>{g};
    for (const auto& n : names) {
      std::vector<apf::NamedConfig> add;
      if (n == "modalities") add = apf::modality_grid();
      else if (n == "emotion") add = apf::emotion_slice_grid();
      else if (n == "attractiveness") add = apf::attractiveness_slice_grid();
      else if (n == "audio") add = apf::audio_slice_grid();
      else throw apf::UsageError("unknown grid '" + n + "' (expected modalities, emotion, attractiveness, audio, all)");
      configs.insert(configs.end(), add.begin(), add.end());
    }
  }
  RunDir run(f.out, "ablate");
  f.data.echo(run.echo());
  run.echo()["grids"] = f.grids;
  run.echo()["seed"] = f.seed;
  run.echo()["jobs"] = f.jobs;
  run.echo()["training"] = f.train.json();

  const auto d = f.data.load();
  const auto rows = apf::run_ablation(d, configs, f.seed, f.train.opt, f.jobs);
  apf::report::ablation_table(rows, true).write(run / "ablation.tsv");
  const auto text = apf::report::ablation_table(rows, false).str();
  run.summary(text);
  run.finish();
  return 0;
}

// ---------------------------------------------------------------------------
// audit

struct AuditCmd {
  std::string out;
  DatasetFlags data;
  std::string group_source = "metadata";
  std::string split = "all";
  std::string extremes_split = "test";
  double threshold = 0.7;
  double fraction = 0.10;
};

std::vector<std::size_t> split_indices(const apf::Dataset& d, const std::string& split) {
  if (split == "all") {
    std::vector<std::size_t> all(d.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  return d.indices(apf::parse_split(split));
}

template <class T>
std::vector<T> pick(const std::vector<T>& v, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  for (auto i : idx) out.push_back(v[i]);
  return out;
}

int cmd_audit(AuditCmd& f) {
  const auto source = flag_value([&] { return apf::audit::parse_group_source(f.group_source); });
  for (const auto* sp : {&f.split, &f.extremes_split})
    if (*sp != "all") flag_value([&] { return apf::parse_split(*sp); });
  if (!(f.fraction > 0.0 && f.fraction <= 0.5)) throw apf::UsageError("--fraction must lie in (0, 0.5]");
  if (!(f.threshold >= 0.0 && f.threshold <= 1.0)) throw apf::UsageError("--threshold must lie in [0,1]");
  RunDir run(f.out, "audit");
  f.data.echo(run.echo());
  run.echo()["group_source"] = f.group_source;
  run.echo()["split"] = f.split;
  run.echo()["extremes_split"] = f.extremes_split;
  run.echo()["threshold"] = f.threshold;
  run.echo()["fraction"] = f.fraction;

  namespace rep = apf::report;
  const auto d = f.data.load();
  const auto idx = split_indices(d, f.split);
  const auto records = pick(d.records, idx);

  const auto groups = apf::audit::predicted_groups(d, idx);
  const auto stats = apf::audit::group_stats(records, groups, source);
  rep::group_stats_table(stats).write(run / "group_stats.tsv");
  rep::group_stats_long_table(stats).write(run / "group_stats_long.tsv");

  const auto ages = apf::audit::predicted_ages(d, idx);
  const auto trend = apf::audit::age_trend(records, ages);
  rep::age_trend_table(trend).write(run / "age_trend.tsv");
  std::vector<std::string> age_labels(apf::audit::kAgeBinLabels.begin(), apf::audit::kAgeBinLabels.end());
  std::vector<rep::Series> age_series;
  for (std::size_t j = 0; j < apf::kNumTraits; ++j) {
    std::vector<double> values;
    rep::Series s{std::string(apf::kTraitNames[j]), {}};
    for (std::size_t b = 0; b < age_labels.size(); ++b) {
      values.push_back(trend.mean[b][j]);
      if (trend.count[b]) s.points.emplace_back(static_cast<double>(b), trend.mean[b][j]);
    }
    rep::write_labelled_series(age_labels, values, run / ("age_trend_" + std::string(apf::kTraitLetters[j]) + ".tsv"),
                               apf::kTraitNames[j]);
    age_series.push_back(std::move(s));
  }
  rep::Table::write_text(run / "age_trend.svg",
                         rep::svg_line_chart(age_series, "Mean trait by age bin (0 = <19 ... 5 = >60)", "age bin",
                                             "mean label"));

  const auto ex_idx = split_indices(d, f.extremes_split);
  const auto ex_records = pick(d.records, ex_idx);
  const auto hists = apf::audit::attractiveness_histograms(d, ex_idx);
  const auto extremes = apf::audit::attractiveness_extremes(ex_records, hists, f.fraction);
  rep::extremes_table(extremes).write(run / "attractiveness_extremes.tsv");
  const std::vector<std::string> bin_labels{"0.0-0.2", "0.2-0.4", "0.4-0.6", "0.6-0.8", "0.8-1.0"};
  for (std::size_t j = 0; j < apf::kNumTraits; ++j) {
    const std::string t(apf::kTraitLetters[j]);
    rep::write_labelled_series(bin_labels, extremes.top[j], run / ("attractiveness_" + t + "_top.tsv"), "share");
    rep::write_labelled_series(bin_labels, extremes.bottom[j], run / ("attractiveness_" + t + "_bottom.tsv"), "share");
    std::vector<rep::Series> s{{"top", {}}, {"bottom", {}}};
    for (std::size_t b = 0; b < apf::kHistogramBins; ++b) {
      s[0].points.emplace_back(static_cast<double>(b), extremes.top[j][b]);
      s[1].points.emplace_back(static_cast<double>(b), extremes.bottom[j][b]);
    }
    rep::Table::write_text(run / ("attractiveness_" + t + ".svg"),
                           rep::svg_line_chart(s, "Attractiveness histogram of " + std::string(apf::kTraitNames[j]) +
                                                      " extremes",
                                               "attractiveness bin", "share of frames"));
  }

  const auto ex_series = pick(d.series, ex_idx);
  const auto freq = apf::audit::emotion_frequencies(ex_records, ex_series, f.threshold, f.fraction);
  rep::emotion_frequency_table(freq).write(run / "emotion_frequencies.tsv");
  const std::vector<std::string> emotion_labels(apf::kEmotionNames.begin(), apf::kEmotionNames.end());
  for (std::size_t j = 0; j < apf::kNumTraits; ++j) {
    const std::string t(apf::kTraitLetters[j]);
    std::vector<double> top(freq.top[j].begin(), freq.top[j].end());
    std::vector<double> bottom(freq.bottom[j].begin(), freq.bottom[j].end());
    rep::write_labelled_series(emotion_labels, top, run / ("emotions_" + t + "_top.tsv"), "frames");
    rep::write_labelled_series(emotion_labels, bottom, run / ("emotions_" + t + "_bottom.tsv"), "frames");
  }

  std::ostringstream s;
  s << "group_source\t" << f.group_source << "\n";
  s << "population\t" << stats.population << "\n";
  s << "excluded_unresolved\t" << stats.excluded << "\n";
  s << "group\tcount";
  for (auto l : apf::kTraitLetters) s << "\t" << l;
  s << "\n";
  for (const auto& r : stats.rows) {
    s << r.label() << "\t" << r.count;
    for (std::size_t j = 0; j < apf::kNumTraits; ++j) s << "\t" << apf::audit::format_cell(r.stats.mean[j], r.stats.stddev[j]);
    s << "\n";
  }
  s << "videos_per_extreme\t" << extremes.per_extreme << "\n";
  s << "extremes_excluded_no_face\t" << extremes.excluded << "\n";
  s << "missing_age\t" << trend.missing_age << "\n";
  run.summary(s.str());
  run.finish();
  return 0;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckCmd {
  std::string out;
  ModalityFlags modality{"whole", "all"};
  std::uint64_t seed = 0;
  int samples = 20;
  double tolerance = 1e-4;
};

int cmd_gradcheck(GradcheckCmd& f) {
  const auto config = f.modality.resolve();
  RunDir run(f.out, "gradcheck");
  run.echo()["modality"] = apf::to_json(config);
  run.echo()["seed"] = f.seed;
  run.echo()["samples"] = f.samples;
  run.echo()["tolerance"] = f.tolerance;

  apf::report::Table t({"seed", "max_relative_error"});
  double worst = 0.0;
  for (int i = 0; i < f.samples; ++i) {
    const std::uint64_t seed = f.seed + static_cast<std::uint64_t>(i);
    const double e = apf::fusion_grad_check(config, seed);
    worst = std::max(worst, e);
    t.row({std::to_string(seed), apf::format_real(e)});
  }
  t.write(run / "gradcheck.tsv");
  std::ostringstream s;
  s << "config\t" << apf::describe(config) << "\n";
  s << "parameters\t" << apf::build_model(config, f.seed).parameter_count() << "\n";
  s << "samples\t" << f.samples << "\n";
  s << "max_relative_error\t" << apf::format_real(worst) << "\n";
  s << "tolerance\t" << apf::format_real(f.tolerance) << "\n";
  s << "status\t" << (worst < f.tolerance ? "ok" : "FAILED") << "\n";
  run.summary(s.str());
  run.finish();
  if (!(worst < f.tolerance))
    throw apf::NumericError("gradient check failed: max relative error " + apf::format_real(worst) +
                            " is not below " + apf::format_real(f.tolerance));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"apf: multimodal late-fusion personality regression toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "apf 1.0.0");

  SynthFlags synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic dataset with known structure");
  c_synth->add_option("--out", synth.out, "Output directory (dataset and run files)")->required();
  c_synth->add_option("--videos", synth.config.n_videos, "Number of videos")->capture_default_str()->check(CLI::PositiveNumber);
  c_synth->add_option("--frames", synth.config.frames_per_video, "Frames per video")->capture_default_str()->check(CLI::PositiveNumber);
  c_synth->add_option("--seed", synth.config.seed, "Generator seed")->capture_default_str();
  c_synth->add_option("--label-mean", synth.config.label_mean, "Mean trait label")->capture_default_str();
  c_synth->add_option("--label-std", synth.config.label_std, "Trait label standard deviation")->capture_default_str();
  c_synth->add_option("--female-share", synth.config.gender_proportion_female, "Share of female subjects")->capture_default_str();
  c_synth->add_option("--ethnicity-shares", synth.ethnicity_shares,
                      "Shares of african_american,asian,caucasian (comma-separated)")
      ->capture_default_str();
  c_synth->add_option("--bias", synth.bias, "Label offset for a group, e.g. female:O:+0.05 (repeatable)");
  c_synth->add_option("--signal", synth.config.signal_strength, "Coupling of features to labels in [0,1]")->capture_default_str();
  c_synth->add_option("--noise", synth.config.noise_std, "Embedding noise standard deviation")->capture_default_str();
  c_synth->add_option("--face-miss-rate", synth.config.face_miss_rate, "Probability a frame has no detected face")->capture_default_str();

  TrainCmd train;
  auto* c_train = app.add_subcommand("train", "Train a fusion model with the two-stage schedule");
  c_train->add_option("--out", train.out, "Run directory")->required();
  c_train->add_option("--seed", train.seed, "Initialization and shuffling seed")->capture_default_str();
  train.data.add(c_train);
  train.modality.add(c_train);
  train.train.add(c_train);

  PredictCmd predict;
  auto* c_predict = app.add_subcommand("predict", "Predict video-level traits with a trained model");
  c_predict->add_option("--out", predict.out, "Run directory")->required();
  c_predict->add_option("--model", predict.model, "Model checkpoint (model.apfm)")->required();
  c_predict->add_option("--split", predict.split, "Split to predict: train, validation, test")->capture_default_str();
  predict.data.add(c_predict);

  EvaluateCmd evaluate;
  auto* c_eval = app.add_subcommand("evaluate", "Score predictions, the mean baseline, and residual improvement");
  c_eval->add_option("--out", evaluate.out, "Run directory")->required();
  evaluate.data.add(c_eval);
  c_eval->add_option("--predictions", evaluate.predictions, "Predictions TSV to score");
  c_eval->add_option("--reference", evaluate.reference,
                     "Reference predictions TSV for residual curves (default: the mean baseline when --baseline)");
  c_eval->add_flag("--baseline", evaluate.baseline, "Also score the train-mean baseline on the split");
  c_eval->add_option("--split", evaluate.split, "Split the baseline is scored on")->capture_default_str();
  c_eval->add_option("--grid-step", evaluate.grid_step, "Residual-curve threshold step")->capture_default_str();
  c_eval->add_option("--top-k", evaluate.top_k, "Top improvers listed per trait")->capture_default_str();

  AblateCmd ablate;
  auto* c_ablate = app.add_subcommand("ablate", "Train and score a grid of modality configurations");
  c_ablate->add_option("--out", ablate.out, "Run directory")->required();
  ablate.data.add(c_ablate);
  c_ablate->add_option("--grid", ablate.grids, "Grid: modalities, emotion, attractiveness, audio, all (repeatable)")
      ->capture_default_str();
  c_ablate->add_option("--seed", ablate.seed, "Seed shared by every configuration")->capture_default_str();
  c_ablate->add_option("--jobs", ablate.jobs, "Configurations trained in parallel")->capture_default_str()->check(CLI::PositiveNumber);
  ablate.train.add(c_ablate);

  AuditCmd audit;
  auto* c_audit = app.add_subcommand("audit", "Observed-subject bias reports over ground-truth labels");
  c_audit->add_option("--out", audit.out, "Run directory")->required();
  audit.data.add(c_audit);
  c_audit->add_option("--group-source", audit.group_source, "Group labels from: metadata, predicted")->capture_default_str();
  c_audit->add_option("--split", audit.split, "Split for group and age reports: all, train, validation, test")
      ->capture_default_str();
  c_audit->add_option("--extremes-split", audit.extremes_split, "Split for the extremes reports")->capture_default_str();
  c_audit->add_option("--threshold", audit.threshold, "Emotion probability threshold")->capture_default_str();
  c_audit->add_option("--fraction", audit.fraction, "Share of videos in each extreme, in (0, 0.5]")->capture_default_str();

  GradcheckCmd gradcheck;
  auto* c_grad = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  c_grad->add_option("--out", gradcheck.out, "Run directory")->required();
  c_grad->add_option("--seed", gradcheck.seed, "First seed")->capture_default_str();
  c_grad->add_option("--samples", gradcheck.samples, "Number of seeds checked")->capture_default_str()->check(CLI::PositiveNumber);
  c_grad->add_option("--tolerance", gradcheck.tolerance, "Maximum allowed relative error")->capture_default_str();
  gradcheck.modality.add(c_grad);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : apf::exit_code(apf::ErrorKind::usage);
  }

  try {
    if (*c_synth) return cmd_synth(synth);
    if (*c_train) return cmd_train(train);
    if (*c_predict) return cmd_predict(predict);
    if (*c_eval) return cmd_evaluate(evaluate);
    if (*c_ablate) return cmd_ablate(ablate);
    if (*c_audit) return cmd_audit(audit);
    if (*c_grad) return cmd_gradcheck(gradcheck);
  } catch (const apf::Error& e) {
    std::cerr << "apf: error: " << e.what() << "\n";
    return apf::exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "apf: error: " << e.what() << "\n";
    return apf::exit_code(apf::ErrorKind::io);
  } catch (const std::exception& e) {
    std::cerr << "apf: internal error: " << e.what() << "\n";
    return 1;
  }
  return apf::exit_code(apf::ErrorKind::usage);
}
