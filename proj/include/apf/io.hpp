// Copyright 2026 The apfusion Authors
// SPDX-License-Identifier: Apache-2.0

// On-disk dataset layout (format_version 1):
//
//   <dir>/manifest.jsonl            header line, then one line per video
//   <dir>/videos/<id>.attr.jsonl    header line, then one line per frame
//   <dir>/videos/<id>.emb           binary embeddings
//
// Manifest header:
//   {"format":"apfusion-manifest","format_version":1,"split_ratio":[3,1,1],"videos":N}
// Manifest video line:
//   {"video_id":..,"split":"train","labels":{"O":..,"C":..,"E":..,"A":..,"N":..},
//    "gender":"female","ethnicity":"caucasian","frame_count":T,
//    "attributes":"videos/<id>.attr.jsonl","embeddings":"videos/<id>.emb",
//    "visual_frames":[...]}
// Attribute frame line (no-face frames carry only the first two keys):
//   {"frame_index":i,"face_detected":true,"emotion_probs":[7],"attractiveness":x,
//    "age":y,"gender_probs":[2],"ethnicity_probs":[3]}
//
// Embedding file: 16-byte header of little-endian uint32 words
// (magic 0x45465041 = "APFE", version, dim, count) followed by count rows of
// dim little-endian float32: audio_whole, audio_first_half, audio_second_half,
// then one visual row per entry of the manifest's visual_frames, in order.

#pragma once

#include <algorithm>
#include <charconv>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "apf/core_types.hpp"
#include "apf/error.hpp"
#include "apf/rng.hpp"

namespace apf {

inline constexpr int kFormatVersion = 1;
inline constexpr std::uint32_t kEmbeddingMagic = 0x45465041;  // "APFE" read little-endian

namespace fs = std::filesystem;

/// Records, per-frame attributes and embeddings, aligned by index.
struct Dataset {
  std::vector<VideoRecord> records;
  std::vector<FrameAttributeSeries> series;
  std::vector<EmbeddingBundle> embeddings;
  std::array<int, 3> split_ratio{3, 1, 1};

  std::size_t size() const { return records.size(); }

  std::vector<std::size_t> indices(Split split) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < records.size(); ++i)
      if (records[i].split == split) out.push_back(i);
    return out;
  }

  std::vector<VideoRecord> records_in(Split split) const {
    std::vector<VideoRecord> out;
    for (const auto& r : records)
      if (r.split == split) out.push_back(r);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Little-endian helpers

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v & 0xffffffffULL));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

inline std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw IoError("unexpected end of binary stream");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint64_t get_u64(std::istream& in) {
  const std::uint64_t lo = get_u32(in);
  const std::uint64_t hi = get_u32(in);
  return lo | (hi << 32);
}

inline void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
inline float get_f32(std::istream& in) { return std::bit_cast<float>(get_u32(in)); }
inline void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

inline std::ofstream open_out(const fs::path& path, bool binary = false) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

inline std::ifstream open_in(const fs::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

// Locates schema errors as file:line: video: field.
struct Where {
  std::string file;
  std::size_t line = 0;
  std::string video_id;

  [[noreturn]] void fail(std::string_view field, std::string_view message) const {
    std::string s = file + ":" + std::to_string(line);
    if (!video_id.empty()) s += ": video " + video_id;
    s += ": field '" + std::string(field) + "': " + std::string(message);
    throw SchemaError(s);
  }
};

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key, const Where& where) {
  auto it = obj.find(key);
  if (it == obj.end()) where.fail(key, "missing");
  return *it;
}

inline double require_number(const nlohmann::json& obj, const char* key, const Where& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_number()) where.fail(key, "expected a number");
  return v.get<double>();
}

template <std::size_t N>
std::array<double, N> require_array(const nlohmann::json& obj, const char* key, const Where& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_array() || v.size() != N) where.fail(key, "expected an array of " + std::to_string(N) + " numbers");
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!v[i].is_number()) where.fail(key, "expected numbers");
    out[i] = v[i].get<double>();
  }
  return out;
}

inline nlohmann::json parse_line(const std::string& text, const Where& where) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    where.fail("<line>", std::string("malformed JSON: ") + e.what());
  }
}

inline void check_header(const nlohmann::json& header, std::string_view format, const Where& where) {
  if (!header.is_object()) where.fail("<header>", "expected an object");
  const auto& f = require(header, "format", where);
  if (!f.is_string() || f.get<std::string>() != format) where.fail("format", "expected '" + std::string(format) + "'");
  const auto& v = require(header, "format_version", where);
  if (!v.is_number_integer() || v.get<int>() != kFormatVersion)
    where.fail("format_version", "unsupported version (expected " + std::to_string(kFormatVersion) + ")");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Config serialization

inline nlohmann::ordered_json to_json(const ModalityConfig& c) {
  nlohmann::ordered_json j;
  j["audio"] = std::string(to_string(c.audio));
  auto attrs = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < kNumAttributes; ++i)
    if (c.attributes[i]) attrs.push_back(std::string(kAttributeNames[i]));
  j["attributes"] = attrs;
  j["emotion_consensus"] = std::string(to_string(c.emotion_consensus));
  j["attractiveness_consensus"] = std::string(to_string(c.attractiveness_consensus));
  j["m_train"] = c.m_train;
  j["m_test"] = c.m_test;
  return j;
}

template <class Json>
ModalityConfig modality_config_from_json(const Json& j) {
  ModalityConfig c;
  try {
    c.audio = parse_audio_slice(j.at("audio").template get<std::string>());
    for (const auto& a : j.at("attributes")) c.with(parse_attribute(a.template get<std::string>()));
    c.emotion_consensus = parse_consensus_mode(j.at("emotion_consensus").template get<std::string>());
    c.attractiveness_consensus = parse_consensus_mode(j.at("attractiveness_consensus").template get<std::string>());
    c.m_train = j.at("m_train").template get<int>();
    c.m_test = j.at("m_test").template get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("modality config: ") + e.what());
  }
  validate_config(c);
  return c;
}

inline nlohmann::ordered_json to_json(const TraitVector& v) {
  nlohmann::ordered_json j;
  for (std::size_t i = 0; i < kNumTraits; ++i) j[std::string(kTraitLetters[i])] = v.values[i];
  return j;
}

// ---------------------------------------------------------------------------
// Attribute series

inline void write_series(const FrameAttributeSeries& s, const fs::path& path) {
  auto out = detail::open_out(path);
  nlohmann::ordered_json header;
  header["format"] = "apfusion-attributes";
  header["format_version"] = kFormatVersion;
  header["video_id"] = s.video_id;
  header["frame_count"] = s.frame_count;
  out << header.dump() << '\n';
  for (const auto& r : s.records) {
    nlohmann::ordered_json j;
    j["frame_index"] = r.frame_index;
    j["face_detected"] = r.face_detected;
    if (r.face_detected) {
      j["emotion_probs"] = r.emotion_probs;
      j["attractiveness"] = r.attractiveness;
      j["age"] = r.age;
      j["gender_probs"] = r.gender_probs;
      j["ethnicity_probs"] = r.ethnicity_probs;
    }
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

inline FrameAttributeSeries read_series(const fs::path& path) {
  auto in = detail::open_in(path);
  detail::Where where{path.string(), 0, {}};
  FrameAttributeSeries s;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++where.line;
    if (line.empty()) continue;
    const auto j = detail::parse_line(line, where);
    if (!have_header) {
      detail::check_header(j, "apfusion-attributes", where);
      const auto& id = detail::require(j, "video_id", where);
      if (!id.is_string()) where.fail("video_id", "expected a string");
      s.video_id = id.get<std::string>();
      where.video_id = s.video_id;
      const auto& fc = detail::require(j, "frame_count", where);
      if (!fc.is_number_unsigned() || fc.get<std::uint64_t>() == 0) where.fail("frame_count", "expected a positive integer");
      s.frame_count = fc.get<std::uint32_t>();
      have_header = true;
      continue;
    }
    FrameAttributeRecord r;
    const auto& idx = detail::require(j, "frame_index", where);
    if (!idx.is_number_unsigned()) where.fail("frame_index", "expected a non-negative integer");
    r.frame_index = idx.get<std::uint32_t>();
    const auto& face = detail::require(j, "face_detected", where);
    if (!face.is_boolean()) where.fail("face_detected", "expected a boolean");
    r.face_detected = face.get<bool>();
    if (r.face_detected) {
      r.emotion_probs = detail::require_array<kNumEmotions>(j, "emotion_probs", where);
      r.attractiveness = detail::require_number(j, "attractiveness", where);
      r.age = detail::require_number(j, "age", where);
      r.gender_probs = detail::require_array<kNumGenders>(j, "gender_probs", where);
      r.ethnicity_probs = detail::require_array<kNumEthnicities>(j, "ethnicity_probs", where);
    }
    try {
      validate_frame_record(r);
    } catch (const SchemaError& e) {
      where.fail("frame " + std::to_string(r.frame_index), e.what());
    }
    if (!s.records.empty() && r.frame_index <= s.records.back().frame_index)
      where.fail("frame_index", "not strictly increasing");
    if (r.frame_index >= s.frame_count) where.fail("frame_index", "not below frame_count");
    s.records.push_back(r);
  }
  if (!have_header) throw SchemaError(path.string() + ": empty attribute file");
  return s;
}

// ---------------------------------------------------------------------------
// Embeddings

inline void write_embeddings(const EmbeddingBundle& b, const fs::path& path) {
  auto out = detail::open_out(path, true);
  detail::put_u32(out, kEmbeddingMagic);
  detail::put_u32(out, static_cast<std::uint32_t>(kFormatVersion));
  detail::put_u32(out, static_cast<std::uint32_t>(kEmbeddingDim));
  detail::put_u32(out, static_cast<std::uint32_t>(3 + b.visual.size()));
  auto row = [&](const Embedding& e) {
    for (float x : e) detail::put_f32(out, x);
  };
  row(b.audio_whole);
  row(b.audio_first_half);
  row(b.audio_second_half);
  for (const auto& [idx, e] : b.visual) row(e);
  if (!out) throw IoError("write failed: " + path.string());
}

inline EmbeddingBundle read_embeddings(const fs::path& path, const std::string& video_id,
                                       std::span<const std::uint32_t> visual_frames) {
  auto in = detail::open_in(path, true);
  try {
    if (detail::get_u32(in) != kEmbeddingMagic) throw SchemaError(path.string() + ": bad embedding magic");
    if (detail::get_u32(in) != static_cast<std::uint32_t>(kFormatVersion))
      throw SchemaError(path.string() + ": unsupported embedding format_version");
    if (detail::get_u32(in) != kEmbeddingDim) throw SchemaError(path.string() + ": embedding dim is not 128");
    const std::uint32_t count = detail::get_u32(in);
    if (count != 3 + visual_frames.size())
      throw SchemaError(path.string() + ": row count " + std::to_string(count) + " does not match 3 + " +
                        std::to_string(visual_frames.size()) + " visual_frames");
    EmbeddingBundle b;
    b.video_id = video_id;
    auto row = [&](Embedding& e) {
      for (auto& x : e) x = detail::get_f32(in);
    };
    row(b.audio_whole);
    row(b.audio_first_half);
    row(b.audio_second_half);
    for (std::uint32_t idx : visual_frames) {
      Embedding e;
      row(e);
      if (!b.visual.emplace(idx, e).second)
        throw SchemaError(path.string() + ": duplicate visual frame " + std::to_string(idx));
    }
    if (in.peek() != std::char_traits<char>::eof()) throw SchemaError(path.string() + ": trailing bytes");
    return b;
  } catch (const IoError&) {
    throw SchemaError(path.string() + ": truncated embedding file");
  }
}

// ---------------------------------------------------------------------------
// Manifest

inline std::string series_relpath(const std::string& id) { return "videos/" + id + ".attr.jsonl"; }
inline std::string embeddings_relpath(const std::string& id) { return "videos/" + id + ".emb"; }

inline void write_dataset(const Dataset& d, const fs::path& dir) {
  if (d.series.size() != d.records.size() || d.embeddings.size() != d.records.size())
    throw SchemaError("write_dataset: records, series and embeddings are not aligned");
  fs::create_directories(dir / "videos");
  auto out = detail::open_out(dir / "manifest.jsonl");
  nlohmann::ordered_json header;
  header["format"] = "apfusion-manifest";
  header["format_version"] = kFormatVersion;
  header["split_ratio"] = d.split_ratio;
  header["videos"] = d.records.size();
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto& r = d.records[i];
    nlohmann::ordered_json j;
    j["video_id"] = r.video_id;
    if (r.split) j["split"] = std::string(to_string(*r.split));
    j["labels"] = to_json(r.labels);
    if (r.gender) j["gender"] = std::string(to_string(*r.gender));
    if (r.ethnicity) j["ethnicity"] = std::string(to_string(*r.ethnicity));
    j["frame_count"] = d.series[i].frame_count;
    j["attributes"] = series_relpath(r.video_id);
    j["embeddings"] = embeddings_relpath(r.video_id);
    auto frames = nlohmann::ordered_json::array();
    for (const auto& [idx, e] : d.embeddings[i].visual) frames.push_back(idx);
    j["visual_frames"] = frames;
    out << j.dump() << '\n';
    write_series(d.series[i], dir / series_relpath(r.video_id));
    write_embeddings(d.embeddings[i], dir / embeddings_relpath(r.video_id));
  }
  if (!out) throw IoError("write failed: " + (dir / "manifest.jsonl").string());
}

/// Loads and validates a dataset. With `invert_neuro` the N label is flipped
/// (for FI-style files that store emotional stability instead).
inline Dataset load_dataset(const fs::path& manifest_path, bool invert_neuro = false) {
  auto in = detail::open_in(manifest_path);
  const fs::path base = manifest_path.parent_path();
  detail::Where where{manifest_path.string(), 0, {}};
  Dataset d;
  std::string line;
  bool have_header = false;
  std::size_t expected = 0;
  std::vector<std::string> seen;
  while (std::getline(in, line)) {
    ++where.line;
    where.video_id.clear();
    if (line.empty()) continue;
    try {
      const auto j = detail::parse_line(line, where);
      if (!have_header) {
        detail::check_header(j, "apfusion-manifest", where);
        const auto& ratio = detail::require(j, "split_ratio", where);
        if (!ratio.is_array() || ratio.size() != 3) where.fail("split_ratio", "expected 3 integers");
        for (std::size_t k = 0; k < 3; ++k) d.split_ratio[k] = ratio[k].get<int>();
        expected = detail::require(j, "videos", where).get<std::size_t>();
        have_header = true;
        continue;
      }
      VideoRecord r;
      const auto& id = detail::require(j, "video_id", where);
      if (!id.is_string() || id.get<std::string>().empty()) where.fail("video_id", "expected a non-empty string");
      r.video_id = id.get<std::string>();
      where.video_id = r.video_id;
      if (std::find(seen.begin(), seen.end(), r.video_id) != seen.end()) where.fail("video_id", "duplicate");
      seen.push_back(r.video_id);
      try {
        if (auto it = j.find("split"); it != j.end()) r.split = parse_split(it->get<std::string>());
        if (auto it = j.find("gender"); it != j.end()) r.gender = parse_gender(it->get<std::string>());
        if (auto it = j.find("ethnicity"); it != j.end()) r.ethnicity = parse_ethnicity(it->get<std::string>());
      } catch (const SchemaError& e) {
        where.fail("split/gender/ethnicity", e.what());
      }
      const auto& labels = detail::require(j, "labels", where);
      for (std::size_t t = 0; t < kNumTraits; ++t) {
        const std::string key(kTraitLetters[t]);
        r.labels.values[t] = detail::require_number(labels, key.c_str(), where);
      }
      try {
        validate_trait_vector(r.labels);
      } catch (const SchemaError& e) {
        where.fail("labels", e.what());
      }
      if (invert_neuro) r.labels = invert_neuroticism(r.labels);

      const auto frame_count = detail::require(j, "frame_count", where).get<std::uint32_t>();
      const fs::path attr_path = base / detail::require(j, "attributes", where).get<std::string>();
      const fs::path emb_path = base / detail::require(j, "embeddings", where).get<std::string>();
      std::vector<std::uint32_t> visual_frames;
      for (const auto& f : detail::require(j, "visual_frames", where)) visual_frames.push_back(f.get<std::uint32_t>());
      if (!fs::exists(attr_path)) throw IoError("video " + r.video_id + ": missing payload " + attr_path.string());
      if (!fs::exists(emb_path)) throw IoError("video " + r.video_id + ": missing payload " + emb_path.string());

      auto series = read_series(attr_path);
      if (series.video_id != r.video_id) where.fail("attributes", "payload belongs to video " + series.video_id);
      if (series.frame_count != frame_count) where.fail("frame_count", "disagrees with attribute payload");
      auto bundle = read_embeddings(emb_path, r.video_id, visual_frames);
      try {
        validate_embeddings(bundle, frame_count);
      } catch (const SchemaError& e) {
        where.fail("embeddings", e.what());
      }
      d.records.push_back(std::move(r));
      d.series.push_back(std::move(series));
      d.embeddings.push_back(std::move(bundle));
    } catch (const nlohmann::json::exception& e) {
      where.fail("<line>", std::string("wrong value type: ") + e.what());
    }
  }
  if (!have_header) throw SchemaError(manifest_path.string() + ": empty manifest");
  if (d.records.size() != expected)
    throw SchemaError(manifest_path.string() + ": header announces " + std::to_string(expected) + " videos, found " +
                      std::to_string(d.records.size()));
  return d;
}

// ---------------------------------------------------------------------------
// Splits and the mean baseline

/// Seeded shuffle, then largest-remainder allocation of the ratio so every
/// split size is within one video of its exact share.
inline std::vector<VideoRecord> split_dataset(std::vector<VideoRecord> records, std::array<int, 3> ratio,
                                              std::uint64_t seed) {
  if (records.size() < 5) throw SchemaError("split_dataset: need at least 5 videos, got " + std::to_string(records.size()));
  const int total = ratio[0] + ratio[1] + ratio[2];
  if (ratio[0] < 0 || ratio[1] < 0 || ratio[2] < 0 || total <= 0) throw SchemaError("split_dataset: invalid ratio");

  const std::size_t n = records.size();
  std::array<std::size_t, 3> sizes{};
  std::array<std::pair<std::size_t, std::size_t>, 3> remainders{};  // (remainder numerator, split index)
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const std::size_t num = n * static_cast<std::size_t>(ratio[k]);
    sizes[k] = num / static_cast<std::size_t>(total);
    remainders[k] = {num % static_cast<std::size_t>(total), k};
    assigned += sizes[k];
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++sizes[remainders[k].second];

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span(order));
  std::size_t pos = 0;
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t c = 0; c < sizes[k]; ++c) records[order[pos++]].split = static_cast<Split>(k);
  return records;
}

/// Per-trait mean label of the given (training) records.
inline TraitVector mean_baseline_labels(std::span<const VideoRecord> train) {
  if (train.empty()) throw SchemaError("mean baseline needs a non-empty training split");
  TraitVector mean;
  for (const auto& r : train)
    for (std::size_t t = 0; t < kNumTraits; ++t) mean.values[t] += r.labels.values[t];
  for (auto& x : mean.values) x /= static_cast<double>(train.size());
  return mean;
}

// ---------------------------------------------------------------------------
// Prediction tables: "video_id\tO\tC\tE\tA\tN", values at round-trip precision.

struct Prediction {
  std::string video_id;
  TraitVector traits;
};

/// Shortest decimal text that reads back as exactly `x`.
inline std::string format_real(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general);
  return {buf, r.ptr};
}

inline void write_predictions(std::span<const Prediction> preds, const fs::path& path) {
  auto out = detail::open_out(path);
  out << "video_id";
  for (auto l : kTraitLetters) out << '\t' << l;
  out << '\n';
  for (const auto& p : preds) {
    out << p.video_id;
    for (double x : p.traits.values) out << '\t' << format_real(x);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::vector<Prediction> read_predictions(const fs::path& path) {
  auto in = detail::open_in(path);
  std::string line;
  std::size_t lineno = 0;
  std::vector<Prediction> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line != "video_id\tO\tC\tE\tA\tN")
        throw SchemaError(path.string() + ":1: expected header 'video_id<TAB>O<TAB>C<TAB>E<TAB>A<TAB>N'");
      continue;
    }
    if (line.empty()) continue;
    std::istringstream row(line);
    Prediction p;
    std::string cell;
    if (!std::getline(row, p.video_id, '\t'))
      throw SchemaError(path.string() + ":" + std::to_string(lineno) + ": missing video_id");
    for (std::size_t t = 0; t < kNumTraits; ++t) {
      if (!std::getline(row, cell, '\t'))
        throw SchemaError(path.string() + ":" + std::to_string(lineno) + ": missing trait " +
                          std::string(kTraitLetters[t]));
      try {
        std::size_t used = 0;
        p.traits.values[t] = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw SchemaError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    try {
      validate_trait_vector(p.traits);
    } catch (const SchemaError& e) {
      throw SchemaError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace apf
