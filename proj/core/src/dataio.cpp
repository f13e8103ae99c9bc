/* Copyright 2026 The dallv Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "dallv/dataio.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "binary_io.hpp"
#include "csv.hpp"
#include "dallv/error.hpp"
#include "json.hpp"

namespace dallv {

namespace {

constexpr std::string_view kEmbeddingMagic = "EMB1";
constexpr std::string_view kTextBankMagic = "TXB1";
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::string_view kManifestFormat = "dallv-benchmark";
constexpr int kManifestVersion = 1;

std::uint32_t to_u32(std::size_t v, std::string_view what) {
  if (v > 0xffffffffULL) {
    throw Error(ErrorCode::kInvalidConfig, std::string(what) + " exceeds u32");
  }
  return static_cast<std::uint32_t>(v);
}

void put_f32_payload(detail::ByteWriter& w, std::span<const double> values) {
  for (double v : values) w.put_f32(static_cast<float>(v));
}

}  // namespace

std::string_view space_name(Space s) noexcept {
  return s == Space::kTeacher ? "teacher" : "student";
}

void EmbeddingDataset::validate() const {
  std::unordered_set<std::string> seen;
  for (const Video& v : videos) {
    if (v.frame_count() == 0) {
      throw Error(ErrorCode::kZeroFrames, "video " + v.id + " has no frames");
    }
    if (v.frames.cols() != dim) {
      throw Error(ErrorCode::kDimMismatch, "video " + v.id + " has frames of dim " +
                                               std::to_string(v.frames.cols()) +
                                               ", dataset dim " + std::to_string(dim));
    }
    if (v.label < kUnlabeled) {
      throw Error(ErrorCode::kLabelOutOfRange, "video " + v.id + " has label " +
                                                   std::to_string(v.label));
    }
    if (!seen.insert(v.id).second) {
      throw Error(ErrorCode::kDuplicateVideoId, "duplicate video id " + v.id);
    }
    require_finite(v.frames.data(), "video " + v.id);
  }
}

std::vector<std::string> EmbeddingDataset::ids() const {
  std::vector<std::string> out;
  out.reserve(videos.size());
  for (const Video& v : videos) out.push_back(v.id);
  return out;
}

std::string encode_embeddings(const EmbeddingDataset& dataset) {
  detail::ByteWriter w;
  w.put_bytes(kEmbeddingMagic);
  w.put_u32(kFormatVersion);
  w.put_u32(to_u32(dataset.dim, "embedding dim"));
  w.put_u32(to_u32(dataset.size(), "video count"));
  for (const Video& v : dataset.videos) {
    w.put_string16(v.id);
    w.put_i32(v.label);
    w.put_u32(to_u32(v.frame_count(), "frame count"));
    put_f32_payload(w, v.frames.data());
  }
  return w.bytes();
}

EmbeddingDataset decode_embeddings(std::string bytes, std::string_view source,
                                   Space space) {
  detail::ByteReader r(std::move(bytes), std::string(source));
  r.expect_header(kEmbeddingMagic, kFormatVersion);
  EmbeddingDataset ds;
  ds.space = space;
  ds.dim = r.get_u32();
  const std::uint32_t n = r.get_u32();
  std::unordered_set<std::string> seen;
  for (std::uint32_t i = 0; i < n; ++i) {
    Video v;
    v.id = r.get_string16();
    v.label = r.get_i32();
    const std::uint32_t k = r.get_u32();
    if (k == 0) {
      throw Error(ErrorCode::kZeroFrames, r.source() + ": video " + v.id + " has K=0");
    }
    if (!seen.insert(v.id).second) {
      throw Error(ErrorCode::kDuplicateVideoId,
                  r.source() + ": duplicate video id " + v.id);
    }
    v.frames = Matrix(k, ds.dim);
    for (double& x : v.frames.data()) {
      x = static_cast<double>(r.get_f32());
    }
    ds.videos.push_back(std::move(v));
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kInvalidConfig, r.source() + ": " +
                                               std::to_string(r.remaining()) +
                                               " trailing bytes");
  }
  ds.validate();
  return ds;
}

void save_embeddings(const EmbeddingDataset& dataset,
                     const std::filesystem::path& path) {
  dataset.validate();
  detail::write_file_atomic(path, encode_embeddings(dataset));
}

EmbeddingDataset load_embeddings(const std::filesystem::path& path, Space space) {
  return decode_embeddings(detail::read_file(path), path.string(), space);
}

std::string encode_text_bank(const TextBank& bank) {
  detail::ByteWriter w;
  w.put_bytes(kTextBankMagic);
  w.put_u32(kFormatVersion);
  w.put_u32(to_u32(bank.dim, "text dim"));
  w.put_u32(to_u32(bank.classes(), "class count"));
  w.put_u32(to_u32(bank.template_count(), "template count"));
  w.put_f64(bank.logit_temperature);
  for (const std::string& name : bank.class_names) w.put_string16(name);
  for (const std::string& t : bank.templates) w.put_string16(t);
  put_f32_payload(w, bank.embeddings);
  return w.bytes();
}

void save_text_bank(const TextBank& bank, const std::filesystem::path& path) {
  bank.validate();
  detail::write_file_atomic(path, encode_text_bank(bank));
}

TextBank load_text_bank(const std::filesystem::path& path,
                        std::optional<std::size_t> expected_classes) {
  detail::ByteReader r(detail::read_file(path), path.string());
  r.expect_header(kTextBankMagic, kFormatVersion);
  TextBank bank;
  bank.dim = r.get_u32();
  const std::uint32_t classes = r.get_u32();
  const std::uint32_t templates = r.get_u32();
  bank.logit_temperature = r.get_f64();
  if (expected_classes && *expected_classes != classes) {
    throw Error(ErrorCode::kClassCountMismatch,
                path.string() + ": " + std::to_string(classes) +
                    " classes, expected " + std::to_string(*expected_classes));
  }
  for (std::uint32_t c = 0; c < classes; ++c) bank.class_names.push_back(r.get_string16());
  for (std::uint32_t t = 0; t < templates; ++t) bank.templates.push_back(r.get_string16());
  bank.embeddings.resize(static_cast<std::size_t>(classes) * templates * bank.dim);
  for (double& x : bank.embeddings) x = static_cast<double>(r.get_f32());
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kInvalidConfig, path.string() + ": " +
                                               std::to_string(r.remaining()) +
                                               " trailing bytes");
  }
  bank.validate();
  return bank;
}

AlignedPair align_by_id(const EmbeddingDataset& a, const EmbeddingDataset& b) {
  std::map<std::string, const Video*> in_a;
  std::map<std::string, const Video*> in_b;
  for (const Video& v : a.videos) in_a.emplace(v.id, &v);
  for (const Video& v : b.videos) in_b.emplace(v.id, &v);

  std::vector<std::string> only_a;
  std::vector<std::string> only_b;
  for (const auto& [id, v] : in_a) {
    if (!in_b.contains(id)) only_a.push_back(id);
  }
  for (const auto& [id, v] : in_b) {
    if (!in_a.contains(id)) only_b.push_back(id);
  }
  if (!only_a.empty() || !only_b.empty()) {
    std::ostringstream os;
    os << "video id sets differ; only in first: [";
    for (std::size_t i = 0; i < only_a.size(); ++i) os << (i ? ", " : "") << only_a[i];
    os << "]; only in second: [";
    for (std::size_t i = 0; i < only_b.size(); ++i) os << (i ? ", " : "") << only_b[i];
    os << "]";
    throw Error(ErrorCode::kIdSetMismatch, os.str());
  }

  AlignedPair out;
  out.first.dim = a.dim;
  out.first.space = a.space;
  out.second.dim = b.dim;
  out.second.space = b.space;
  for (const auto& [id, v] : in_a) {
    out.first.videos.push_back(*v);
    out.second.videos.push_back(*in_b.at(id));
  }
  return out;
}

void write_label_sidecar(const std::vector<LabelRecord>& labels,
                         const std::filesystem::path& path) {
  std::ostringstream os;
  os << "video_id,label\n";
  for (const LabelRecord& r : labels) {
    os << detail::csv_field(r.video_id) << ',' << r.label << '\n';
  }
  detail::write_file_atomic(path, os.str());
}

std::vector<LabelRecord> read_label_sidecar(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kMissingLabels,
                "label sidecar not found: " + path.string());
  }
  const detail::CsvTable table = detail::read_csv(path, {"video_id", "label"});
  std::vector<LabelRecord> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    const long long label = detail::parse_int(row[1], path.string());
    if (label < 0 || label > 0x7fffffff) {
      throw Error(ErrorCode::kLabelOutOfRange,
                  path.string() + ": label " + row[1] + " for " + row[0]);
    }
    out.push_back(LabelRecord{row[0], static_cast<std::int32_t>(label)});
  }
  return out;
}

EmbeddingDataset attach_labels(const EmbeddingDataset& dataset,
                               const std::vector<LabelRecord>& labels) {
  std::map<std::string, std::int32_t> by_id;
  for (const LabelRecord& r : labels) by_id[r.video_id] = r.label;
  EmbeddingDataset out = dataset;
  for (Video& v : out.videos) {
    const auto it = by_id.find(v.id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::kMissingLabels, "no label for video " + v.id);
    }
    v.label = it->second;
  }
  return out;
}

std::filesystem::path BenchmarkManifest::resolve(
    const std::filesystem::path& p) const {
  return p.is_absolute() ? p : base_dir / p;
}

namespace {

nlohmann::json space_to_json(const SpaceFiles& f) {
  return {{"text_bank", f.text_bank.generic_string()},
          {"source", f.source.generic_string()},
          {"target", f.target.generic_string()}};
}

SpaceFiles space_from_json(const nlohmann::json& j, std::string_view name) {
  if (!j.is_object()) {
    throw Error(ErrorCode::kManifestInvalid,
                "spaces." + std::string(name) + " must be an object");
  }
  SpaceFiles f;
  f.text_bank = j.at("text_bank").get<std::string>();
  f.source = j.at("source").get<std::string>();
  f.target = j.at("target").get<std::string>();
  return f;
}

}  // namespace

void save_manifest(const BenchmarkManifest& manifest,
                   const std::filesystem::path& path) {
  nlohmann::json j;
  j["format"] = kManifestFormat;
  j["version"] = kManifestVersion;
  j["class_names"] = manifest.class_names;
  j["templates"] = manifest.templates;
  j["logit_temperature"] = manifest.logit_temperature;
  j["spaces"] = {{"teacher", space_to_json(manifest.teacher)},
                 {"student", space_to_json(manifest.student)}};
  if (manifest.target_labels) {
    j["target_labels"] = manifest.target_labels->generic_string();
  }
  detail::write_file_atomic(path, j.dump(2) + "\n");
}

BenchmarkManifest load_manifest(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  BenchmarkManifest m;
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != kManifestFormat ||
        j.at("version").get<int>() != kManifestVersion) {
      throw Error(ErrorCode::kManifestInvalid,
                  path.string() + ": unsupported manifest format/version");
    }
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    m.templates = j.at("templates").get<std::vector<std::string>>();
    m.logit_temperature = j.at("logit_temperature").get<double>();
    m.teacher = space_from_json(j.at("spaces").at("teacher"), "teacher");
    m.student = space_from_json(j.at("spaces").at("student"), "student");
    if (j.contains("target_labels")) {
      m.target_labels = j.at("target_labels").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kManifestInvalid, path.string() + ": " + e.what());
  }
  if (m.class_names.size() < 2) {
    throw Error(ErrorCode::kManifestInvalid, path.string() + ": fewer than 2 classes");
  }
  if (!(m.logit_temperature > 0.0)) {
    throw Error(ErrorCode::kManifestInvalid,
                path.string() + ": logit_temperature must be positive");
  }
  m.base_dir = path.parent_path();
  return m;
}

void validate_benchmark(const BenchmarkManifest& manifest) {
  const std::size_t classes = manifest.class_names.size();
  for (Space space : {Space::kTeacher, Space::kStudent}) {
    const SpaceFiles& f = manifest.files(space);
    const TextBank bank = load_text_bank(manifest.resolve(f.text_bank), classes);
    if (bank.class_names != manifest.class_names) {
      throw Error(ErrorCode::kClassCountMismatch,
                  "class names in " + f.text_bank.string() +
                      " differ from the manifest");
    }
    for (const auto& file : {f.source, f.target}) {
      const EmbeddingDataset ds = load_embeddings(manifest.resolve(file), space);
      if (!ds.empty() && ds.dim != bank.dim) {
        throw Error(ErrorCode::kDimMismatch,
                    file.string() + " has dim " + std::to_string(ds.dim) +
                        ", text bank has " + std::to_string(bank.dim));
      }
      for (const Video& v : ds.videos) {
        if (v.label >= static_cast<std::int32_t>(classes)) {
          throw Error(ErrorCode::kClassCountMismatch,
                      file.string() + ": label " + std::to_string(v.label) +
                          " for " + v.id + " with " + std::to_string(classes) +
                          " classes");
        }
      }
    }
  }
  for (const auto& pick : {&SpaceFiles::source, &SpaceFiles::target}) {
    align_by_id(load_embeddings(manifest.resolve(manifest.teacher.*pick)),
                load_embeddings(manifest.resolve(manifest.student.*pick)));
  }
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string file_sha256(const std::filesystem::path& path) {
  return sha256_hex(detail::read_file(path));
}

std::string dataset_fingerprint(const EmbeddingDataset& dataset) {
  detail::ByteWriter w;
  w.put_u32(to_u32(dataset.dim, "dim"));
  for (const Video& v : dataset.videos) {
    w.put_string16(v.id);
    w.put_i32(v.label);
    w.put_u32(to_u32(v.frame_count(), "frames"));
    for (double x : v.frames.data()) w.put_f64(x);
  }
  return sha256_hex(w.bytes());
}

std::string text_bank_fingerprint(const TextBank& bank) {
  detail::ByteWriter w;
  w.put_u32(to_u32(bank.dim, "dim"));
  w.put_f64(bank.logit_temperature);
  for (const std::string& n : bank.class_names) w.put_string16(n);
  for (const std::string& t : bank.templates) w.put_string16(t);
  for (double x : bank.embeddings) w.put_f64(x);
  return sha256_hex(w.bytes());
}

}  // namespace dallv
