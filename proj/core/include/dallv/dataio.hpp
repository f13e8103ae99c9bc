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

// On-disk formats. All integers and floats are little-endian.
//
// EMB1 (frame embeddings):
//   "EMB1" u32 version=1 u32 d u32 n_videos
//   per video: u16 id_len, id bytes (UTF-8), i32 label (-1 = unlabeled),
//              u32 K, K*d f32 (frame-major)
//
// TXB1 (text bank):
//   "TXB1" u32 version=1 u32 d u32 C u32 T f64 logit_temperature
//   per class: u16 len + UTF-8 name; per template: u16 len + UTF-8 string
//   C*T*d f32, class-major
//
// Label sidecar: CSV "video_id,label".
// Manifest: JSON, see docs/manifest.md.

#ifndef DALLV_DATAIO_HPP_
#define DALLV_DATAIO_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dallv/clipspace.hpp"
#include "dallv/dataset.hpp"

namespace dallv {

std::string encode_embeddings(const EmbeddingDataset& dataset);
EmbeddingDataset decode_embeddings(std::string bytes, std::string_view source,
                                   Space space = Space::kTeacher);

void save_embeddings(const EmbeddingDataset& dataset,
                     const std::filesystem::path& path);
// Throws kBadMagic, kBadVersion, kTruncatedFile, kDuplicateVideoId,
// kZeroFrames, kNonFiniteValue; kIo if the file cannot be read.
EmbeddingDataset load_embeddings(const std::filesystem::path& path,
                                 Space space = Space::kTeacher);

std::string encode_text_bank(const TextBank& bank);
void save_text_bank(const TextBank& bank, const std::filesystem::path& path);
// Rows must already be unit-norm within 1e-3 (kNonUnitRow otherwise).
// kClassCountMismatch if `expected_classes` is given and differs.
TextBank load_text_bank(const std::filesystem::path& path,
                        std::optional<std::size_t> expected_classes = std::nullopt);

struct AlignedPair {
  EmbeddingDataset first;
  EmbeddingDataset second;
};

// Both datasets reordered by ascending video id. Throws kIdSetMismatch
// listing the symmetric difference when the id sets differ.
AlignedPair align_by_id(const EmbeddingDataset& a, const EmbeddingDataset& b);

struct LabelRecord {
  std::string video_id;
  std::int32_t label = kUnlabeled;
};

void write_label_sidecar(const std::vector<LabelRecord>& labels,
                         const std::filesystem::path& path);
// kMissingLabels (naming the path) if the file does not exist.
std::vector<LabelRecord> read_label_sidecar(const std::filesystem::path& path);

// Copy of `dataset` with labels taken from `labels`; kMissingLabels if any
// video has no record.
EmbeddingDataset attach_labels(const EmbeddingDataset& dataset,
                               const std::vector<LabelRecord>& labels);

struct SpaceFiles {
  std::filesystem::path text_bank;
  std::filesystem::path source;
  std::filesystem::path target;
};

struct BenchmarkManifest {
  std::vector<std::string> class_names;
  std::vector<std::string> templates;
  double logit_temperature = kDefaultTauSim;
  SpaceFiles teacher;
  SpaceFiles student;
  std::optional<std::filesystem::path> target_labels;
  // Directory relative paths are resolved against; set by load_manifest.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  const SpaceFiles& files(Space s) const noexcept {
    return s == Space::kTeacher ? teacher : student;
  }
};

void save_manifest(const BenchmarkManifest& manifest,
                   const std::filesystem::path& path);
// Parses and checks the schema; kManifestInvalid on schema errors.
BenchmarkManifest load_manifest(const std::filesystem::path& path);

// Loads every referenced file and checks class counts and id agreement
// between the two spaces.
void validate_benchmark(const BenchmarkManifest& manifest);

// Hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string file_sha256(const std::filesystem::path& path);
std::string dataset_fingerprint(const EmbeddingDataset& dataset);
std::string text_bank_fingerprint(const TextBank& bank);

}  // namespace dallv

#endif  // DALLV_DATAIO_HPP_
