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

// Synthetic domain-shift benchmark with known ground truth.
//
// Class prototypes are random unit vectors in the teacher space. Text rows
// and source frames are noisy copies of their prototype. A target frame
// starts as a source-style frame x and is mapped to
//
//   normalize((1 - shift) * x + shift * (Q x + b))
//
// with Q a fixed random rotation and b a fixed domain bias, so shift = 0 means
// no domain gap. The student space is a fixed random linear map of the
// teacher space plus independent noise.

#ifndef DALLV_SYNTH_HPP_
#define DALLV_SYNTH_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dallv/clipspace.hpp"
#include "dallv/dataio.hpp"
#include "dallv/dataset.hpp"

namespace dallv {

struct SynthConfig {
  std::size_t classes = 8;
  std::size_t teacher_dim = 64;
  std::size_t student_dim = 48;
  std::size_t videos_per_class = 40;  // per domain
  std::size_t frames_per_video = 8;
  std::size_t templates = 16;         // at most kActionPromptTemplates.size()
  double sigma_class = 0.25;          // per-coordinate frame noise
  double shift = 0.5;                 // domain-shift strength in [0, 1]
  double bias_magnitude = 1.0;        // norm of the domain bias b
  double sigma_text = 0.2;            // per-coordinate text-row noise
  double sigma_cross = 0.02;          // per-coordinate student-space noise
  double logit_temperature = kDefaultTauSim;
  std::uint64_t seed = 0;

  // Throws kInvalidConfig.
  void validate() const;
};

// A generated benchmark held in memory. Payloads are already rounded to f32
// so the in-memory values equal what the files contain.
struct SynthBenchmark {
  SynthConfig config;
  std::vector<std::string> class_names;
  TextBank teacher_bank;
  TextBank student_bank;
  EmbeddingDataset source_teacher;
  EmbeddingDataset target_teacher;  // labels withheld (-1)
  EmbeddingDataset source_student;
  EmbeddingDataset target_student;  // labels withheld (-1)
  std::vector<LabelRecord> target_labels;  // sealed, evaluation only
};

SynthBenchmark generate_benchmark(const SynthConfig& config);

// Writes every file plus manifest.json into `dir` (created if needed) and
// returns the manifest with base_dir = dir.
BenchmarkManifest write_benchmark(const SynthBenchmark& bench,
                                  const std::filesystem::path& dir);

}  // namespace dallv

#endif  // DALLV_SYNTH_HPP_
