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

#include "dallv/synth.hpp"

#include <cmath>
#include <cstdio>
#include <utility>

#include "dallv/error.hpp"
#include "dallv/random.hpp"

namespace dallv {

namespace {

std::uint64_t video_key(std::size_t cls, std::size_t index) {
  return (static_cast<std::uint64_t>(cls) << 32) | static_cast<std::uint64_t>(index);
}

DenseVector gaussian(CounterRng& rng, std::size_t n, double sigma) {
  DenseVector v(n);
  for (double& x : v) x = sigma * rng.normal();
  return v;
}

// Unit vector with every entry rounded to f32.
DenseVector unit_f32(std::span<const double> v) {
  DenseVector u = l2_normalize(v);
  for (double& x : u) x = static_cast<double>(static_cast<float>(x));
  return u;
}

Matrix random_rotation(std::uint64_t seed, std::size_t d) {
  CounterRng rng = CounterRng::stream(seed, "rotation");
  Matrix q(d, d);
  for (std::size_t r = 0; r < d; ++r) {
    DenseVector v = gaussian(rng, d, 1.0);
    // Modified Gram-Schmidt against the rows accepted so far.
    for (std::size_t p = 0; p < r; ++p) {
      const double proj = dot(v, q.row(p));
      for (std::size_t i = 0; i < d; ++i) v[i] -= proj * q(p, i);
    }
    const DenseVector u = l2_normalize(v);
    std::copy(u.begin(), u.end(), q.row(r).begin());
  }
  return q;
}

Matrix cross_space_map(std::uint64_t seed, std::size_t rows, std::size_t cols) {
  CounterRng rng = CounterRng::stream(seed, "cross-map");
  Matrix m(rows, cols);
  const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
  for (double& x : m.data()) x = scale * rng.normal();
  return m;
}

DenseVector add(std::span<const double> a, std::span<const double> b) {
  DenseVector out(a.begin(), a.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

// Student-space image of a teacher-space unit vector.
DenseVector to_student(const Matrix& map, std::span<const double> teacher,
                       CounterRng& rng, double sigma) {
  DenseVector s = map.multiply(teacher);
  for (double& x : s) x += sigma * rng.normal();
  return unit_f32(s);
}

std::string numbered(const char* prefix, std::size_t i, int width) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, i);
  return buf;
}

TextBank make_bank(std::size_t dim, const std::vector<std::string>& classes,
                   std::size_t templates, double tau) {
  TextBank bank;
  bank.dim = dim;
  bank.class_names = classes;
  for (std::size_t t = 0; t < templates; ++t) {
    bank.templates.emplace_back(kActionPromptTemplates[t]);
  }
  bank.embeddings.assign(classes.size() * templates * dim, 0.0);
  bank.logit_temperature = tau;
  return bank;
}

}  // namespace

void SynthConfig::validate() const {
  auto fail = [](const std::string& why) {
    throw Error(ErrorCode::kInvalidConfig, "synth: " + why);
  };
  if (classes < 2) fail("classes must be at least 2");
  if (teacher_dim < 4 || student_dim < 4) fail("embedding dims must be at least 4");
  if (videos_per_class < 1) fail("videos_per_class must be at least 1");
  if (frames_per_video < 1) fail("frames_per_video must be at least 1");
  if (templates < 1 || templates > kActionPromptTemplates.size()) {
    fail("templates must be in [1, " + std::to_string(kActionPromptTemplates.size()) + "]");
  }
  for (double s : {sigma_class, sigma_text, sigma_cross, bias_magnitude}) {
    if (!(s >= 0.0) || !std::isfinite(s)) fail("noise and bias scales must be >= 0");
  }
  if (!(shift >= 0.0 && shift <= 1.0)) fail("shift must be in [0, 1]");
  if (!(logit_temperature > 0.0)) fail("logit_temperature must be positive");
}

SynthBenchmark generate_benchmark(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t dt = cfg.teacher_dim;
  const std::size_t ds = cfg.student_dim;
  const std::size_t C = cfg.classes;
  const std::size_t T = cfg.templates;
  const std::size_t K = cfg.frames_per_video;

  SynthBenchmark out;
  out.config = cfg;
  for (std::size_t c = 0; c < C; ++c) out.class_names.push_back(numbered("action_", c, 2));

  std::vector<DenseVector> prototypes;
  {
    CounterRng rng = CounterRng::stream(cfg.seed, "prototypes");
    for (std::size_t c = 0; c < C; ++c) prototypes.push_back(l2_normalize(gaussian(rng, dt, 1.0)));
  }
  const Matrix rotation = random_rotation(cfg.seed, dt);
  DenseVector bias(dt, 0.0);
  if (cfg.bias_magnitude > 0.0) {
    CounterRng rng = CounterRng::stream(cfg.seed, "bias");
    bias = l2_normalize(gaussian(rng, dt, 1.0));
    for (double& x : bias) x *= cfg.bias_magnitude;
  }
  const Matrix cross = cross_space_map(cfg.seed, ds, dt);

  out.teacher_bank = make_bank(dt, out.class_names, T, cfg.logit_temperature);
  out.student_bank = make_bank(ds, out.class_names, T, cfg.logit_temperature);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t t = 0; t < T; ++t) {
      CounterRng rng = CounterRng::stream(cfg.seed, "text", video_key(c, t));
      const DenseVector row =
          unit_f32(add(prototypes[c], gaussian(rng, dt, cfg.sigma_text)));
      std::copy(row.begin(), row.end(), out.teacher_bank.row(c, t).begin());
      CounterRng xrng = CounterRng::stream(cfg.seed, "text-cross", video_key(c, t));
      const DenseVector srow = to_student(cross, row, xrng, cfg.sigma_cross);
      std::copy(srow.begin(), srow.end(), out.student_bank.row(c, t).begin());
    }
  }

  auto init_dataset = [](EmbeddingDataset& d, std::size_t dim, Space s) {
    d.dim = dim;
    d.space = s;
  };
  init_dataset(out.source_teacher, dt, Space::kTeacher);
  init_dataset(out.target_teacher, dt, Space::kTeacher);
  init_dataset(out.source_student, ds, Space::kStudent);
  init_dataset(out.target_student, ds, Space::kStudent);

  // Source domain, in class order.
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t v = 0; v < cfg.videos_per_class; ++v) {
      const std::size_t index = c * cfg.videos_per_class + v;
      Video tv{numbered("source_", index, 5), static_cast<std::int32_t>(c), Matrix(K, dt)};
      Video sv{tv.id, tv.label, Matrix(K, ds)};
      CounterRng rng = CounterRng::stream(cfg.seed, "source", video_key(c, v));
      CounterRng xrng = CounterRng::stream(cfg.seed, "source-cross", video_key(c, v));
      for (std::size_t k = 0; k < K; ++k) {
        const DenseVector f =
            unit_f32(add(prototypes[c], gaussian(rng, dt, cfg.sigma_class)));
        std::copy(f.begin(), f.end(), tv.frames.row(k).begin());
        const DenseVector s = to_student(cross, f, xrng, cfg.sigma_cross);
        std::copy(s.begin(), s.end(), sv.frames.row(k).begin());
      }
      out.source_teacher.videos.push_back(std::move(tv));
      out.source_student.videos.push_back(std::move(sv));
    }
  }

  // Target domain, presented in a seeded random order with opaque ids.
  std::vector<std::pair<std::size_t, std::size_t>> order;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t v = 0; v < cfg.videos_per_class; ++v) order.emplace_back(c, v);
  }
  CounterRng order_rng = CounterRng::stream(cfg.seed, "target-order");
  order_rng.shuffle(order);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto [c, v] = order[i];
    Video tv{numbered("target_", i, 5), kUnlabeled, Matrix(K, dt)};
    Video sv{tv.id, kUnlabeled, Matrix(K, ds)};
    CounterRng rng = CounterRng::stream(cfg.seed, "target", video_key(c, v));
    CounterRng xrng = CounterRng::stream(cfg.seed, "target-cross", video_key(c, v));
    for (std::size_t k = 0; k < K; ++k) {
      const DenseVector x = add(prototypes[c], gaussian(rng, dt, cfg.sigma_class));
      const DenseVector qx = rotation.multiply(x);
      DenseVector shifted(dt);
      for (std::size_t j = 0; j < dt; ++j) {
        shifted[j] = (1.0 - cfg.shift) * x[j] + cfg.shift * (qx[j] + bias[j]);
      }
      const DenseVector f = unit_f32(shifted);
      std::copy(f.begin(), f.end(), tv.frames.row(k).begin());
      const DenseVector s = to_student(cross, f, xrng, cfg.sigma_cross);
      std::copy(s.begin(), s.end(), sv.frames.row(k).begin());
    }
    out.target_labels.push_back(LabelRecord{tv.id, static_cast<std::int32_t>(c)});
    out.target_teacher.videos.push_back(std::move(tv));
    out.target_student.videos.push_back(std::move(sv));
  }
  return out;
}

BenchmarkManifest write_benchmark(const SynthBenchmark& bench,
                                  const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());

  BenchmarkManifest m;
  m.class_names = bench.class_names;
  m.templates = bench.teacher_bank.templates;
  m.logit_temperature = bench.teacher_bank.logit_temperature;
  m.teacher = SpaceFiles{"teacher_text.txb", "teacher_source.emb", "teacher_target.emb"};
  m.student = SpaceFiles{"student_text.txb", "student_source.emb", "student_target.emb"};
  m.target_labels = "target_labels.csv";
  m.base_dir = dir;

  save_text_bank(bench.teacher_bank, m.resolve(m.teacher.text_bank));
  save_text_bank(bench.student_bank, m.resolve(m.student.text_bank));
  save_embeddings(bench.source_teacher, m.resolve(m.teacher.source));
  save_embeddings(bench.target_teacher, m.resolve(m.teacher.target));
  save_embeddings(bench.source_student, m.resolve(m.student.source));
  save_embeddings(bench.target_student, m.resolve(m.student.target));
  write_label_sidecar(bench.target_labels, m.resolve(*m.target_labels));
  save_manifest(m, dir / "manifest.json");
  return m;
}

}  // namespace dallv
