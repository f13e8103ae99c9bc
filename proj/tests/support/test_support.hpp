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

// Helpers shared by the unit tests and the acceptance binary.

#ifndef DALLV_TESTS_SUPPORT_TEST_SUPPORT_HPP_
#define DALLV_TESTS_SUPPORT_TEST_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dallv/clipspace.hpp"
#include "dallv/dataset.hpp"
#include "dallv/error.hpp"
#include "dallv/random.hpp"
#include "dallv/synth.hpp"
#include "dallv/tensor.hpp"

namespace dallv::testing {

// Relative error with a floor on the denominator; a central difference at
// h = 1e-6 carries roughly 1e-10 of absolute rounding noise, which would
// swamp components much below 1e-5.
inline double rel_err(double analytic, double numeric, double floor = 1e-4) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

inline double max_rel_err(std::span<const double> a, std::span<const double> b,
                          double floor = 1e-4) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, rel_err(a[i], b[i], floor));
  return worst;
}

inline DenseVector gaussian_vector(CounterRng& rng, std::size_t n, double scale = 1.0) {
  DenseVector v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

inline DenseVector unit_vector(CounterRng& rng, std::size_t n) {
  return l2_normalize(gaussian_vector(rng, n));
}

// Softmax of Gaussian logits; `spread` controls how peaked it is.
inline ProbDist random_dist(CounterRng& rng, std::size_t classes, double spread = 2.0) {
  return softmax(gaussian_vector(rng, classes, spread));
}

// Bank whose class c rows are all the c-th standard basis vector; needs
// classes <= dim.
inline TextBank basis_bank(std::size_t classes, std::size_t dim, std::size_t templates = 1) {
  TextBank bank;
  bank.dim = dim;
  for (std::size_t c = 0; c < classes; ++c) bank.class_names.push_back("class_" + std::to_string(c));
  for (std::size_t t = 0; t < templates; ++t) bank.templates.emplace_back(kActionPromptTemplates[t]);
  bank.embeddings.assign(classes * templates * dim, 0.0);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t t = 0; t < templates; ++t) bank.row(c, t)[c] = 1.0;
  }
  bank.logit_temperature = kDefaultTauSim;
  return bank;
}

inline TextBank random_bank(CounterRng& rng, std::size_t classes, std::size_t dim,
                            std::size_t templates) {
  TextBank bank = basis_bank(classes, dim, templates);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t t = 0; t < templates; ++t) {
      const DenseVector u = unit_vector(rng, dim);
      std::copy(u.begin(), u.end(), bank.row(c, t).begin());
    }
  }
  return bank;
}

inline SynthConfig noiseless_config(std::uint64_t seed = 0) {
  SynthConfig c;
  c.shift = 0.0;
  c.sigma_class = 0.0;
  c.sigma_text = 0.0;
  c.sigma_cross = 0.0;
  c.seed = seed;
  return c;
}

inline SynthConfig small_config(std::uint64_t seed = 0) {
  SynthConfig c;
  c.classes = 4;
  c.teacher_dim = 16;
  c.student_dim = 12;
  c.videos_per_class = 10;
  c.frames_per_video = 4;
  c.templates = 4;
  c.seed = seed;
  return c;
}

// Fresh, empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("dallv_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

}  // namespace dallv::testing

#endif  // DALLV_TESTS_SUPPORT_TEST_SUPPORT_HPP_
