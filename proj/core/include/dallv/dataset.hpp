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

#ifndef DALLV_DATASET_HPP_
#define DALLV_DATASET_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dallv/tensor.hpp"

namespace dallv {

// Which frozen encoder produced an embedding: the larger teacher backbone or
// the smaller student backbone.
enum class Space { kTeacher, kStudent };

std::string_view space_name(Space s) noexcept;

inline constexpr std::int32_t kUnlabeled = -1;

struct Video {
  std::string id;
  std::int32_t label = kUnlabeled;
  Matrix frames;  // K x d, one frame embedding per row

  bool labeled() const noexcept { return label >= 0; }
  std::size_t frame_count() const noexcept { return frames.rows(); }
};

// Videos of frame embeddings living in one embedding space.
struct EmbeddingDataset {
  std::size_t dim = 0;
  Space space = Space::kTeacher;
  std::vector<Video> videos;

  std::size_t size() const noexcept { return videos.size(); }
  bool empty() const noexcept { return videos.empty(); }

  // Throws on K = 0, duplicate ids, wrong frame width, or non-finite values.
  void validate() const;

  std::vector<std::string> ids() const;
};

}  // namespace dallv

#endif  // DALLV_DATASET_HPP_
