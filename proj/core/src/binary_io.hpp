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

// Little-endian byte buffers for the on-disk formats. Internal to the library.

#ifndef DALLV_SRC_BINARY_IO_HPP_
#define DALLV_SRC_BINARY_IO_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>

namespace dallv::detail {

class ByteWriter {
 public:
  void put_bytes(std::string_view s) { buf_.append(s); }

  template <typename UInt>
  void put_uint(UInt v) {
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
      buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
  }

  void put_u16(std::uint16_t v) { put_uint(v); }
  void put_u32(std::uint32_t v) { put_uint(v); }
  void put_i32(std::int32_t v) { put_uint(static_cast<std::uint32_t>(v)); }
  void put_f32(float v) { put_uint(std::bit_cast<std::uint32_t>(v)); }
  void put_f64(double v) { put_uint(std::bit_cast<std::uint64_t>(v)); }

  // u16 length prefix followed by the UTF-8 bytes.
  void put_string16(std::string_view s);

  const std::string& bytes() const noexcept { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(std::string data, std::string source)
      : data_(std::move(data)), source_(std::move(source)) {}

  std::string_view take(std::size_t n);

  template <typename UInt>
  UInt get_uint() {
    const std::string_view raw = take(sizeof(UInt));
    UInt v = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
      v |= static_cast<UInt>(static_cast<unsigned char>(raw[i])) << (8 * i);
    }
    return v;
  }

  std::uint16_t get_u16() { return get_uint<std::uint16_t>(); }
  std::uint32_t get_u32() { return get_uint<std::uint32_t>(); }
  std::int32_t get_i32() { return static_cast<std::int32_t>(get_u32()); }
  float get_f32() { return std::bit_cast<float>(get_u32()); }
  double get_f64() { return std::bit_cast<double>(get_uint<std::uint64_t>()); }
  std::string get_string16();

  // Throws kBadMagic / kBadVersion.
  void expect_header(std::string_view magic, std::uint32_t version);

  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  const std::string& source() const noexcept { return source_; }

 private:
  std::string data_;
  std::string source_;
  std::size_t pos_ = 0;
};

// Whole-file read; throws kIo when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace dallv::detail

#endif  // DALLV_SRC_BINARY_IO_HPP_
