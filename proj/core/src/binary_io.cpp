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

#include "binary_io.hpp"

#include <fstream>
#include <iterator>
#include <limits>
#include <system_error>

#include "dallv/error.hpp"

namespace dallv::detail {

void ByteWriter::put_string16(std::string_view s) {
  if (s.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorCode::kInvalidConfig,
                "string of " + std::to_string(s.size()) +
                    " bytes exceeds the u16 length prefix");
  }
  put_u16(static_cast<std::uint16_t>(s.size()));
  put_bytes(s);
}

std::string_view ByteReader::take(std::size_t n) {
  if (remaining() < n) {
    throw Error(ErrorCode::kTruncatedFile,
                source_ + ": needed " + std::to_string(n) + " bytes at offset " +
                    std::to_string(pos_) + ", " + std::to_string(remaining()) +
                    " left");
  }
  std::string_view out(data_.data() + pos_, n);
  pos_ += n;
  return out;
}

std::string ByteReader::get_string16() {
  const std::uint16_t n = get_u16();
  return std::string(take(n));
}

void ByteReader::expect_header(std::string_view magic, std::uint32_t version) {
  const std::string_view head = std::string_view(data_).substr(pos_, magic.size());
  if (head.size() < magic.size() && magic.substr(0, head.size()) == head) {
    throw Error(ErrorCode::kTruncatedFile, source_ + ": file ends inside the header");
  }
  if (head != magic) {
    throw Error(ErrorCode::kBadMagic,
                source_ + ": expected magic \"" + std::string(magic) + "\"");
  }
  pos_ += magic.size();
  const std::uint32_t got = get_u32();
  if (got != version) {
    throw Error(ErrorCode::kBadVersion, source_ + ": version " +
                                            std::to_string(got) + ", expected " +
                                            std::to_string(version));
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open " + path.string());
  }
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::kIo, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw Error(ErrorCode::kIo,
                "cannot rename " + tmp.string() + " to " + path.string() + ": " +
                    ec.message());
  }
}

}  // namespace dallv::detail
