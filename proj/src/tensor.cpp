// Copyright 2026 The ctxai Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ctxai/tensor.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace ctxai {

namespace {

constexpr std::string_view kMagic = "XTEN";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
  }
  return v;
}

}  // namespace

std::string tensor_encode(const Tensor& t) {
  if (t.rank() < 1) throw ValidationError("cannot encode an empty tensor");
  std::string out(kMagic);
  out.push_back(static_cast<char>(t.rank()));
  for (Eigen::Index d : t.dims()) {
    if (d > std::numeric_limits<std::uint32_t>::max()) {
      throw ValidationError("tensor dim exceeds u32 range");
    }
    put_u32(out, static_cast<std::uint32_t>(d));
  }
  out.reserve(out.size() + 4 * static_cast<std::size_t>(t.size()));
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const float f = static_cast<float>(t.data()(i));
    if (!std::isfinite(f)) {
      throw ValidationError("tensor value " + std::to_string(t.data()(i)) +
                            " is not representable as f32");
    }
    put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

std::pair<Tensor, std::size_t> tensor_decode(std::string_view bytes,
                                             std::size_t base_offset) {
  if (bytes.size() < 5) {
    throw FormatError("truncated XTEN header", base_offset + bytes.size());
  }
  if (bytes.substr(0, 4) != kMagic) {
    throw FormatError("bad XTEN magic", base_offset);
  }
  const int rank = static_cast<unsigned char>(bytes[4]);
  if (rank < 1 || rank > Tensor::kMaxRank) {
    throw FormatError("XTEN rank " + std::to_string(rank) + " outside 1..4",
                      base_offset + 4);
  }
  std::size_t pos = 5;
  std::vector<Eigen::Index> dims;
  std::uint64_t count = 1;
  for (int r = 0; r < rank; ++r) {
    if (bytes.size() < pos + 4) {
      throw FormatError("truncated XTEN dims", base_offset + bytes.size());
    }
    const std::uint32_t d = get_u32(bytes, pos);
    if (d == 0) throw FormatError("XTEN dim is zero", base_offset + pos);
    count *= d;
    if (count > (std::uint64_t{1} << 40)) {
      throw FormatError("XTEN element count too large", base_offset + pos);
    }
    dims.push_back(static_cast<Eigen::Index>(d));
    pos += 4;
  }
  const std::size_t payload = 4 * static_cast<std::size_t>(count);
  if (bytes.size() < pos + payload) {
    throw FormatError("truncated XTEN payload: need " + std::to_string(payload) +
                          " bytes",
                      base_offset + bytes.size());
  }
  Tensor::Vector data(static_cast<Eigen::Index>(count));
  for (std::uint64_t i = 0; i < count; ++i) {
    const float f = std::bit_cast<float>(get_u32(bytes, pos));
    if (!std::isfinite(f)) {
      throw ValidationError("non-finite XTEN value at byte offset " +
                            std::to_string(base_offset + pos));
    }
    data(static_cast<Eigen::Index>(i)) = static_cast<double>(f);
    pos += 4;
  }
  return {Tensor(std::move(dims), std::move(data)), pos};
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void tensor_write(const Tensor& t, const std::filesystem::path& path) {
  write_file_bytes(path, tensor_encode(t));
}

Tensor tensor_read(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  auto [tensor, used] = tensor_decode(bytes);
  if (used != bytes.size()) {
    throw FormatError("trailing bytes after XTEN payload", used);
  }
  return tensor;
}

}  // namespace ctxai
