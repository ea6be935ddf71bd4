// Copyright 2026 The occlunet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "occlunet/serialize.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace occlunet {
namespace {

void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(b, 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw FormatError("truncated tensor blob");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

template <typename U, typename T>
void write_scalars(std::ostream& os, const Tensor<T>& t) {
  using Bits = std::conditional_t<sizeof(U) == 4, std::uint32_t, std::uint64_t>;
  std::string buf(t.size() * sizeof(U), '\0');
  for (std::size_t i = 0; i < t.size(); ++i) {
    const Bits bits = std::bit_cast<Bits>(static_cast<U>(t[i]));
    for (std::size_t j = 0; j < sizeof(U); ++j)
      buf[i * sizeof(U) + j] = static_cast<char>((bits >> (8 * j)) & 0xffu);
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

template <typename U, typename T>
void read_scalars(std::istream& is, Tensor<T>& t) {
  using Bits = std::conditional_t<sizeof(U) == 4, std::uint32_t, std::uint64_t>;
  std::string buf(t.size() * sizeof(U), '\0');
  if (!is.read(buf.data(), static_cast<std::streamsize>(buf.size())))
    throw FormatError("truncated tensor payload");
  for (std::size_t i = 0; i < t.size(); ++i) {
    Bits bits = 0;
    for (std::size_t j = 0; j < sizeof(U); ++j)
      bits |= static_cast<Bits>(static_cast<unsigned char>(buf[i * sizeof(U) + j])) << (8 * j);
    t[i] = static_cast<T>(std::bit_cast<U>(bits));
  }
}

}  // namespace

std::size_t blob_size(const Shape& shape, std::size_t scalar_bytes) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return 8 + 8 + 8 * shape.size() + n * scalar_bytes;
}

template <typename T>
void write_tensor(std::ostream& os, const Tensor<T>& t) {
  if (t.empty()) throw FormatError("cannot serialize an empty tensor");
  os.write(sizeof(T) == 4 ? kMagicF32.data() : kMagicF64.data(), 8);
  put_u64(os, t.rank());
  for (auto e : t.shape()) put_u64(os, e);
  write_scalars<T>(os, t);
  if (!os) throw IoError("tensor write failed");
}

template <typename T>
Tensor<T> read_tensor(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8)) throw FormatError("truncated tensor magic");
  const std::string_view m(magic, 8);
  if (m != kMagicF32 && m != kMagicF64) throw FormatError("bad tensor magic");
  const std::uint64_t rank = get_u64(is);
  if (rank == 0 || rank > kMaxRank) throw FormatError("bad tensor rank " + std::to_string(rank));
  Shape shape(rank);
  for (auto& e : shape) {
    e = get_u64(is);
    if (e == 0 || e > (1ull << 32)) throw FormatError("bad tensor extent");
  }
  Tensor<T> t(shape);
  if (m == kMagicF32)
    read_scalars<float>(is, t);
  else
    read_scalars<double>(is, t);
  return t;
}

template <typename T>
void save_tensor_file(const std::filesystem::path& path, const Tensor<T>& t) {
  std::ostringstream os(std::ios::binary);
  write_tensor(os, t);
  write_file_atomic(path, os.str());
}

template <typename T>
Tensor<T> load_tensor_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read_tensor<T>(is);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
  }
}

template void write_tensor<float>(std::ostream&, const Tensor<float>&);
template void write_tensor<double>(std::ostream&, const Tensor<double>&);
template Tensor<float> read_tensor<float>(std::istream&);
template Tensor<double> read_tensor<double>(std::istream&);
template void save_tensor_file<float>(const std::filesystem::path&, const Tensor<float>&);
template void save_tensor_file<double>(const std::filesystem::path&, const Tensor<double>&);
template Tensor<float> load_tensor_file<float>(const std::filesystem::path&);
template Tensor<double> load_tensor_file<double>(const std::filesystem::path&);

}  // namespace occlunet
