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

#ifndef OCCLUNET_SERIALIZE_HPP_
#define OCCLUNET_SERIALIZE_HPP_

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>

#include "occlunet/tensor.hpp"

// Tensor blob layout (all integers little-endian 64-bit):
//   magic[8]  "OCTNF32\0" or "OCTNF64\0"
//   rank
//   extents[rank]
//   scalars    little-endian IEEE-754, row-major
namespace occlunet {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kMagicF32{"OCTNF32\0", 8};
inline constexpr std::string_view kMagicF64{"OCTNF64\0", 8};

/// Bytes occupied by a tensor's blob.
std::size_t blob_size(const Shape& shape, std::size_t scalar_bytes);

template <typename T>
void write_tensor(std::ostream& os, const Tensor<T>& t);

/// Reads a blob of either precision and converts to T.
template <typename T>
Tensor<T> read_tensor(std::istream& is);

template <typename T>
void save_tensor_file(const std::filesystem::path& path, const Tensor<T>& t);

template <typename T>
Tensor<T> load_tensor_file(const std::filesystem::path& path);

/// Writes via `<path>.tmp` then renames, so readers never see partial files.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace occlunet

#endif  // OCCLUNET_SERIALIZE_HPP_
