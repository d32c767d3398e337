/*
 * Copyright 2026 The varl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "varl/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace varl {

/// Ordered set of named parameter tensors.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Tensor value;
  };

  void add(std::string name, Tensor value);

  bool contains(std::string_view name) const;
  const Tensor& operator[](std::string_view name) const;
  Tensor& operator[](std::string_view name);

  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }

  /// Copy whose tensors are leaves on `tape`, in the same order.
  ParamSet track(Tape& tape) const;

  /// Gradients of the tracked copy, aligned with entries().
  std::vector<Vector> gradients(const Tape& tape) const;

  /// Copy with every name prefixed by `prefix`.
  ParamSet prefixed(std::string_view prefix) const;

  /// Entries whose names start with `prefix`, with the prefix removed.
  ParamSet extract(std::string_view prefix) const;

  std::size_t scalar_count() const;

 private:
  const Entry* find(std::string_view name) const;

  std::vector<Entry> entries_;
};

/// Byte arrays for the dataset cache, which reuses the parameter container.
struct ByteArray {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> bytes;
};

/// Malformed or unreadable container.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Container layout, little-endian: "VARL", u32 version, u32 array count, then
// per array: u32 name length, UTF-8 name, u32 rank, u32 dims, payload.
// Version 1 payloads are float64; version 2 payloads are u8.
inline constexpr std::uint32_t kParamFormatVersion = 1;
inline constexpr std::uint32_t kByteFormatVersion = 2;

void write_params(std::ostream& out, const ParamSet& params);
ParamSet read_params(std::istream& in);
void save_params(const std::filesystem::path& path, const ParamSet& params);
ParamSet load_params(const std::filesystem::path& path);

void write_byte_arrays(std::ostream& out, const std::vector<ByteArray>& arrays);
std::vector<ByteArray> read_byte_arrays(std::istream& in);

/// FNV-1a over the serialized form; stable identity for parameter sets.
std::uint64_t params_hash(const ParamSet& params);

/// Writes to a sibling temporary and renames over `path`.
void write_file_atomically(const std::filesystem::path& path, std::string_view contents);

}  // namespace varl
