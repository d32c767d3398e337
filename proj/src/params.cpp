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

#include "varl/params.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace varl {

void ParamSet::add(std::string name, Tensor value) {
  if (find(name)) throw std::invalid_argument("duplicate parameter " + name);
  entries_.push_back({std::move(name), std::move(value)});
}

const ParamSet::Entry* ParamSet::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

bool ParamSet::contains(std::string_view name) const { return find(name) != nullptr; }

const Tensor& ParamSet::operator[](std::string_view name) const {
  const Entry* e = find(name);
  if (!e) throw std::out_of_range("no parameter named " + std::string(name));
  return e->value;
}

Tensor& ParamSet::operator[](std::string_view name) {
  return const_cast<Tensor&>(std::as_const(*this)[name]);
}

ParamSet ParamSet::track(Tape& tape) const {
  ParamSet out;
  out.entries_.reserve(entries_.size());
  for (const auto& e : entries_) out.entries_.push_back({e.name, tape.variable(e.value)});
  return out;
}

std::vector<Vector> ParamSet::gradients(const Tape& tape) const {
  std::vector<Vector> grads;
  grads.reserve(entries_.size());
  for (const auto& e : entries_) grads.push_back(tape.grad(e.value));
  return grads;
}

ParamSet ParamSet::prefixed(std::string_view prefix) const {
  ParamSet out;
  for (const auto& e : entries_) out.add(std::string(prefix) + e.name, e.value);
  return out;
}

ParamSet ParamSet::extract(std::string_view prefix) const {
  ParamSet out;
  for (const auto& e : entries_) {
    if (e.name.starts_with(prefix)) out.add(e.name.substr(prefix.size()), e.value);
  }
  return out;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += static_cast<std::size_t>(e.value.size());
  return n;
}

namespace {

constexpr char kMagic[4] = {'V', 'A', 'R', 'L'};

template <class T>
void put(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little,
                "container I/O assumes a little-endian host");
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in, const char* what) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw FormatError(std::string("truncated container while reading ") + what);
  }
  return value;
}

void write_header(std::ostream& out, std::uint32_t version, std::size_t count) {
  out.write(kMagic, 4);
  put<std::uint32_t>(out, version);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(count));
}

std::uint32_t read_header(std::istream& in, std::uint32_t expected_version) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("bad container magic");
  }
  const auto version = get<std::uint32_t>(in, "version");
  if (version != expected_version) {
    throw FormatError("container version " + std::to_string(version) +
                      ", expected " + std::to_string(expected_version));
  }
  return get<std::uint32_t>(in, "array count");
}

void write_name_dims(std::ostream& out, const std::string& name,
                     const std::vector<std::uint32_t>& dims) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) put<std::uint32_t>(out, d);
}

std::pair<std::string, std::vector<std::uint32_t>> read_name_dims(std::istream& in) {
  const auto len = get<std::uint32_t>(in, "name length");
  if (len > (1u << 16)) throw FormatError("implausible name length");
  std::string name(len, '\0');
  if (!in.read(name.data(), len)) throw FormatError("truncated name");
  const auto rank = get<std::uint32_t>(in, "rank");
  if (rank > 8) throw FormatError("implausible rank");
  std::vector<std::uint32_t> dims(rank);
  for (auto& d : dims) d = get<std::uint32_t>(in, "dims");
  return {std::move(name), std::move(dims)};
}

}  // namespace

void write_params(std::ostream& out, const ParamSet& params) {
  write_header(out, kParamFormatVersion, params.size());
  for (const auto& e : params.entries()) {
    std::vector<std::uint32_t> dims(e.value.shape().begin(), e.value.shape().end());
    write_name_dims(out, e.name, dims);
    for (Eigen::Index i = 0; i < e.value.size(); ++i) put<double>(out, e.value[i]);
  }
}

ParamSet read_params(std::istream& in) {
  const auto count = read_header(in, kParamFormatVersion);
  ParamSet params;
  for (std::uint32_t a = 0; a < count; ++a) {
    auto [name, dims] = read_name_dims(in);
    Shape shape(dims.begin(), dims.end());
    Vector data(element_count(shape));
    if (!in.read(reinterpret_cast<char*>(data.data()),
                 static_cast<std::streamsize>(data.size() * sizeof(double)))) {
      throw FormatError("truncated payload for " + name);
    }
    params.add(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return params;
}

void save_params(const std::filesystem::path& path, const ParamSet& params) {
  std::ostringstream out;
  write_params(out, params);
  write_file_atomically(path, out.str());
}

ParamSet load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_params(in);
}

void write_byte_arrays(std::ostream& out, const std::vector<ByteArray>& arrays) {
  write_header(out, kByteFormatVersion, arrays.size());
  for (const auto& a : arrays) {
    std::size_t n = 1;
    for (auto d : a.dims) n *= d;
    if (n != a.bytes.size()) throw FormatError("byte array " + a.name + " size mismatch");
    write_name_dims(out, a.name, a.dims);
    out.write(reinterpret_cast<const char*>(a.bytes.data()),
              static_cast<std::streamsize>(a.bytes.size()));
  }
}

std::vector<ByteArray> read_byte_arrays(std::istream& in) {
  const auto count = read_header(in, kByteFormatVersion);
  std::vector<ByteArray> arrays;
  for (std::uint32_t a = 0; a < count; ++a) {
    auto [name, dims] = read_name_dims(in);
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    ByteArray arr{std::move(name), std::move(dims), std::vector<std::uint8_t>(n)};
    if (!in.read(reinterpret_cast<char*>(arr.bytes.data()),
                 static_cast<std::streamsize>(n))) {
      throw FormatError("truncated payload for " + arr.name);
    }
    arrays.push_back(std::move(arr));
  }
  return arrays;
}

std::uint64_t params_hash(const ParamSet& params) {
  std::ostringstream out;
  write_params(out, params);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : out.str()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_file_atomically(const std::filesystem::path& path,
                           std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace varl
