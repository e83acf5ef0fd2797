// Copyright (c) 2026 The guided-ssl Authors. All Rights Reserved.
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


#include "gssl/engine/archive.hpp"

#include <bit>
#include <cstdio>
#include <cstring>

#include "gssl/data/image.hpp"
#include "gssl/errors.hpp"

namespace gssl::engine {

namespace {

constexpr char kMagic[8] = {'G', 'S', 'S', 'L', 'C', 'K', 'P', 'T'};

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(bytes_[pos_ + b]) << (8 * b);
    pos_ += 8;
    return v;
  }

  std::string str(std::uint64_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > bytes_.size() - pos_) throw DecodeError("truncated checkpoint");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const Tensor& TensorArchive::at(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw DecodeError("checkpoint has no tensor named " + name);
}

bool TensorArchive::contains(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return true;
  return false;
}

std::vector<std::uint8_t> encode_archive(const TensorArchive& archive) {
  nlohmann::json header = archive.header;
  header["tensors"] = nlohmann::json::array();
  for (const auto& [name, t] : archive.tensors) header["tensors"].push_back({{"name", name}, {"shape", t.shape()}});
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(kMagic, kMagic + 8);
  put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& [name, t] : archive.tensors) {
    put_u64(out, name.size());
    out.insert(out.end(), name.begin(), name.end());
    put_u64(out, t.rank());
    for (std::size_t d : t.shape()) put_u64(out, d);
    for (double v : t.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

TensorArchive decode_archive(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0) throw DecodeError("not a checkpoint file");
  std::vector<std::uint8_t> rest(bytes.begin() + 8, bytes.end());
  Reader in(rest);
  TensorArchive a;
  try {
    a.header = nlohmann::json::parse(in.str(in.u64()));
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("checkpoint header: ") + e.what());
  }
  if (!a.header.contains("tensors") || !a.header["tensors"].is_array())
    throw DecodeError("checkpoint header lacks a tensor table");
  for (const auto& entry : a.header["tensors"]) {
    std::string name = in.str(in.u64());
    if (!entry.is_object() || entry.value("name", std::string()) != name)
      throw DecodeError("tensor block " + name + " does not match the header");
    const std::uint64_t rank = in.u64();
    if (rank > 8) throw DecodeError("tensor " + name + " has implausible rank");
    Shape shape;
    std::uint64_t count = 1;
    for (std::uint64_t r = 0; r < rank; ++r) {
      shape.push_back(in.u64());
      if (shape.back() == 0 || count > (std::uint64_t{1} << 40) / shape.back())
        throw DecodeError("tensor " + name + " has an invalid shape");
      count *= shape.back();
    }
    if (entry.at("shape").get<Shape>() != shape) throw DecodeError("tensor " + name + " shape differs from header");
    std::vector<double> values(count);
    for (double& v : values) v = std::bit_cast<double>(in.u64());
    a.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  if (!in.done()) throw DecodeError("trailing bytes after the last tensor block");
  a.header.erase("tensors");
  return a;
}

void save_archive(const std::filesystem::path& path, const TensorArchive& archive) {
  const auto bytes = encode_archive(archive);
  write_file_bytes(path, bytes);
}

TensorArchive load_archive(const std::filesystem::path& path) {
  try {
    return decode_archive(read_file_bytes(path));
  } catch (const DecodeError& e) {
    throw DecodeError(path.string() + ": " + e.what());
  }
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a(const Tensor& t) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t d : t.shape()) {
    const std::uint64_t v = d;
    h = fnv1a(&v, 8, h);
  }
  for (double x : t.data()) {
    const std::uint64_t v = std::bit_cast<std::uint64_t>(x);
    h = fnv1a(&v, 8, h);
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace gssl::engine
