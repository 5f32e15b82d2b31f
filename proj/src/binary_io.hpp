// Copyright 2026 The lateint Authors
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

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "lateint/errors.hpp"

namespace lateint::detail {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian and written with memcpy");

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error("cannot open for writing: " + path.string());
  }

  template <typename T>
    requires std::is_trivially_copyable_v<T>
  void put(const T& value) {
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }

  template <typename T>
  void put_span(std::span<const T> values) {
    out_.write(reinterpret_cast<const char*>(values.data()),
               static_cast<std::streamsize>(values.size_bytes()));
  }

  void put_bytes(const std::string& s) { out_.write(s.data(), static_cast<std::streamsize>(s.size())); }

  void put_magic(const char (&magic)[5]) { out_.write(magic, 4); }

  // LEB128
  void put_varint(std::uint64_t v) {
    while (v >= 0x80) {
      put(static_cast<std::uint8_t>(v | 0x80));
      v >>= 7;
    }
    put(static_cast<std::uint8_t>(v));
  }

  void close() {
    out_.flush();
    if (!out_) throw Error("write failed: " + path_.string());
    out_.close();
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open: " + path.string());
    data_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  template <typename T>
    requires std::is_trivially_copyable_v<T>
  T get() {
    T value;
    std::memcpy(&value, take(sizeof(T)), sizeof(T));
    return value;
  }

  template <typename T>
  void get_span(std::span<T> out) {
    std::memcpy(out.data(), take(out.size_bytes()), out.size_bytes());
  }

  std::string get_bytes(std::size_t n) {
    const char* p = take(n);
    return std::string(p, n);
  }

  void expect_magic(const char (&magic)[5]) {
    if (get_bytes(4) != std::string(magic, 4)) {
      throw FormatError(path_.string() + ": bad magic, expected " + std::string(magic, 4));
    }
  }

  std::uint64_t get_varint() {
    std::uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
      const auto byte = get<std::uint8_t>();
      v |= static_cast<std::uint64_t>(byte & 0x7f) << shift;
      if (!(byte & 0x80)) return v;
    }
    throw FormatError(path_.string() + ": varint overflow");
  }

  bool at_end() const { return pos_ == data_.size(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  const char* take(std::size_t n) {
    if (data_.size() - pos_ < n) throw FormatError(path_.string() + ": truncated file");
    const char* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::filesystem::path path_;
  std::vector<char> data_;
  std::size_t pos_ = 0;
};

}  // namespace lateint::detail
