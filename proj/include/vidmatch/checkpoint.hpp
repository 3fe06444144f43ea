/**
 * Copyright 2026 The vidmatch Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "vidmatch/tensor.hpp"

namespace vidmatch {

/// One named array in a checkpoint file.
struct ArrayEntry {
  std::vector<std::size_t> shape;
  std::variant<std::vector<float>, std::vector<double>, std::vector<std::int64_t>, std::string> data;
};

/// Single-file container of named arrays.
///
/// Layout (little endian): "VMCK", u32 version, u32 entry count, then per entry
/// u32 name length, name bytes, u8 dtype (0 f32, 1 f64, 2 i64, 3 utf-8 string),
/// u32 rank, rank x u64 dims, u64 payload bytes, payload.
class ArchiveFile {
 public:
  void put(const std::string& name, const Tensor& t);
  void put(const std::string& name, std::vector<double> v);
  void put(const std::string& name, std::int64_t v);
  void put(const std::string& name, std::string s);

  bool has(const std::string& name) const { return entries_.count(name) > 0; }
  /// Loaded into the current Real type; the stored precision may differ.
  Tensor tensor(const std::string& name) const;
  std::vector<double> reals(const std::string& name) const;
  std::int64_t integer(const std::string& name) const;
  const std::string& text(const std::string& name) const;
  const std::map<std::string, ArrayEntry>& entries() const { return entries_; }

  /// Writes to a temporary sibling and renames it into place, so a failed write leaves the
  /// previous file intact.
  void save(const std::filesystem::path& path) const;
  static ArchiveFile load(const std::filesystem::path& path);

 private:
  const ArrayEntry& get(const std::string& name) const;
  std::map<std::string, ArrayEntry> entries_;
};

}  // namespace vidmatch
