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
#include "vidmatch/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace vidmatch {

namespace {

constexpr char kMagic[4] = {'V', 'M', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T read_pod(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw IoError("truncated checkpoint");
  return v;
}

}  // namespace

void ArchiveFile::put(const std::string& name, const Tensor& t) {
  ArrayEntry e;
  e.shape = t.shape();
  if constexpr (std::is_same_v<Real, float>)
    e.data = std::vector<float>(t.span().begin(), t.span().end());
  else
    e.data = std::vector<double>(t.span().begin(), t.span().end());
  entries_[name] = std::move(e);
}

void ArchiveFile::put(const std::string& name, std::vector<double> v) {
  entries_[name] = ArrayEntry{{v.size()}, std::move(v)};
}

void ArchiveFile::put(const std::string& name, std::int64_t v) {
  entries_[name] = ArrayEntry{{1}, std::vector<std::int64_t>{v}};
}

void ArchiveFile::put(const std::string& name, std::string s) {
  entries_[name] = ArrayEntry{{s.size()}, std::move(s)};
}

const ArrayEntry& ArchiveFile::get(const std::string& name) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) throw IoError("checkpoint has no entry '" + name + "'");
  return it->second;
}

Tensor ArchiveFile::tensor(const std::string& name) const {
  const ArrayEntry& e = get(name);
  Tensor t(e.shape);
  std::visit(
      [&](const auto& v) {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, std::vector<float>> || std::is_same_v<V, std::vector<double>>) {
          for (std::size_t i = 0; i < v.size(); ++i) t[i] = static_cast<Real>(v[i]);
        } else {
          throw IoError("checkpoint entry '" + name + "' is not a real array");
        }
      },
      e.data);
  return t;
}

std::vector<double> ArchiveFile::reals(const std::string& name) const {
  const ArrayEntry& e = get(name);
  if (const auto* d = std::get_if<std::vector<double>>(&e.data)) return *d;
  if (const auto* f = std::get_if<std::vector<float>>(&e.data)) return {f->begin(), f->end()};
  throw IoError("checkpoint entry '" + name + "' is not a real array");
}

std::int64_t ArchiveFile::integer(const std::string& name) const {
  const auto* v = std::get_if<std::vector<std::int64_t>>(&get(name).data);
  if (!v || v->size() != 1) throw IoError("checkpoint entry '" + name + "' is not an integer");
  return (*v)[0];
}

const std::string& ArchiveFile::text(const std::string& name) const {
  const auto* s = std::get_if<std::string>(&get(name).data);
  if (!s) throw IoError("checkpoint entry '" + name + "' is not a string");
  return *s;
}

void ArchiveFile::save(const std::filesystem::path& path) const {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp + " for writing");
    out.write(kMagic, 4);
    write_pod(out, kVersion);
    write_pod(out, static_cast<std::uint32_t>(entries_.size()));
    for (const auto& [name, e] : entries_) {
      write_pod(out, static_cast<std::uint32_t>(name.size()));
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      write_pod(out, static_cast<std::uint8_t>(e.data.index()));
      write_pod(out, static_cast<std::uint32_t>(e.shape.size()));
      for (auto d : e.shape) write_pod(out, static_cast<std::uint64_t>(d));
      std::visit(
          [&](const auto& v) {
            using V = std::decay_t<decltype(v)>;
            const std::uint64_t bytes = v.size() * sizeof(typename V::value_type);
            write_pod(out, bytes);
            out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(bytes));
          },
          e.data);
    }
    out.flush();
    if (!out) throw IoError("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

ArchiveFile ArchiveFile::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw IoError(path.string() + " is not a checkpoint");
  if (read_pod<std::uint32_t>(in) != kVersion) throw IoError("unsupported checkpoint version in " + path.string());
  ArchiveFile a;
  const auto count = read_pod<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(read_pod<std::uint32_t>(in), '\0');
    if (!in.read(name.data(), static_cast<std::streamsize>(name.size()))) throw IoError("truncated checkpoint");
    const auto dtype = read_pod<std::uint8_t>(in);
    ArrayEntry e;
    e.shape.resize(read_pod<std::uint32_t>(in));
    for (auto& d : e.shape) d = read_pod<std::uint64_t>(in);
    const auto bytes = read_pod<std::uint64_t>(in);
    auto fill = [&](auto vec) {
      using T = typename decltype(vec)::value_type;
      if (bytes % sizeof(T) != 0) throw IoError("corrupt checkpoint entry '" + name + "'");
      vec.resize(bytes / sizeof(T));
      if (!in.read(reinterpret_cast<char*>(vec.data()), static_cast<std::streamsize>(bytes)))
        throw IoError("truncated checkpoint");
      e.data = std::move(vec);
    };
    switch (dtype) {
      case 0: fill(std::vector<float>{}); break;
      case 1: fill(std::vector<double>{}); break;
      case 2: fill(std::vector<std::int64_t>{}); break;
      case 3: fill(std::string{}); break;
      default: throw IoError("unknown dtype in checkpoint entry '" + name + "'");
    }
    a.entries_[name] = std::move(e);
  }
  return a;
}

}  // namespace vidmatch
