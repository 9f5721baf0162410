// Copyright 2026 HFD Baselines Authors
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

#include "hfd/io/array_file.hpp"

#include <cstring>
#include <fstream>

#include "hfd/errors.hpp"

namespace hfd::io {

namespace {

constexpr char kMagic[8] = {'H', 'F', 'D', 'A', '0', '0', '0', '1'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw SchemaError("truncated array file");
  return v;
}

void write_string(std::ostream& out, const std::string& s) {
  write_pod<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  auto n = read_pod<std::uint64_t>(in);
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw SchemaError("truncated array file");
  return s;
}

}  // namespace

void ArrayFile::set_matrix(const std::string& name, const Eigen::MatrixXd& m,
                           bool as_f32) {
  NamedArray a;
  a.shape = {m.rows(), m.cols()};
  a.is_f32 = as_f32;
  a.data.resize(static_cast<size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      a.data[static_cast<size_t>(r * m.cols() + c)] = m(r, c);
  arrays[name] = std::move(a);
}

void ArrayFile::set_vector(const std::string& name, const Eigen::VectorXd& v,
                           bool as_f32) {
  NamedArray a;
  a.shape = {v.size()};
  a.is_f32 = as_f32;
  a.data.assign(v.data(), v.data() + v.size());
  arrays[name] = std::move(a);
}

Eigen::MatrixXd ArrayFile::matrix(const std::string& name) const {
  auto it = arrays.find(name);
  if (it == arrays.end()) throw SchemaError("array file: missing array '" + name + "'");
  const NamedArray& a = it->second;
  if (a.shape.size() != 2) throw SchemaError("array '" + name + "' is not 2-D");
  Eigen::MatrixXd m(a.shape[0], a.shape[1]);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = a.data[static_cast<size_t>(r * m.cols() + c)];
  return m;
}

Eigen::VectorXd ArrayFile::vector(const std::string& name) const {
  auto it = arrays.find(name);
  if (it == arrays.end()) throw SchemaError("array file: missing array '" + name + "'");
  const NamedArray& a = it->second;
  if (a.shape.size() != 1) throw SchemaError("array '" + name + "' is not 1-D");
  return Eigen::Map<const Eigen::VectorXd>(a.data.data(),
                                           static_cast<Eigen::Index>(a.data.size()));
}

void save_array_file(const std::filesystem::path& path, const ArrayFile& file) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IOError("cannot open for writing: " + tmp.string());
    out.write(kMagic, sizeof(kMagic));
    write_string(out, file.metadata);
    write_pod<std::uint64_t>(out, file.arrays.size());
    for (const auto& [name, a] : file.arrays) {
      write_string(out, name);
      write_pod<std::uint8_t>(out, a.is_f32 ? 1 : 0);
      write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(a.shape.size()));
      for (auto d : a.shape) write_pod<std::int64_t>(out, d);
      if (a.is_f32) {
        std::vector<float> f(a.data.begin(), a.data.end());
        out.write(reinterpret_cast<const char*>(f.data()),
                  static_cast<std::streamsize>(f.size() * sizeof(float)));
      } else {
        out.write(reinterpret_cast<const char*>(a.data.data()),
                  static_cast<std::streamsize>(a.data.size() * sizeof(double)));
      }
    }
    if (!out) throw IOError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

ArrayFile load_array_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingStream("cannot open array file: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw SchemaError("bad magic in array file: " + path.string());

  ArrayFile file;
  file.metadata = read_string(in);
  auto count = read_pod<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = read_string(in);
    NamedArray a;
    a.is_f32 = read_pod<std::uint8_t>(in) != 0;
    auto ndim = read_pod<std::uint32_t>(in);
    a.shape.resize(ndim);
    for (auto& d : a.shape) d = read_pod<std::int64_t>(in);
    auto n = static_cast<size_t>(a.size());
    a.data.resize(n);
    if (a.is_f32) {
      std::vector<float> f(n);
      in.read(reinterpret_cast<char*>(f.data()),
              static_cast<std::streamsize>(n * sizeof(float)));
      for (size_t j = 0; j < n; ++j) a.data[j] = f[j];
    } else {
      in.read(reinterpret_cast<char*>(a.data.data()),
              static_cast<std::streamsize>(n * sizeof(double)));
    }
    if (!in) throw SchemaError("truncated array file: " + path.string());
    file.arrays[name] = std::move(a);
  }
  return file;
}

}  // namespace hfd::io
