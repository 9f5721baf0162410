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

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace hfd::io {

// Minimal named-array container ("HFDA"): a little-endian binary file holding
// a JSON metadata string plus N named row-major arrays (float32 or float64).
// Used for feature caches and model checkpoints.

struct NamedArray {
  std::vector<std::int64_t> shape;  // row-major
  bool is_f32 = false;
  std::vector<double> data;         // held as double regardless of on-disk type

  std::int64_t size() const {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }
};

struct ArrayFile {
  std::string metadata;  // free-form JSON string (may be empty)
  std::map<std::string, NamedArray> arrays;

  bool has(const std::string& name) const { return arrays.count(name) > 0; }

  void set_matrix(const std::string& name, const Eigen::MatrixXd& m,
                  bool as_f32 = false);
  void set_vector(const std::string& name, const Eigen::VectorXd& v,
                  bool as_f32 = false);
  Eigen::MatrixXd matrix(const std::string& name) const;
  Eigen::VectorXd vector(const std::string& name) const;
};

// Atomic: writes to a temp file in the same directory, then renames.
void save_array_file(const std::filesystem::path& path, const ArrayFile& file);
ArrayFile load_array_file(const std::filesystem::path& path);

}  // namespace hfd::io
