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

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace hfd::data {

enum class SplitSet { TRAIN, VAL, TEST };

SplitSet parse_split_set(const std::string& s);
std::string split_set_name(SplitSet s);

// Participant-to-set assignment. Assigning one participant twice throws
// SplitSpecError.
class SplitSpec {
 public:
  void assign(const std::string& participant_id, SplitSet set);
  SplitSet set_for(const std::string& participant_id) const;  // throws if unknown
  const std::map<std::string, SplitSet>& assignments() const { return by_participant_; }

  // JSON object mapping participant_id -> "train"|"val"|"test".
  // Duplicate keys in the document are rejected.
  static SplitSpec from_json_file(const std::filesystem::path& path);
  void save_json(const std::filesystem::path& path) const;

 private:
  std::map<std::string, SplitSet> by_participant_;
};

struct SplitIndices {
  std::vector<size_t> train;
  std::vector<size_t> val;
  std::vector<size_t> test;
};

// Partitions trial indices by the participant assignment; a participant
// missing from the spec throws SplitSpecError.
SplitIndices split_by_participant(const std::vector<std::string>& participant_ids,
                                  const SplitSpec& spec);

}  // namespace hfd::data
