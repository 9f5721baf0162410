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

#include "hfd/data/splits.hpp"

#include <fstream>
#include <json.hpp>
#include <set>

#include "hfd/errors.hpp"

namespace hfd::data {

using nlohmann::json;

SplitSet parse_split_set(const std::string& s) {
  if (s == "train") return SplitSet::TRAIN;
  if (s == "val" || s == "validation") return SplitSet::VAL;
  if (s == "test") return SplitSet::TEST;
  throw SplitSpecError("unknown split set '" + s + "'");
}

std::string split_set_name(SplitSet s) {
  switch (s) {
    case SplitSet::TRAIN: return "train";
    case SplitSet::VAL: return "val";
    case SplitSet::TEST: return "test";
  }
  return "?";
}

void SplitSpec::assign(const std::string& participant_id, SplitSet set) {
  auto [it, inserted] = by_participant_.emplace(participant_id, set);
  if (!inserted && it->second != set)
    throw SplitSpecError("participant '" + participant_id +
                         "' assigned to both '" + split_set_name(it->second) +
                         "' and '" + split_set_name(set) + "'");
}

SplitSet SplitSpec::set_for(const std::string& participant_id) const {
  auto it = by_participant_.find(participant_id);
  if (it == by_participant_.end())
    throw SplitSpecError("participant '" + participant_id +
                         "' not covered by the split spec");
  return it->second;
}

SplitSpec SplitSpec::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingStream("cannot open split spec: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());

  // The default sax parser silently keeps the last duplicate key, so detect
  // duplicates with a callback before building the spec.
  std::set<std::string> seen;
  json::parser_callback_t check = [&](int depth, json::parse_event_t event,
                                      json& parsed) {
    if (event == json::parse_event_t::key && depth == 1) {
      const std::string key = parsed.get<std::string>();
      if (!seen.insert(key).second)
        throw SplitSpecError("participant '" + key +
                             "' listed twice in " + path.string());
    }
    return true;
  };

  json doc;
  try {
    doc = json::parse(text, check);
  } catch (const SplitSpecError&) {
    throw;
  } catch (const json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  if (!doc.is_object())
    throw SchemaError(path.string() + ": split spec must be a JSON object");

  SplitSpec spec;
  for (const auto& [pid, value] : doc.items())
    spec.assign(pid, parse_split_set(value.get<std::string>()));
  return spec;
}

void SplitSpec::save_json(const std::filesystem::path& path) const {
  json doc = json::object();
  for (const auto& [pid, set] : by_participant_) doc[pid] = split_set_name(set);
  std::ofstream out(path);
  if (!out) throw IOError("cannot write split spec: " + path.string());
  out << doc.dump(2) << "\n";
}

SplitIndices split_by_participant(const std::vector<std::string>& participant_ids,
                                  const SplitSpec& spec) {
  SplitIndices out;
  for (size_t i = 0; i < participant_ids.size(); ++i) {
    switch (spec.set_for(participant_ids[i])) {
      case SplitSet::TRAIN: out.train.push_back(i); break;
      case SplitSet::VAL: out.val.push_back(i); break;
      case SplitSet::TEST: out.test.push_back(i); break;
    }
  }
  return out;
}

}  // namespace hfd::data
