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

#include <stdexcept>
#include <string>

namespace hfd {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// dataset ingestion
struct MissingStream : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };
struct InvariantViolation : Error { using Error::Error; };
struct EmptyOverlap : Error { using Error::Error; };
struct UnknownPlatform : Error { using Error::Error; };
struct SegmentationAmbiguous : Error { using Error::Error; };
struct SplitSpecError : Error { using Error::Error; };

// feature pipeline
struct EmptyTrial : Error { using Error::Error; };
struct BackboneContractError : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };

// models
struct TopologyError : Error { using Error::Error; };
struct DivergenceError : Error { using Error::Error; };
struct MissingSegment : Error { using Error::Error; };
struct MissingTarget : Error { using Error::Error; };

// metrics
struct EmptyTrack : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct EmptyList : Error { using Error::Error; };

// baseline / experiments
struct NoLabels : Error { using Error::Error; };
struct ScriptError : Error { using Error::Error; };
struct IOError : Error { using Error::Error; };
struct UnsupportedTable : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace hfd
