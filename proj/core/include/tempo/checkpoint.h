// Copyright 2026 The Tempo Authors
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

// Parameter checkpoints.
//
// A checkpoint named `base` is two files:
//   base.json  manifest: {"format", "metadata", "tensors": [{name, shape,
//              offset, count}]}, offsets and counts in float64 elements
//   base.bin   concatenated little-endian IEEE-754 float64 payloads
// Values round-trip bit-exactly.

#ifndef TEMPO_CHECKPOINT_H_
#define TEMPO_CHECKPOINT_H_

#include <filesystem>

#include <nlohmann/json.hpp>
#include "tempo/nn.h"

namespace tempo {

inline constexpr const char* kCheckpointFormat = "tempo-params-v1";

struct Checkpoint {
  ParameterList tensors;
  nlohmann::json metadata = nlohmann::json::object();
};

void SaveCheckpoint(const std::filesystem::path& base,
                    const ParameterList& params,
                    const nlohmann::json& metadata = nlohmann::json::object());

// Throws DataError on missing files, format mismatch or truncated payload.
Checkpoint LoadCheckpoint(const std::filesystem::path& base);

// Copies values by name into existing tensors. Every destination must be
// present in the checkpoint with an identical shape.
void AssignParameters(const ParameterList& destination,
                      const Checkpoint& checkpoint);

}  // namespace tempo

#endif  // TEMPO_CHECKPOINT_H_
