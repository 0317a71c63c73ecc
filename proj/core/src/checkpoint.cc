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

#include "tempo/checkpoint.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

#include "tempo/errors.h"

namespace tempo {
namespace {

std::filesystem::path WithSuffix(const std::filesystem::path& base,
                                 const char* suffix) {
  std::filesystem::path p = base;
  p += suffix;
  return p;
}

void WriteLittleEndian(std::ostream& out, double value) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(value);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double ReadLittleEndian(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void SaveCheckpoint(const std::filesystem::path& base,
                    const ParameterList& params,
                    const nlohmann::json& metadata) {
  if (base.has_parent_path()) {
    std::filesystem::create_directories(base.parent_path());
  }
  nlohmann::json manifest;
  manifest["format"] = kCheckpointFormat;
  manifest["metadata"] = metadata;
  manifest["tensors"] = nlohmann::json::array();

  std::ofstream payload(WithSuffix(base, ".bin"), std::ios::binary);
  if (!payload) {
    throw DataError("cannot write checkpoint payload " +
                    WithSuffix(base, ".bin").string());
  }
  std::size_t offset = 0;
  for (const auto& [name, tensor] : params) {
    manifest["tensors"].push_back({{"name", name},
                                   {"shape", tensor.shape()},
                                   {"offset", offset},
                                   {"count", tensor.numel()}});
    for (double v : tensor.data()) WriteLittleEndian(payload, v);
    offset += tensor.numel();
  }
  std::ofstream json_out(WithSuffix(base, ".json"));
  if (!json_out) {
    throw DataError("cannot write checkpoint manifest " +
                    WithSuffix(base, ".json").string());
  }
  json_out << manifest.dump(2) << '\n';
}

Checkpoint LoadCheckpoint(const std::filesystem::path& base) {
  std::ifstream json_in(WithSuffix(base, ".json"));
  if (!json_in) {
    throw DataError("missing checkpoint manifest " +
                    WithSuffix(base, ".json").string());
  }
  nlohmann::json manifest;
  try {
    json_in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint manifest: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != kCheckpointFormat) {
    throw DataError("unsupported checkpoint format in " +
                    WithSuffix(base, ".json").string());
  }
  std::ifstream payload(WithSuffix(base, ".bin"), std::ios::binary);
  if (!payload) {
    throw DataError("missing checkpoint payload " +
                    WithSuffix(base, ".bin").string());
  }
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(payload)),
                                   std::istreambuf_iterator<char>());

  Checkpoint result;
  result.metadata = manifest.value("metadata", nlohmann::json::object());
  for (const auto& entry : manifest.at("tensors")) {
    Shape shape = entry.at("shape").get<Shape>();
    const std::size_t offset = entry.at("offset").get<std::size_t>();
    const std::size_t count = entry.at("count").get<std::size_t>();
    if (NumElements(shape) != count || (offset + count) * 8 > bytes.size()) {
      throw DataError("checkpoint entry '" +
                      entry.at("name").get<std::string>() +
                      "' is inconsistent with its payload");
    }
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) {
      values[i] = ReadLittleEndian(bytes.data() + (offset + i) * 8);
    }
    result.tensors.emplace_back(entry.at("name").get<std::string>(),
                                Tensor::FromData(shape, std::move(values)));
  }
  return result;
}

void AssignParameters(const ParameterList& destination,
                      const Checkpoint& checkpoint) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, tensor] : checkpoint.tensors) by_name[name] = &tensor;
  for (const auto& [name, tensor] : destination) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw DataError("checkpoint has no tensor named '" + name + "'");
    }
    if (it->second->shape() != tensor.shape()) {
      throw DataError("checkpoint tensor '" + name + "' has shape " +
                      ShapeToString(it->second->shape()) + ", expected " +
                      ShapeToString(tensor.shape()));
    }
    Tensor target = tensor;
    std::span<const double> src = it->second->data();
    std::copy(src.begin(), src.end(), target.mutable_data().begin());
  }
}

}  // namespace tempo
