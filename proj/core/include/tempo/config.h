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

// INI-style key/value files ("[section]" headers, "key = value" lines,
// ';' or '#' comments), keyed as "section.key".

#ifndef TEMPO_CONFIG_H_
#define TEMPO_CONFIG_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

namespace tempo {

class KeyValueFile {
 public:
  KeyValueFile() = default;
  // Throws ConfigError when the file is missing or malformed.
  static KeyValueFile Read(const std::filesystem::path& path);
  static KeyValueFile Parse(const std::string& text);

  bool Has(const std::string& key) const;
  std::optional<std::string> Find(const std::string& key) const;

  std::string GetString(const std::string& key,
                        const std::string& fallback) const;
  double GetDouble(const std::string& key, double fallback) const;
  long GetInt(const std::string& key, long fallback) const;
  bool GetBool(const std::string& key, bool fallback) const;
  // Comma-separated list with surrounding whitespace trimmed.
  std::vector<std::string> GetList(const std::string& key) const;
  std::vector<long> GetIntList(const std::string& key,
                               std::vector<long> fallback) const;

  void Set(const std::string& key, const std::string& value);
  std::string ToString() const;

  const std::filesystem::path& source() const { return source_; }

 private:
  boost::property_tree::ptree tree_;
  std::filesystem::path source_;
};

}  // namespace tempo

#endif  // TEMPO_CONFIG_H_
