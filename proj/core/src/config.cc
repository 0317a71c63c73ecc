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

#include "tempo/config.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>

#include "tempo/errors.h"

namespace tempo {

KeyValueFile KeyValueFile::Read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  KeyValueFile file = Parse(buffer.str());
  file.source_ = path;
  return file;
}

KeyValueFile KeyValueFile::Parse(const std::string& text) {
  // The ini parser only understands ';' comments.
  std::istringstream lines(text);
  std::ostringstream cleaned;
  std::string line;
  while (std::getline(lines, line)) {
    std::string trimmed = boost::algorithm::trim_copy(line);
    if (!trimmed.empty() && trimmed.front() == '#') continue;
    cleaned << line << '\n';
  }
  KeyValueFile file;
  std::istringstream in(cleaned.str());
  try {
    boost::property_tree::ini_parser::read_ini(in, file.tree_);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("malformed config: " + std::string(e.what()));
  }
  return file;
}

bool KeyValueFile::Has(const std::string& key) const {
  return Find(key).has_value();
}

std::optional<std::string> KeyValueFile::Find(const std::string& key) const {
  auto value = tree_.get_optional<std::string>(key);
  if (!value) return std::nullopt;
  return boost::algorithm::trim_copy(*value);
}

std::string KeyValueFile::GetString(const std::string& key,
                                    const std::string& fallback) const {
  return Find(key).value_or(fallback);
}

double KeyValueFile::GetDouble(const std::string& key, double fallback) const {
  auto value = Find(key);
  if (!value) return fallback;
  try {
    std::size_t used = 0;
    double parsed = std::stod(*value, &used);
    if (used != value->size()) throw std::invalid_argument(*value);
    return parsed;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not a number: " + *value);
  }
}

long KeyValueFile::GetInt(const std::string& key, long fallback) const {
  auto value = Find(key);
  if (!value) return fallback;
  try {
    std::size_t used = 0;
    long parsed = std::stol(*value, &used);
    if (used != value->size()) throw std::invalid_argument(*value);
    return parsed;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not an integer: " + *value);
  }
}

bool KeyValueFile::GetBool(const std::string& key, bool fallback) const {
  auto value = Find(key);
  if (!value) return fallback;
  std::string v = boost::algorithm::to_lower_copy(*value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "' is not a boolean: " + *value);
}

std::vector<std::string> KeyValueFile::GetList(const std::string& key) const {
  std::vector<std::string> items;
  auto value = Find(key);
  if (!value || value->empty()) return items;
  boost::algorithm::split(items, *value, boost::algorithm::is_any_of(","));
  for (auto& item : items) boost::algorithm::trim(item);
  items.erase(std::remove(items.begin(), items.end(), std::string()),
              items.end());
  return items;
}

std::vector<long> KeyValueFile::GetIntList(const std::string& key,
                                           std::vector<long> fallback) const {
  if (!Has(key)) return fallback;
  std::vector<long> out;
  for (const std::string& item : GetList(key)) {
    try {
      out.push_back(std::stol(item));
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' has non-integer item " +
                        item);
    }
  }
  return out;
}

void KeyValueFile::Set(const std::string& key, const std::string& value) {
  tree_.put(key, value);
}

std::string KeyValueFile::ToString() const {
  std::ostringstream out;
  boost::property_tree::ini_parser::write_ini(out, tree_);
  return out.str();
}

}  // namespace tempo
