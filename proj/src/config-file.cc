// src/config-file.cc

// Copyright 2026  Jdiar Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "jdiar/config-file.h"

#include <fstream>
#include <sstream>

namespace jdiar {

namespace {

std::string Trim(const std::string &s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::FromFile(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return FromString(ss.str());
  } catch (const FormatError &e) {
    throw FormatError(path + ": " + e.what());
  }
}

KeyValueConfig KeyValueConfig::FromString(const std::string &text) {
  KeyValueConfig cfg;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    if (key.empty()) {
      throw FormatError("config line " + std::to_string(line_no) +
                        ": empty key");
    }
    cfg.values_[key] = value;
  }
  return cfg;
}

std::string KeyValueConfig::GetString(const std::string &key,
                                      const std::string &dflt) const {
  auto it = values_.find(key);
  return it == values_.end() ? dflt : it->second;
}

double KeyValueConfig::GetDouble(const std::string &key, double dflt) const {
  auto it = values_.find(key);
  if (it == values_.end()) return dflt;
  try {
    return std::stod(it->second);
  } catch (const std::exception &) {
    throw ConfigError("config key '" + key + "': bad number '" + it->second +
                      "'");
  }
}

int KeyValueConfig::GetInt(const std::string &key, int dflt) const {
  auto it = values_.find(key);
  if (it == values_.end()) return dflt;
  try {
    return std::stoi(it->second);
  } catch (const std::exception &) {
    throw ConfigError("config key '" + key + "': bad integer '" + it->second +
                      "'");
  }
}

uint64_t KeyValueConfig::GetU64(const std::string &key, uint64_t dflt) const {
  auto it = values_.find(key);
  if (it == values_.end()) return dflt;
  try {
    return std::stoull(it->second);
  } catch (const std::exception &) {
    throw ConfigError("config key '" + key + "': bad integer '" + it->second +
                      "'");
  }
}

bool KeyValueConfig::GetBool(const std::string &key, bool dflt) const {
  auto it = values_.find(key);
  if (it == values_.end()) return dflt;
  const std::string &v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': bad boolean '" + v + "'");
}

std::vector<double> KeyValueConfig::GetDoubleList(
    const std::string &key, const std::vector<double> &dflt) const {
  auto it = values_.find(key);
  if (it == values_.end()) return dflt;
  std::vector<double> out;
  std::istringstream is(it->second);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception &) {
      throw ConfigError("config key '" + key + "': bad number '" + tok + "'");
    }
  }
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

std::vector<int> KeyValueConfig::GetIntList(const std::string &key,
                                            const std::vector<int> &dflt) const {
  auto it = values_.find(key);
  if (it == values_.end()) return dflt;
  std::vector<int> out;
  std::istringstream is(it->second);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception &) {
      throw ConfigError("config key '" + key + "': bad integer '" + tok + "'");
    }
  }
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

}  // namespace jdiar
