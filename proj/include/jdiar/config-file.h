// include/jdiar/config-file.h

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

#ifndef JDIAR_CONFIG_FILE_H_
#define JDIAR_CONFIG_FILE_H_

#include <map>
#include <string>
#include <vector>

#include "jdiar/common.h"

namespace jdiar {

// `key = value` lines; `#` starts a comment; blank lines ignored.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig FromFile(const std::string &path);
  static KeyValueConfig FromString(const std::string &text);

  bool Has(const std::string &key) const { return values_.count(key) > 0; }
  std::string GetString(const std::string &key, const std::string &dflt) const;
  double GetDouble(const std::string &key, double dflt) const;
  int GetInt(const std::string &key, int dflt) const;
  uint64_t GetU64(const std::string &key, uint64_t dflt) const;
  bool GetBool(const std::string &key, bool dflt) const;
  std::vector<double> GetDoubleList(const std::string &key,
                                    const std::vector<double> &dflt) const;
  std::vector<int> GetIntList(const std::string &key,
                              const std::vector<int> &dflt) const;

  const std::map<std::string, std::string> &values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace jdiar

#endif  // JDIAR_CONFIG_FILE_H_
