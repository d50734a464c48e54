// tests/testing-util.h

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

#ifndef JDIAR_TESTS_TESTING_UTIL_H_
#define JDIAR_TESTS_TESTING_UTIL_H_

#include <unistd.h>

#include <filesystem>
#include <string>

#include "jdiar/common.h"
#include "jdiar/tensor.h"

namespace jdiar_test {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string &tag) {
    path_ = (std::filesystem::temp_directory_path() /
             ("jdiar_test_" + tag + "_" + std::to_string(::getpid())))
                .string();
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::string &path() const { return path_; }
  std::string File(const std::string &name) const { return path_ + "/" + name; }

 private:
  std::string path_;
};

inline jdiar::Tensor RandomTensor(jdiar::Rng &rng, std::vector<int> shape,
                                  double lo = -1.0, double hi = 1.0) {
  jdiar::Tensor t(std::move(shape));
  for (size_t i = 0; i < t.size(); ++i) t[i] = rng.Uniform(lo, hi);
  return t;
}

}  // namespace jdiar_test

#endif  // JDIAR_TESTS_TESTING_UTIL_H_
