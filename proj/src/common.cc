// src/common.cc

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

#include "jdiar/common.h"

#include <cstring>
#include <iostream>

namespace jdiar {

LogMessage::LogMessage(LogLevel level, const char *file, int line)
    : level_(level) {
  const char *base = std::strrchr(file, '/');
  stream_ << (level == LogLevel::kWarning ? "WARNING (" : "LOG (")
          << (base ? base + 1 : file) << ":" << line << ") ";
}

LogMessage::~LogMessage() { std::cerr << stream_.str() << std::endl; }

}  // namespace jdiar
