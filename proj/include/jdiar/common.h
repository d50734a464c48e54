// include/jdiar/common.h

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

#ifndef JDIAR_COMMON_H_
#define JDIAR_COMMON_H_

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace jdiar {

// Error taxonomy. The CLI maps these onto exit codes: config/usage
// problems exit 1, I/O and parse problems exit 2, numerical failures
// (divergence, singular matrices, shape violations) exit 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed input bytes or text (WAV headers, RTTM lines, archives).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values or infeasible option combinations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Shape mismatch between tensors or matrices.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A precondition of an operation was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, singular matrices, diverged optimization.
class NumericalError : public Error {
 public:
  using Error::Error;
};

enum class LogLevel { kInfo, kWarning };

// Streams one line to stderr when destroyed, Kaldi-style:
//   JD_WARN << "ridge added to within-class covariance";
class LogMessage {
 public:
  LogMessage(LogLevel level, const char *file, int line);
  ~LogMessage();
  std::ostringstream &Stream() { return stream_; }

 private:
  LogLevel level_;
  std::ostringstream stream_;
};

#define JD_LOG jdiar::LogMessage(jdiar::LogLevel::kInfo, __FILE__, __LINE__).Stream()
#define JD_WARN \
  jdiar::LogMessage(jdiar::LogLevel::kWarning, __FILE__, __LINE__).Stream()

// Deterministic PRNG (splitmix64 core). All randomness in the project
// flows through this type so that results depend only on explicit seeds,
// never on library-version details of <random> distributions.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t NextU64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double Uniform() {
    return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
  }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Inclusive integer range.
  int64_t UniformInt(int64_t lo, int64_t hi) {
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int64_t>(NextU64() % span);
  }

  double Normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = Uniform();
    double u2 = Uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    cached_ = r * std::sin(2.0 * M_PI * u2);
    have_cached_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  double Normal(double mean, double stddev) { return mean + stddev * Normal(); }

  double LogNormal(double mu, double sigma) {
    return std::exp(mu + sigma * Normal());
  }

  double Exponential(double mean) {
    double u = 0.0;
    while (u <= 0.0) u = Uniform();
    return -mean * std::log(u);
  }

  // Derived independent stream; used to give every item (speaker,
  // utterance, conversation) its own reproducible seed.
  uint64_t ForkSeed(uint64_t stream) {
    uint64_t z = (state_ ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  uint64_t state_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

inline void CheckFinite(double v, const char *what) {
  if (!std::isfinite(v)) {
    throw NumericalError(std::string("non-finite value in ") + what);
  }
}

}  // namespace jdiar

#endif  // JDIAR_COMMON_H_
