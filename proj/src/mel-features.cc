// src/mel-features.cc

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

#include "jdiar/mel-features.h"

#include <algorithm>
#include <cmath>
#include <complex>

namespace jdiar {

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

void MelConfig::Validate(int sample_rate) const {
  if (num_mels < 1) throw ConfigError("mel: num_mels must be >= 1");
  if (!(fmin_hz > 0.0 && fmin_hz < fmax_hz && fmax_hz <= sample_rate / 2.0)) {
    throw ConfigError("mel: need 0 < fmin < fmax <= sample_rate/2");
  }
  if (frame_shift_ms > frame_length_ms) {
    throw ConfigError("mel: frame shift must not exceed frame length");
  }
  if (log_floor <= 0.0) throw ConfigError("mel: log_floor must be positive");
}

int MelConfig::FrameShiftSamples(int sample_rate) const {
  return static_cast<int>(std::lround(frame_shift_ms * sample_rate / 1000.0));
}

int MelConfig::FrameLengthSamples(int sample_rate) const {
  return static_cast<int>(std::lround(frame_length_ms * sample_rate / 1000.0));
}

namespace {

// Iterative radix-2 FFT; n must be a power of two.
void Fft(std::vector<std::complex<double>> &a) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

size_t NextPowerOfTwo(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Triangular filters with weights computed in the Mel domain.
std::vector<std::vector<double>> BuildMelFilters(const MelConfig &cfg,
                                                 int sample_rate, size_t nfft) {
  const double mel_lo = HzToMel(cfg.fmin_hz);
  const double mel_hi = HzToMel(cfg.fmax_hz);
  const double delta = (mel_hi - mel_lo) / (cfg.num_mels + 1);
  const double bin_width = static_cast<double>(sample_rate) / nfft;
  const size_t num_bins = nfft / 2 + 1;

  std::vector<std::vector<double>> filters(
      cfg.num_mels, std::vector<double>(num_bins, 0.0));
  for (int m = 0; m < cfg.num_mels; ++m) {
    const double left = mel_lo + m * delta;
    const double center = left + delta;
    const double right = center + delta;
    for (size_t k = 0; k < num_bins; ++k) {
      const double mel = HzToMel(bin_width * k);
      if (mel > left && mel < right) {
        filters[m][k] = mel <= center ? (mel - left) / (center - left)
                                      : (right - mel) / (right - center);
      }
    }
  }
  return filters;
}

}  // namespace

FeatureMatrix ComputeLogMel(const AudioBuffer &audio, const MelConfig &cfg) {
  cfg.Validate(audio.sample_rate);
  const int frame_len = cfg.FrameLengthSamples(audio.sample_rate);
  const int frame_shift = cfg.FrameShiftSamples(audio.sample_rate);
  const int n = static_cast<int>(audio.samples.size());
  if (n < frame_len) {
    throw ContractError("audio shorter than one analysis frame");
  }
  const int num_frames = (n - frame_len) / frame_shift + 1;
  const size_t nfft = NextPowerOfTwo(static_cast<size_t>(frame_len));
  const size_t num_bins = nfft / 2 + 1;

  std::vector<double> window(frame_len);
  for (int i = 0; i < frame_len; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / frame_len);
  }
  const auto filters = BuildMelFilters(cfg, audio.sample_rate, nfft);

  FeatureMatrix features;
  features.values = Tensor({num_frames, cfg.num_mels});
  features.frame_shift_ms = cfg.frame_shift_ms;
  features.origin_offset_ms =
      1000.0 * frame_len / (2.0 * audio.sample_rate);

  std::vector<std::complex<double>> buf(nfft);
  std::vector<double> power(num_bins);
  const double log_floor = std::log(cfg.log_floor);
  for (int t = 0; t < num_frames; ++t) {
    const double *frame = audio.samples.data() +
                          static_cast<size_t>(t) * frame_shift;
    for (size_t i = 0; i < nfft; ++i) {
      buf[i] = i < static_cast<size_t>(frame_len)
                   ? std::complex<double>(frame[i] * window[i], 0.0)
                   : std::complex<double>(0.0, 0.0);
    }
    Fft(buf);
    for (size_t k = 0; k < num_bins; ++k) power[k] = std::norm(buf[k]);
    for (int m = 0; m < cfg.num_mels; ++m) {
      double energy = 0.0;
      const auto &filt = filters[m];
      for (size_t k = 0; k < num_bins; ++k) energy += filt[k] * power[k];
      features.values.at(t, m) =
          energy > cfg.log_floor ? std::log(energy) : log_floor;
    }
  }
  return features;
}

}  // namespace jdiar
