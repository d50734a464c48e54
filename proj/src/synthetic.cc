// src/synthetic.cc

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

#include "jdiar/synthetic.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "jdiar/rttm.h"

namespace jdiar {

SyntheticSpeaker SampleSpeaker(uint64_t seed) {
  Rng rng(seed);
  SyntheticSpeaker spk;
  spk.seed = seed;
  spk.f0_hz = rng.Uniform(85.0, 255.0);
  // Disjoint ranges keep the formants strictly increasing.
  spk.formants_hz[0] = rng.Uniform(260.0, 850.0);
  spk.formants_hz[1] = rng.Uniform(900.0, 2300.0);
  spk.formants_hz[2] = rng.Uniform(2400.0, 3400.0);
  for (int i = 0; i < 3; ++i) {
    spk.bandwidths_hz[i] = rng.Uniform(60.0, 160.0);
  }
  spk.tilt = rng.Uniform(0.05, 0.45);
  spk.jitter = rng.Uniform(0.004, 0.02);
  return spk;
}

AudioBuffer RenderUtterance(const SyntheticSpeaker &speaker, double duration_s,
                            uint64_t seed) {
  if (duration_s < 0.2) {
    throw ContractError("render_utterance: duration must be >= 0.2 s");
  }
  Rng rng(seed);
  const int n = static_cast<int>(std::lround(duration_s * kSampleRate));
  AudioBuffer audio;
  audio.samples.assign(n, 0.0);

  // Slow pitch wobble: a sine LFO with per-utterance rate and phase.
  const double wobble_hz = rng.Uniform(2.5, 7.0);
  const double wobble_phase = rng.Uniform(0.0, 2.0 * M_PI);

  // Articulation-like movement: each formant drifts around its center and
  // the amplitude pulses at a syllabic rate, so frames of one speaker vary
  // while the long-term identity stays put.
  double drift_hz[3], drift_phase[3];
  for (int f = 0; f < 3; ++f) {
    drift_hz[f] = rng.Uniform(0.8, 2.8);
    drift_phase[f] = rng.Uniform(0.0, 2.0 * M_PI);
  }
  const double formant_depth = 0.10;
  const double syllable_hz = rng.Uniform(2.5, 4.5);
  const double syllable_phase = rng.Uniform(0.0, 2.0 * M_PI);

  double a1[3], a2[3], g[3];
  double z1[3] = {0, 0, 0}, z2[3] = {0, 0, 0};
  double lp = 0.0;
  double phase = rng.Uniform(0.0, 1.0);

  // Resonator coefficients refreshed every 4 ms.
  const int update_every = 64;
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kSampleRate;
    if (i % update_every == 0) {
      for (int f = 0; f < 3; ++f) {
        const double freq =
            speaker.formants_hz[f] *
            (1.0 + formant_depth *
                       std::sin(2.0 * M_PI * drift_hz[f] * t + drift_phase[f]));
        const double r =
            std::exp(-M_PI * speaker.bandwidths_hz[f] / kSampleRate);
        const double omega = 2.0 * M_PI * freq / kSampleRate;
        a1[f] = 2.0 * r * std::cos(omega);
        a2[f] = -r * r;
        g[f] = 1.0 - r;
      }
    }
    const double f0 =
        speaker.f0_hz *
        (1.0 + speaker.jitter * std::sin(2.0 * M_PI * wobble_hz * t + wobble_phase));
    phase += f0 / kSampleRate;
    phase -= std::floor(phase);
    double x = 2.0 * phase - 1.0;                 // sawtooth source
    x += 0.01 * (2.0 * rng.Uniform() - 1.0);      // light aspiration noise
    for (int f = 0; f < 3; ++f) {
      const double y = g[f] * x + a1[f] * z1[f] + a2[f] * z2[f];
      z2[f] = z1[f];
      z1[f] = y;
      x = y;
    }
    lp = (1.0 - speaker.tilt) * x + speaker.tilt * lp;
    const double env =
        0.85 + 0.15 * std::sin(2.0 * M_PI * syllable_hz * t + syllable_phase);
    audio.samples[i] = lp * env;
  }

  // 10 ms raised-cosine fades against clicks at turn edges.
  const int fade = std::min(n / 2, kSampleRate / 100);
  for (int i = 0; i < fade; ++i) {
    const double w = 0.5 - 0.5 * std::cos(M_PI * i / fade);
    audio.samples[i] *= w;
    audio.samples[n - 1 - i] *= w;
  }

  double peak = 0.0;
  for (double v : audio.samples) peak = std::max(peak, std::fabs(v));
  if (peak > 0.0) {
    const double scale = 0.5 / peak;
    for (double &v : audio.samples) v *= scale;
  }
  return audio;
}

void ConversationConfig::Validate() const {
  if (num_speakers < 1) throw ConfigError("conversation: need >= 1 speaker");
  if (total_duration_s <= 0.0) {
    throw ConfigError("conversation: duration must be positive");
  }
  if (silence_ratio < 0.0 || single_ratio < 0.0 || overlap_ratio < 0.0) {
    throw ConfigError("conversation: ratios must be non-negative");
  }
  if (std::fabs(silence_ratio + single_ratio + overlap_ratio - 1.0) > 1e-6) {
    throw ConfigError("conversation: ratios must sum to 1");
  }
  if (overlap_ratio > 0.0 && num_speakers < 2) {
    throw ConfigError("conversation: overlap requires >= 2 speakers");
  }
  if (!(min_turn_s > 0.0 && min_turn_s <= max_turn_s)) {
    throw ConfigError("conversation: bad turn length bounds");
  }
}

Conversation GenerateConversation(const std::vector<SyntheticSpeaker> &speakers,
                                  const std::vector<std::string> &speaker_names,
                                  const ConversationConfig &cfg) {
  cfg.Validate();
  if (speakers.size() != speaker_names.size()) {
    throw ContractError("conversation: speaker/name count mismatch");
  }
  if (static_cast<int>(speakers.size()) != cfg.num_speakers) {
    throw ContractError("conversation: speaker count does not match config");
  }
  Rng rng(cfg.seed);

  struct Turn {
    double onset = 0.0, offset = 0.0;
    int speaker = 0;
    uint64_t seed = 0;
  };
  std::vector<Turn> turns;

  double sum_turns = 0.0;    // speaker-seconds
  double sum_overlap = 0.0;  // two-speaker seconds
  int prev_speaker = -1;
  double prev_onset = 0.0, prev_end = 0.0, prev_prev_end = 0.0;

  // First turn starts after a short lead-in pause.
  double next_onset = std::min(rng.Exponential(cfg.gap_mean_s),
                               cfg.total_duration_s / 2.0);
  uint64_t turn_index = 0;
  while (prev_end < cfg.total_duration_s) {
    double dur = std::clamp(
        rng.LogNormal(cfg.turn_lognormal_mu, cfg.turn_lognormal_sigma),
        cfg.min_turn_s, cfg.max_turn_s);
    int speaker = 0;
    if (cfg.num_speakers > 1) {
      speaker = static_cast<int>(rng.UniformInt(0, cfg.num_speakers - 2));
      if (speaker >= prev_speaker && prev_speaker >= 0) ++speaker;
    }

    double onset = next_onset;
    double overlap_here = 0.0;
    if (!turns.empty()) {
      // Closed-loop steering: the lag of each component behind its target,
      // in seconds, sizes the next gap or overlap, so realized ratios track
      // the targets to within a turn length.
      const double len = prev_end;
      const double occupied = sum_turns - sum_overlap;
      const double silence_lag =
          cfg.silence_ratio * len - std::max(0.0, len - occupied);
      const double overlap_lag = cfg.overlap_ratio * len - sum_overlap;
      const bool can_overlap =
          cfg.num_speakers > 1 && cfg.overlap_ratio > 0.0 && speaker != prev_speaker;
      if (can_overlap && overlap_lag >= silence_lag) {
        double shift = std::max(overlap_lag, 0.05) * rng.Uniform(0.7, 1.3);
        // Keep overlaps pairwise: the new turn must start after the turn
        // before the previous one ended, and end inside at most one other
        // turn.
        const double bound =
            0.9 * std::min(prev_end - std::max(prev_onset, prev_prev_end), dur);
        shift = std::min(shift, std::max(bound, 0.0));
        if (shift > 0.02) {
          onset = prev_end - shift;
          overlap_here = shift;
        } else {
          onset = prev_end + 0.05;
        }
      } else {
        const double gap = std::min(
            std::max(silence_lag, 0.05) * rng.Uniform(0.7, 1.3), 4.0);
        onset = prev_end + gap;
      }
    }
    if (onset >= cfg.total_duration_s) break;

    Turn turn;
    turn.onset = onset;
    turn.offset = onset + dur;
    turn.speaker = speaker;
    turn.seed = rng.ForkSeed(turn_index++);
    turns.push_back(turn);

    sum_turns += dur;
    sum_overlap += overlap_here;
    prev_prev_end = prev_end;
    prev_onset = onset;
    prev_end = std::max(prev_end, turn.offset);
    prev_speaker = speaker;
    next_onset = prev_end;
  }

  Conversation conv;
  const int total_samples =
      static_cast<int>(std::lround(cfg.total_duration_s * kSampleRate));
  conv.audio.samples.assign(total_samples, 0.0);

  for (const Turn &turn : turns) {
    const double clipped_off = std::min(turn.offset, cfg.total_duration_s);
    if (clipped_off - turn.onset < 0.05) continue;
    AudioBuffer utt =
        RenderUtterance(speakers[turn.speaker], turn.offset - turn.onset, turn.seed);
    const int start = static_cast<int>(std::lround(turn.onset * kSampleRate));
    const int count =
        std::min(static_cast<int>(utt.samples.size()), total_samples - start);
    for (int i = 0; i < count; ++i) conv.audio.samples[start + i] += utt.samples[i];
    conv.segments.push_back(
        {turn.onset, clipped_off, speaker_names[turn.speaker]});
  }
  return conv;
}

TimelineRatios MeasureRatios(const std::vector<SpeakerSegment> &segments,
                             double total_duration_s) {
  const double step = 0.01;
  const int n = static_cast<int>(std::lround(total_duration_s / step));
  int silence = 0, single = 0, overlap = 0;
  for (int i = 0; i < n; ++i) {
    const double t = (i + 0.5) * step;
    int active = 0;
    for (const auto &seg : segments) {
      if (t >= seg.onset_s && t < seg.offset_s) ++active;
    }
    if (active == 0) {
      ++silence;
    } else if (active == 1) {
      ++single;
    } else {
      ++overlap;
    }
  }
  TimelineRatios out;
  if (n > 0) {
    out.silence = static_cast<double>(silence) / n;
    out.single = static_cast<double>(single) / n;
    out.overlap = static_cast<double>(overlap) / n;
  }
  return out;
}

namespace {

std::string IndexName(const char *prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%03d", prefix, i);
  return buf;
}

// Samples a conversation pool whose fundamentals are pairwise separated
// by at least min_ratio; deterministic in (rng, stream_base).
std::vector<SyntheticSpeaker> SamplePool(Rng &rng, uint64_t stream_base,
                                         int count, double min_ratio) {
  std::vector<SyntheticSpeaker> pool;
  uint64_t attempt = 0;
  while (static_cast<int>(pool.size()) < count && attempt < 1000) {
    const SyntheticSpeaker cand =
        SampleSpeaker(rng.ForkSeed(stream_base + attempt));
    ++attempt;
    bool ok = true;
    for (const auto &other : pool) {
      const double hi = std::max(cand.f0_hz, other.f0_hz);
      const double lo = std::min(cand.f0_hz, other.f0_hz);
      if (hi / lo < min_ratio) {
        ok = false;
        break;
      }
    }
    if (ok) pool.push_back(cand);
  }
  if (static_cast<int>(pool.size()) < count) {
    throw ConfigError("cannot sample a conversation pool with the requested f0 separation");
  }
  return pool;
}

}  // namespace

CorpusPaths SimulateCorpus(const std::string &out_dir, const CorpusConfig &cfg) {
  namespace fs = std::filesystem;
  Rng rng(cfg.seed);
  CorpusPaths paths;
  paths.root = out_dir;
  fs::create_directories(out_dir);
  fs::create_directories(out_dir + "/speakers");
  fs::create_directories(out_dir + "/train");
  fs::create_directories(out_dir + "/eval");

  // Training speakers and their single-speaker utterances.
  std::ofstream spk_manifest(out_dir + "/speaker_manifest.tsv");
  if (!spk_manifest) throw IoError("cannot write speaker manifest");
  for (int s = 0; s < cfg.num_speakers; ++s) {
    const SyntheticSpeaker spk = SampleSpeaker(rng.ForkSeed(1000 + s));
    const std::string spk_name = IndexName("spk", s);
    fs::create_directories(out_dir + "/speakers/" + spk_name);
    for (int u = 0; u < cfg.utterances_per_speaker; ++u) {
      const AudioBuffer utt = RenderUtterance(
          spk, cfg.utterance_duration_s, rng.ForkSeed(100000 + s * 1000 + u));
      const std::string wav =
          out_dir + "/speakers/" + spk_name + "/" + IndexName("utt", u) + ".wav";
      WriteWav(wav, utt);
      spk_manifest << wav << "\t" << spk_name << "\n";
    }
  }
  paths.speaker_manifest = out_dir + "/speaker_manifest.tsv";

  auto make_conversation = [&](const std::string &stem, double duration,
                               uint64_t seed,
                               const std::vector<SyntheticSpeaker> &pool,
                               const std::vector<std::string> &pool_names) {
    ConversationConfig conv_cfg = cfg.conversation;
    conv_cfg.total_duration_s = duration;
    conv_cfg.num_speakers = static_cast<int>(pool.size());
    conv_cfg.seed = seed;
    Conversation conv = GenerateConversation(pool, pool_names, conv_cfg);
    WriteWav(stem + ".wav", conv.audio);
    const std::string file_id = fs::path(stem).filename().string();
    WriteRttmFile(stem + ".rttm",
                  RecordsFromAnnotation(Annotation(conv.segments), file_id));
  };

  // Diarization-annotated conversations. Their speakers are disjoint from
  // the speaker-classification corpus, the way a compound diarization set
  // brings its own unlabeled voices; this also keeps the VAD/OSD heads
  // honest on speakers the classifier never saw.
  std::ofstream diar_manifest(out_dir + "/diarized_manifest.tsv");
  if (!diar_manifest) throw IoError("cannot write diarized manifest");
  for (int c = 0; c < cfg.num_train_conversations; ++c) {
    const std::vector<SyntheticSpeaker> pool = SamplePool(
        rng, 700000 + static_cast<uint64_t>(c) * 1000,
        cfg.conversation_speakers, cfg.min_f0_ratio);
    std::vector<std::string> names;
    for (int j = 0; j < cfg.conversation_speakers; ++j) {
      names.push_back(IndexName("spk", j));
    }
    const std::string stem = out_dir + "/train/" + IndexName("conv", c);
    make_conversation(stem, cfg.train_conversation_s, rng.ForkSeed(5000 + c),
                      pool, names);
    diar_manifest << stem << ".wav\t" << stem << ".rttm\n";
  }
  paths.diarized_manifest = out_dir + "/diarized_manifest.tsv";

  // Held-out conversations between fresh speakers.
  for (int c = 0; c < cfg.num_eval_conversations; ++c) {
    const std::vector<SyntheticSpeaker> pool = SamplePool(
        rng, 900000 + static_cast<uint64_t>(c) * 1000,
        cfg.conversation_speakers, cfg.min_f0_ratio);
    std::vector<std::string> names;
    for (int j = 0; j < cfg.conversation_speakers; ++j) {
      names.push_back(IndexName("spk", j));
    }
    const std::string stem = out_dir + "/eval/" + IndexName("conv", c);
    make_conversation(stem, cfg.eval_conversation_s, rng.ForkSeed(6000 + c),
                      pool, names);
    paths.eval_wavs.push_back(stem + ".wav");
    paths.eval_rttms.push_back(stem + ".rttm");
  }
  return paths;
}

}  // namespace jdiar
