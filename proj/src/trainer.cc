// src/trainer.cc

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

#include "jdiar/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "jdiar/rttm.h"
#include "jdiar/wav-io.h"

namespace jdiar {

FrameLabels DeriveFrameLabels(const std::vector<SpeakerSegment> &segments,
                              int num_frames, double period_ms,
                              double origin_offset_ms) {
  if (num_frames < 0) throw ContractError("derive_frame_labels: T' < 0");
  FrameLabels labels;
  labels.vad.assign(num_frames, 0);
  labels.osd.assign(num_frames, 0);
  for (int i = 0; i < num_frames; ++i) {
    const double t = (origin_offset_ms + i * period_ms) / 1000.0;
    int active = 0;
    for (const auto &seg : segments) {
      if (t >= seg.onset_s && t < seg.offset_s) ++active;
    }
    labels.vad[i] = active >= 1 ? 1 : 0;
    labels.osd[i] = active >= 2 ? 1 : 0;
  }
  return labels;
}

SpeakerCorpus LoadSpeakerManifest(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open speaker manifest: " + path);
  std::vector<std::pair<std::string, std::string>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError(path + " line " + std::to_string(line_no) +
                        ": expected wav<TAB>speaker_id");
    }
    rows.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  SpeakerCorpus corpus;
  std::map<std::string, int> ids;
  for (const auto &[wav, name] : rows) ids.emplace(name, 0);
  for (auto &[name, id] : ids) {
    id = static_cast<int>(corpus.speaker_names.size());
    corpus.speaker_names.push_back(name);
  }
  for (const auto &[wav, name] : rows) {
    corpus.utterances.push_back({wav, ids[name]});
  }
  return corpus;
}

DiarizedCorpus LoadDiarizedManifest(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open diarized manifest: " + path);
  DiarizedCorpus corpus;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError(path + " line " + std::to_string(line_no) +
                        ": expected wav<TAB>rttm");
    }
    DiarizedRecording rec;
    rec.wav_path = line.substr(0, tab);
    const Annotation ann =
        AnnotationFromRecords(ReadRttmFile(line.substr(tab + 1)));
    rec.segments = ann.segments();
    corpus.recordings.push_back(std::move(rec));
  }
  return corpus;
}

namespace {

// Random fixed-length crop; audio shorter than the crop is used whole.
AudioBuffer CropAudio(const AudioBuffer &audio, double crop_seconds, Rng &rng,
                      double *crop_start_s) {
  const int crop_samples =
      static_cast<int>(std::lround(crop_seconds * audio.sample_rate));
  const int n = static_cast<int>(audio.samples.size());
  if (n <= crop_samples) {
    *crop_start_s = 0.0;
    return audio;
  }
  const int start = static_cast<int>(rng.UniformInt(0, n - crop_samples));
  *crop_start_s = static_cast<double>(start) / audio.sample_rate;
  AudioBuffer out;
  out.sample_rate = audio.sample_rate;
  out.samples.assign(audio.samples.begin() + start,
                     audio.samples.begin() + start + crop_samples);
  return out;
}

std::vector<int> EpochOrder(size_t n, Rng &rng) {
  std::vector<int> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
  for (size_t i = n; i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.UniformInt(0, i - 1));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

struct StepLosses {
  double aam = 0.0, vad = 0.0, osd = 0.0, total = 0.0;
};

// One combined forward/backward/update step. Either corpus slice may be
// empty; losses for absent batches are constants and contribute no
// gradient.
StepLosses TrainStep(JointModel &model, const SpeakerCorpus &speakers,
                     const std::vector<int> &speaker_batch,
                     const DiarizedCorpus &diarized,
                     const std::vector<int> &diarized_batch,
                     const TrainConfig &cfg, const LossWeights &weights,
                     SgdOptimizer &opt, Rng &rng) {
  Tape tape(&model.params());

  Var aam_loss = tape.Constant(Tensor::Scalar(0.0));
  if (!speaker_batch.empty()) {
    Var batch_emb{-1};
    std::vector<int> labels;
    for (const int idx : speaker_batch) {
      const SpeakerUtterance &utt = speakers.utterances[idx];
      double crop_start = 0.0;
      const AudioBuffer audio =
          CropAudio(ReadWav(utt.wav_path), cfg.crop_seconds, rng, &crop_start);
      const FeatureMatrix feats = ComputeLogMel(audio, cfg.mel);
      Var enc = model.EncoderForwardTaped(tape, tape.Constant(feats.values));
      Var emb = model.EmbeddingsTaped(tape, enc);
      const int t_out = tape.value(emb).rows();
      for (int i = 0; i < t_out; ++i) labels.push_back(utt.speaker_id);
      batch_emb = batch_emb.id < 0 ? emb : tape.Concatenate(batch_emb, emb, 0);
    }
    AAMConfig aam;
    aam.scale_s = cfg.aam_scale;
    aam.margin_m = cfg.aam_margin;
    aam.num_classes = model.num_classes();
    aam_loss =
        AamSoftmaxLossTaped(tape, batch_emb, labels, tape.Param("cls.w"), aam);
  }

  Var vad_loss = tape.Constant(Tensor::Scalar(0.0));
  Var osd_loss = tape.Constant(Tensor::Scalar(0.0));
  if (!diarized_batch.empty()) {
    Var vad_probs{-1}, osd_probs{-1};
    std::vector<int> vad_labels, osd_labels, speech_mask;
    for (const int idx : diarized_batch) {
      const DiarizedRecording &rec = diarized.recordings[idx];
      double crop_start = 0.0;
      const AudioBuffer audio =
          CropAudio(ReadWav(rec.wav_path), cfg.crop_seconds, rng, &crop_start);
      const FeatureMatrix feats = ComputeLogMel(audio, cfg.mel);
      Var enc = model.EncoderForwardTaped(tape, tape.Constant(feats.values));
      Var emb = model.EmbeddingsTaped(tape, enc);
      Var vad = model.VadLogitTaped(tape, emb);
      Var osd = model.OsdLogitTaped(tape, emb);
      const int t_out = tape.value(vad).rows();

      std::vector<SpeakerSegment> shifted;
      for (const auto &seg : rec.segments) {
        shifted.push_back(
            {seg.onset_s - crop_start, seg.offset_s - crop_start, seg.speaker});
      }
      const FrameLabels labels =
          DeriveFrameLabels(shifted, t_out, 8.0 * feats.frame_shift_ms,
                            feats.origin_offset_ms);
      for (int i = 0; i < t_out; ++i) {
        vad_labels.push_back(labels.vad[i]);
        osd_labels.push_back(labels.osd[i]);
        speech_mask.push_back(labels.vad[i]);
      }
      vad_probs = vad_probs.id < 0 ? vad : tape.Concatenate(vad_probs, vad, 0);
      osd_probs = osd_probs.id < 0 ? osd : tape.Concatenate(osd_probs, osd, 0);
    }
    vad_loss = VadBceWithLogitsTaped(tape, vad_probs, vad_labels);
    osd_loss = OsdBceWithLogitsTaped(tape, osd_probs, osd_labels, speech_mask);
  }

  Var total = CombinedLossTaped(tape, aam_loss, vad_loss, osd_loss, weights);

  StepLosses losses;
  losses.aam = tape.value(aam_loss)[0];
  losses.vad = tape.value(vad_loss)[0];
  losses.osd = tape.value(osd_loss)[0];
  losses.total = tape.value(total)[0];
  if (!std::isfinite(losses.total)) {
    throw NumericalError("training diverged: non-finite loss");
  }
  tape.Backward(total);
  opt.Step(model.params());
  return losses;
}

std::vector<TrainLogEntry> RunSchedule(JointModel &model,
                                       const SpeakerCorpus &speakers,
                                       const DiarizedCorpus *diarized,
                                       const TrainConfig &cfg, int epochs,
                                       const LossWeights &weights,
                                       const char *stage_name) {
  if (model.mode() != ModelMode::kPerFrame) {
    throw ContractError("training requires a per-frame model");
  }
  if (speakers.NumSpeakers() < 2) {
    throw ContractError("training requires >= 2 speakers");
  }
  Rng rng(cfg.seed);
  SgdOptimizer opt(cfg.learning_rate, cfg.momentum, cfg.weight_decay,
                   cfg.max_grad_norm);
  std::vector<TrainLogEntry> log;

  const int steps_per_epoch = std::max<int>(
      1, static_cast<int>(speakers.utterances.size()) /
             std::max(1, cfg.speaker_batch));
  int diar_cursor = 0;
  std::vector<int> diar_order;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    const std::vector<int> order = EpochOrder(speakers.utterances.size(), rng);
    double epoch_total = 0.0;
    for (int step = 0; step < steps_per_epoch; ++step) {
      std::vector<int> speaker_batch;
      for (int b = 0; b < cfg.speaker_batch; ++b) {
        speaker_batch.push_back(
            order[(step * cfg.speaker_batch + b) % order.size()]);
      }
      std::vector<int> diarized_batch;
      if (diarized != nullptr && !diarized->recordings.empty()) {
        for (int b = 0; b < cfg.diarized_batch; ++b) {
          if (diar_cursor == 0) {
            diar_order = EpochOrder(diarized->recordings.size(), rng);
          }
          diarized_batch.push_back(diar_order[diar_cursor]);
          diar_cursor = (diar_cursor + 1) %
                        static_cast<int>(diarized->recordings.size());
        }
      }
      const StepLosses losses =
          TrainStep(model, speakers, speaker_batch,
                    diarized ? *diarized : DiarizedCorpus(), diarized_batch,
                    cfg, weights, opt, rng);
      log.push_back({epoch, step, losses.aam, losses.vad, losses.osd,
                     losses.total});
      epoch_total += losses.total;
    }
    JD_LOG << stage_name << " epoch " << epoch << " mean loss "
           << epoch_total / steps_per_epoch;
  }
  if (!cfg.log_path.empty()) WriteTrainLog(cfg.log_path, log);
  return log;
}

}  // namespace

std::vector<TrainLogEntry> TrainStage1(JointModel &model,
                                       const SpeakerCorpus &corpus,
                                       const TrainConfig &cfg) {
  LossWeights aam_only;
  aam_only.w_aam = cfg.weights.w_aam;
  aam_only.w_vad = 0.0;
  aam_only.w_osd = 0.0;
  return RunSchedule(model, corpus, nullptr, cfg, cfg.stage1_epochs, aam_only,
                     "stage1");
}

std::vector<TrainLogEntry> TrainStage2(JointModel &model,
                                       const SpeakerCorpus &speakers,
                                       const DiarizedCorpus &diarized,
                                       const TrainConfig &cfg) {
  return RunSchedule(model, speakers, &diarized, cfg, cfg.stage2_epochs,
                     cfg.weights, "stage2");
}

std::vector<TrainLogEntry> FinetuneVadOsd(JointModel &model,
                                          const SpeakerCorpus &speakers,
                                          const DiarizedCorpus &target,
                                          const TrainConfig &cfg) {
  return RunSchedule(model, speakers, &target, cfg, cfg.stage2_epochs,
                     cfg.weights, "finetune");
}

double SpeakerClassificationAccuracy(const JointModel &model,
                                     const SpeakerCorpus &corpus,
                                     const MelConfig &mel) {
  if (corpus.utterances.empty()) return 0.0;
  const Tensor &classifier = model.params().Value("cls.w");
  const Tensor cls_norm = LengthNormalize(classifier);
  int correct = 0;
  for (const auto &utt : corpus.utterances) {
    const FeatureMatrix feats = ComputeLogMel(ReadWav(utt.wav_path), mel);
    const PerFrameOutput out = model.ForwardPerFrame(feats);
    const Tensor emb_norm = LengthNormalize(out.embeddings);
    const Tensor scores = MatMul(emb_norm, cls_norm, /*transpose_b=*/true);
    std::vector<double> mean(scores.cols(), 0.0);
    for (int t = 0; t < scores.rows(); ++t) {
      for (int c = 0; c < scores.cols(); ++c) mean[c] += scores.at(t, c);
    }
    int arg = 0;
    for (int c = 1; c < scores.cols(); ++c) {
      if (mean[c] > mean[arg]) arg = c;
    }
    if (arg == utt.speaker_id) ++correct;
  }
  return static_cast<double>(correct) / corpus.utterances.size();
}

FrameAccuracy EvaluateFrameAccuracy(const JointModel &model,
                                    const DiarizedCorpus &corpus,
                                    const MelConfig &mel) {
  long vad_correct = 0, vad_total = 0, osd_correct = 0, osd_total = 0;
  for (const auto &rec : corpus.recordings) {
    const FeatureMatrix feats = ComputeLogMel(ReadWav(rec.wav_path), mel);
    const PerFrameOutput out = model.ForwardPerFrame(feats);
    const FrameLabels labels =
        DeriveFrameLabels(rec.segments, out.NumFrames(),
                          8.0 * feats.frame_shift_ms, feats.origin_offset_ms);
    for (int i = 0; i < out.NumFrames(); ++i) {
      const int vad_hat = out.vad_prob[i] > 0.5 ? 1 : 0;
      vad_correct += vad_hat == labels.vad[i] ? 1 : 0;
      ++vad_total;
      if (labels.vad[i]) {
        const int osd_hat = out.osd_prob[i] > 0.5 ? 1 : 0;
        osd_correct += osd_hat == labels.osd[i] ? 1 : 0;
        ++osd_total;
      }
    }
  }
  FrameAccuracy acc;
  acc.vad = vad_total ? static_cast<double>(vad_correct) / vad_total : 0.0;
  acc.osd = osd_total ? static_cast<double>(osd_correct) / osd_total : 0.0;
  return acc;
}

PLDAModel TrainPldaOnSpeakerCorpus(const JointModel &model,
                                   const SpeakerCorpus &corpus,
                                   const MelConfig &mel,
                                   const PldaExtractionConfig &cfg) {
  Rng rng(cfg.seed);
  std::map<int, int> taken;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (const auto &utt : corpus.utterances) {
    if (taken[utt.speaker_id] >= cfg.utterances_per_speaker) continue;
    ++taken[utt.speaker_id];
    const AudioBuffer audio = ReadWav(utt.wav_path);
    double crop_start = 0.0;
    const AudioBuffer crop = CropAudio(audio, cfg.crop_seconds, rng, &crop_start);
    const FeatureMatrix feats = ComputeLogMel(crop, mel);
    const PerFrameOutput out = model.ForwardPerFrame(feats);
    const int pick = static_cast<int>(rng.UniformInt(0, out.NumFrames() - 1));
    std::vector<double> row(out.embeddings.cols());
    double norm = 0.0;
    for (int j = 0; j < out.embeddings.cols(); ++j) {
      row[j] = out.embeddings.at(pick, j);
      norm += row[j] * row[j];
    }
    norm = std::sqrt(norm);
    if (norm > 1e-30) {
      for (double &v : row) v /= norm;
    }
    rows.push_back(std::move(row));
    labels.push_back(utt.speaker_id);
  }
  Tensor embeddings(
      {static_cast<int>(rows.size()), model.config().embed_dim});
  for (size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < model.config().embed_dim; ++j) {
      embeddings.at(static_cast<int>(i), j) = rows[i][j];
    }
  }
  return TrainPlda(embeddings, labels).model;
}

void WriteTrainLog(const std::string &path,
                   const std::vector<TrainLogEntry> &entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write train log: " + path);
  out << "epoch,step,l_aam,l_vad,l_osd,total\n";
  char buf[160];
  for (const auto &e : entries) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.9g,%.9g,%.9g,%.9g\n", e.epoch,
                  e.step, e.l_aam, e.l_vad, e.l_osd, e.total);
    out << buf;
  }
}

}  // namespace jdiar
