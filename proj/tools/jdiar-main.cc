// tools/jdiar-main.cc

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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "jdiar/archive.h"
#include "jdiar/config-file.h"
#include "jdiar/joint-model.h"
#include "jdiar/pipeline.h"
#include "jdiar/plda.h"
#include "jdiar/rttm.h"
#include "jdiar/synthetic.h"
#include "jdiar/trainer.h"
#include "jdiar/vbx.h"
#include "jdiar/wav-io.h"

namespace {

using namespace jdiar;

// All tunables live in one `key = value` config file; command-line flags
// cover paths and the seed.
struct Settings {
  MelConfig mel;
  EncoderConfig encoder;
  TrainConfig train;
  VBxConfig vbx;
  BinarizeConfig binarize;
  CorpusConfig corpus;
  int plda_utterances_per_speaker = 12;
  double plda_crop_seconds = 6.0;
  uint64_t seed = 7;
};

Settings LoadSettings(const std::string &config_path, uint64_t seed_override,
                      bool have_seed) {
  Settings s;
  KeyValueConfig cfg;
  if (!config_path.empty()) cfg = KeyValueConfig::FromFile(config_path);

  s.mel.num_mels = cfg.GetInt("mel.num_mels", s.mel.num_mels);
  s.mel.fmin_hz = cfg.GetDouble("mel.fmin_hz", s.mel.fmin_hz);
  s.mel.fmax_hz = cfg.GetDouble("mel.fmax_hz", s.mel.fmax_hz);
  s.mel.log_floor = cfg.GetDouble("mel.log_floor", s.mel.log_floor);

  s.encoder.input_dim = s.mel.num_mels;
  s.encoder.context_frames =
      cfg.GetInt("encoder.context_frames", s.encoder.context_frames);
  s.encoder.hidden_dims =
      cfg.GetIntList("encoder.hidden_dims", s.encoder.hidden_dims);
  s.encoder.embed_dim = cfg.GetInt("encoder.embed_dim", s.encoder.embed_dim);
  s.encoder.input_offset =
      cfg.GetDouble("encoder.input_offset", s.encoder.input_offset);
  s.encoder.input_scale =
      cfg.GetDouble("encoder.input_scale", s.encoder.input_scale);

  s.train.learning_rate =
      cfg.GetDouble("train.learning_rate", s.train.learning_rate);
  s.train.momentum = cfg.GetDouble("train.momentum", s.train.momentum);
  s.train.weight_decay =
      cfg.GetDouble("train.weight_decay", s.train.weight_decay);
  s.train.max_grad_norm =
      cfg.GetDouble("train.max_grad_norm", s.train.max_grad_norm);
  s.train.speaker_batch = cfg.GetInt("train.speaker_batch", s.train.speaker_batch);
  s.train.diarized_batch =
      cfg.GetInt("train.diarized_batch", s.train.diarized_batch);
  s.train.stage1_epochs = cfg.GetInt("train.stage1_epochs", s.train.stage1_epochs);
  s.train.stage2_epochs = cfg.GetInt("train.stage2_epochs", s.train.stage2_epochs);
  s.train.crop_seconds = cfg.GetDouble("train.crop_seconds", s.train.crop_seconds);
  s.train.aam_scale = cfg.GetDouble("train.aam_scale", s.train.aam_scale);
  s.train.aam_margin = cfg.GetDouble("train.aam_margin", s.train.aam_margin);
  s.train.weights.w_aam = cfg.GetDouble("train.w_aam", s.train.weights.w_aam);
  s.train.weights.w_vad = cfg.GetDouble("train.w_vad", s.train.weights.w_vad);
  s.train.weights.w_osd = cfg.GetDouble("train.w_osd", s.train.weights.w_osd);
  s.train.mel = s.mel;

  s.vbx.fa = cfg.GetDouble("vbx.fa", s.vbx.fa);
  s.vbx.fb = cfg.GetDouble("vbx.fb", s.vbx.fb);
  s.vbx.ploop = cfg.GetDouble("vbx.ploop", s.vbx.ploop);
  s.vbx.latent_dim = cfg.GetInt("vbx.latent_dim", s.vbx.latent_dim);
  s.vbx.max_iters = cfg.GetInt("vbx.max_iters", s.vbx.max_iters);
  s.vbx.elbo_tol = cfg.GetDouble("vbx.elbo_tol", s.vbx.elbo_tol);
  s.vbx.min_speaker_mass =
      cfg.GetDouble("vbx.min_speaker_mass", s.vbx.min_speaker_mass);
  s.vbx.ahc_threshold = cfg.GetDouble("vbx.ahc_threshold", s.vbx.ahc_threshold);

  s.binarize.vad_threshold =
      cfg.GetDouble("binarize.vad_threshold", s.binarize.vad_threshold);
  s.binarize.osd_threshold =
      cfg.GetDouble("binarize.osd_threshold", s.binarize.osd_threshold);
  s.binarize.min_speech_s =
      cfg.GetDouble("binarize.min_speech_s", s.binarize.min_speech_s);
  s.binarize.min_silence_s =
      cfg.GetDouble("binarize.min_silence_s", s.binarize.min_silence_s);
  s.binarize.min_overlap_s =
      cfg.GetDouble("binarize.min_overlap_s", s.binarize.min_overlap_s);

  s.corpus.num_speakers = cfg.GetInt("corpus.num_speakers", s.corpus.num_speakers);
  s.corpus.utterances_per_speaker = cfg.GetInt("corpus.utterances_per_speaker",
                                               s.corpus.utterances_per_speaker);
  s.corpus.utterance_duration_s = cfg.GetDouble("corpus.utterance_duration_s",
                                                s.corpus.utterance_duration_s);
  s.corpus.num_train_conversations = cfg.GetInt(
      "corpus.num_train_conversations", s.corpus.num_train_conversations);
  s.corpus.num_eval_conversations = cfg.GetInt("corpus.num_eval_conversations",
                                               s.corpus.num_eval_conversations);
  s.corpus.train_conversation_s = cfg.GetDouble("corpus.train_conversation_s",
                                                s.corpus.train_conversation_s);
  s.corpus.eval_conversation_s =
      cfg.GetDouble("corpus.eval_conversation_s", s.corpus.eval_conversation_s);
  s.corpus.conversation_speakers = cfg.GetInt("corpus.conversation_speakers",
                                              s.corpus.conversation_speakers);
  s.corpus.conversation.silence_ratio = cfg.GetDouble(
      "conversation.silence_ratio", s.corpus.conversation.silence_ratio);
  s.corpus.conversation.single_ratio = cfg.GetDouble(
      "conversation.single_ratio", s.corpus.conversation.single_ratio);
  s.corpus.conversation.overlap_ratio = cfg.GetDouble(
      "conversation.overlap_ratio", s.corpus.conversation.overlap_ratio);
  s.corpus.conversation.turn_lognormal_mu = cfg.GetDouble(
      "conversation.turn_lognormal_mu", s.corpus.conversation.turn_lognormal_mu);
  s.corpus.conversation.turn_lognormal_sigma =
      cfg.GetDouble("conversation.turn_lognormal_sigma",
                    s.corpus.conversation.turn_lognormal_sigma);

  s.plda_utterances_per_speaker = cfg.GetInt("plda.utterances_per_speaker",
                                             s.plda_utterances_per_speaker);
  s.plda_crop_seconds = cfg.GetDouble("plda.crop_seconds", s.plda_crop_seconds);

  s.seed = cfg.GetU64("seed", s.seed);
  if (have_seed) s.seed = seed_override;
  s.train.seed = s.seed;
  s.corpus.seed = s.seed;
  return s;
}

std::string FileStem(const std::string &path) {
  return std::filesystem::path(path).stem().string();
}

ExtractionArchive ExtractArchive(const JointModel &model, const std::string &wav,
                                 const MelConfig &mel) {
  const FeatureMatrix feats = ComputeLogMel(ReadWav(wav), mel);
  return ExtractionArchive::FromOutput(model.ForwardPerFrame(feats));
}

void PrintScoreReport(const ScoreReport &report, const std::string &csv_path) {
  std::printf("%-24s %8s %8s %8s %8s %10s\n", "file", "DER", "miss", "FA",
              "conf", "ref_s");
  for (const auto &fs : report.files) {
    std::printf("%-24s %8.2f %8.2f %8.2f %8.2f %10.2f\n", fs.file_id.c_str(),
                fs.der.der_pct, fs.der.miss_pct, fs.der.fa_pct, fs.der.conf_pct,
                fs.der.ref_speech_s);
  }
  std::printf("%-24s %8.2f %8.2f %8.2f %8.2f %10.2f\n", "ALL",
              report.corpus.der_pct, report.corpus.miss_pct,
              report.corpus.fa_pct, report.corpus.conf_pct,
              report.corpus.ref_speech_s);
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path, std::ios::trunc);
    if (!csv) throw IoError("cannot write score csv: " + csv_path);
    csv << "file,der,miss,fa,conf,ref_speech_s\n";
    char buf[256];
    for (const auto &fs : report.files) {
      std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                    fs.file_id.c_str(), fs.der.der_pct, fs.der.miss_pct,
                    fs.der.fa_pct, fs.der.conf_pct, fs.der.ref_speech_s);
      csv << buf;
    }
    std::snprintf(buf, sizeof(buf), "ALL,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                  report.corpus.der_pct, report.corpus.miss_pct,
                  report.corpus.fa_pct, report.corpus.conf_pct,
                  report.corpus.ref_speech_s);
    csv << buf;
  }
}

int RunCli(int argc, char **argv) {
  CLI::App app{"joint per-frame speaker embedding, VAD and OSD diarization"};
  app.require_subcommand(1);

  std::string config_path;
  uint64_t seed_override = 0;
  bool have_seed = false;
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--seed", seed_override, "override the configured seed")
      ->each([&have_seed](const std::string &) { have_seed = true; });

  auto *simulate = app.add_subcommand(
      "simulate", "render a synthetic training and evaluation corpus");
  std::string sim_out;
  simulate->add_option("--out", sim_out, "output directory")->required();

  auto *train = app.add_subcommand(
      "train", "two-stage training of the joint model, plus PLDA");
  std::string tr_speakers, tr_diarized, tr_out, tr_init, tr_plda_out, tr_log,
      tr_stage = "all";
  train->add_option("--speaker-manifest", tr_speakers,
                    "wav<TAB>speaker_id manifest")
      ->required();
  train->add_option("--diarized-manifest", tr_diarized,
                    "wav<TAB>rttm manifest (stages 2/finetune)");
  train->add_option("--out", tr_out, "output model checkpoint")->required();
  train->add_option("--init", tr_init, "initial model checkpoint");
  train->add_option("--stage", tr_stage, "all | 1 | 2 | finetune");
  train->add_option("--plda-out", tr_plda_out, "train a PLDA on the result");
  train->add_option("--log", tr_log, "training log CSV");

  auto *extract = app.add_subcommand(
      "extract", "single-pass per-frame embedding + VAD + OSD extraction");
  std::string ex_model, ex_wav, ex_out;
  extract->add_option("--model", ex_model, "model checkpoint")->required();
  extract->add_option("--wav", ex_wav, "input recording")->required();
  extract->add_option("--out", ex_out, "output archive")->required();

  auto *diarize =
      app.add_subcommand("diarize", "cluster an extracted archive into RTTM");
  std::string di_archive, di_plda, di_out, di_file_id;
  bool di_no_overlap = false;
  diarize->add_option("--archive", di_archive, "extraction archive")->required();
  diarize->add_option("--plda", di_plda, "PLDA model")->required();
  diarize->add_option("--out", di_out, "output RTTM")->required();
  diarize->add_option("--file-id", di_file_id, "RTTM file id");
  diarize->add_flag("--no-overlap", di_no_overlap,
                    "skip second-speaker assignment");

  auto *run = app.add_subcommand("run", "extract and diarize in one go");
  std::string run_model, run_plda, run_wav, run_out, run_file_id;
  bool run_no_overlap = false;
  run->add_option("--model", run_model, "model checkpoint")->required();
  run->add_option("--plda", run_plda, "PLDA model")->required();
  run->add_option("--wav", run_wav, "input recording")->required();
  run->add_option("--out", run_out, "output RTTM")->required();
  run->add_option("--file-id", run_file_id, "RTTM file id");
  run->add_flag("--no-overlap", run_no_overlap,
                "skip second-speaker assignment");

  auto *score = app.add_subcommand("score", "collar-free DER scoring");
  std::string sc_ref, sc_hyp, sc_csv;
  score->add_option("--ref", sc_ref, "reference RTTM")->required();
  score->add_option("--hyp", sc_hyp, "hypothesis RTTM")->required();
  score->add_option("--csv", sc_csv, "per-file CSV report");

  auto *benchmark = app.add_subcommand(
      "benchmark", "per-segment sliding-window vs single-pass extraction");
  std::string bm_model, bm_wav;
  double bm_segment = 1.5, bm_shift = 0.25;
  benchmark->add_option("--model", bm_model,
                        "per-segment model checkpoint (a seeded random model "
                        "is used when omitted)");
  benchmark->add_option("--wav", bm_wav, "input recording")->required();
  benchmark->add_option("--segment", bm_segment, "window length in seconds");
  benchmark->add_option("--shift", bm_shift, "window shift in seconds");

  auto *grid = app.add_subcommand(
      "grid-search", "exhaustive VBx hyperparameter search by DER");
  std::vector<std::string> gs_archives, gs_refs;
  std::string gs_plda, gs_out, gs_csv;
  std::vector<double> gs_fa = {0.1, 0.3, 1.0};
  std::vector<double> gs_fb = {2.0, 8.0};
  std::vector<double> gs_ploop = {0.5, 0.9, 0.99};
  std::vector<double> gs_tau = {-2.0, 0.0, 2.0};
  grid->add_option("--archive", gs_archives, "dev archives")->required();
  grid->add_option("--ref", gs_refs, "dev reference RTTMs")->required();
  grid->add_option("--plda", gs_plda, "PLDA model")->required();
  grid->add_option("--out", gs_out, "best configuration file");
  grid->add_option("--csv", gs_csv, "all grid points CSV");
  grid->add_option("--fa", gs_fa, "fa grid")->delimiter(',');
  grid->add_option("--fb", gs_fb, "fb grid")->delimiter(',');
  grid->add_option("--ploop", gs_ploop, "ploop grid")->delimiter(',');
  grid->add_option("--tau", gs_tau, "AHC threshold grid")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  const Settings settings = LoadSettings(config_path, seed_override, have_seed);

  if (simulate->parsed()) {
    const CorpusPaths paths = SimulateCorpus(sim_out, settings.corpus);
    std::printf("speaker_manifest %s\n", paths.speaker_manifest.c_str());
    std::printf("diarized_manifest %s\n", paths.diarized_manifest.c_str());
    for (size_t i = 0; i < paths.eval_wavs.size(); ++i) {
      std::printf("eval %s %s\n", paths.eval_wavs[i].c_str(),
                  paths.eval_rttms[i].c_str());
    }
    return 0;
  }

  if (train->parsed()) {
    const SpeakerCorpus speakers = LoadSpeakerManifest(tr_speakers);
    TrainConfig cfg = settings.train;
    cfg.log_path = tr_log;
    JointModel model;
    if (!tr_init.empty()) {
      model = JointModel::Load(tr_init);
      if (model.mode() == ModelMode::kPerSegment) {
        model = model.ConvertToPerFrame(settings.seed);
      }
    } else {
      model = JointModel::Create(settings.encoder, ModelMode::kPerFrame,
                                 speakers.NumSpeakers(), settings.seed);
    }
    const bool want_stage1 = tr_stage == "all" || tr_stage == "1";
    const bool want_stage2 = tr_stage == "all" || tr_stage == "2";
    const bool want_finetune = tr_stage == "finetune";
    if (!want_stage1 && !want_stage2 && !want_finetune) {
      throw ConfigError("train: unknown --stage '" + tr_stage + "'");
    }
    if ((want_stage2 || want_finetune) && tr_diarized.empty()) {
      throw ConfigError("train: stage 2 / finetune needs --diarized-manifest");
    }
    if (want_stage1) TrainStage1(model, speakers, cfg);
    if (want_stage2) {
      TrainStage2(model, speakers, LoadDiarizedManifest(tr_diarized), cfg);
    }
    if (want_finetune) {
      FinetuneVadOsd(model, speakers, LoadDiarizedManifest(tr_diarized), cfg);
    }
    model.Save(tr_out);
    if (!tr_plda_out.empty()) {
      PldaExtractionConfig plda_cfg;
      plda_cfg.crop_seconds = settings.plda_crop_seconds;
      plda_cfg.utterances_per_speaker = settings.plda_utterances_per_speaker;
      plda_cfg.seed = settings.seed ^ 0x9e3779b97f4a7c15ULL;
      TrainPldaOnSpeakerCorpus(model, speakers, settings.mel, plda_cfg)
          .Save(tr_plda_out);
    }
    return 0;
  }

  if (extract->parsed()) {
    const JointModel model = JointModel::Load(ex_model);
    ExtractArchive(model, ex_wav, settings.mel).Save(ex_out);
    return 0;
  }

  if (diarize->parsed() || run->parsed()) {
    const bool fused = run->parsed();
    const std::string plda_path = fused ? run_plda : di_plda;
    const std::string out_path = fused ? run_out : di_out;
    std::string file_id = fused ? run_file_id : di_file_id;
    ExtractionArchive archive;
    if (fused) {
      const JointModel model = JointModel::Load(run_model);
      archive = ExtractArchive(model, run_wav, settings.mel);
      if (file_id.empty()) file_id = FileStem(run_wav);
    } else {
      archive = ExtractionArchive::Load(di_archive);
      if (file_id.empty()) file_id = FileStem(di_archive);
    }
    DiarizeOptions options;
    options.vbx = settings.vbx;
    options.binarize = settings.binarize;
    options.handle_overlap = fused ? !run_no_overlap : !di_no_overlap;
    const Annotation annotation =
        RunDiarization(archive, PLDAModel::Load(plda_path), options);
    WriteRttmFile(out_path, RecordsFromAnnotation(annotation, file_id));
    return 0;
  }

  if (score->parsed()) {
    const ScoreReport report =
        ScoreRecords(ReadRttmFile(sc_ref), ReadRttmFile(sc_hyp));
    PrintScoreReport(report, sc_csv);
    return 0;
  }

  if (benchmark->parsed()) {
    JointModel model;
    if (!bm_model.empty()) {
      model = JointModel::Load(bm_model);
      if (model.mode() != ModelMode::kPerSegment) {
        throw ConfigError("benchmark needs a per-segment model checkpoint");
      }
    } else {
      model = JointModel::Create(settings.encoder, ModelMode::kPerSegment, 2,
                                 settings.seed);
    }
    const AudioBuffer audio = ReadWav(bm_wav);
    const BenchmarkReport report =
        BenchmarkExtraction(audio, settings.mel, model, bm_segment, bm_shift);
    std::printf("per_segment_windows %ld\n", report.per_segment_windows);
    std::printf("per_segment_encoder_passes %ld\n",
                report.per_segment_encoder_passes);
    std::printf("per_segment_seconds %.3f\n", report.per_segment_seconds);
    std::printf("per_frame_encoder_passes %ld\n", report.per_frame_encoder_passes);
    std::printf("per_frame_seconds %.3f\n", report.per_frame_seconds);
    std::printf("speedup %.2fx\n", report.per_segment_seconds /
                                       std::max(report.per_frame_seconds, 1e-9));
    return 0;
  }

  if (grid->parsed()) {
    if (gs_archives.size() != gs_refs.size() || gs_archives.empty()) {
      throw ConfigError("grid-search: --archive and --ref counts must match");
    }
    const PLDAModel plda = PLDAModel::Load(gs_plda);
    std::vector<ExtractionArchive> archives;
    std::vector<Annotation> refs;
    for (size_t i = 0; i < gs_archives.size(); ++i) {
      archives.push_back(ExtractionArchive::Load(gs_archives[i]));
      refs.push_back(AnnotationFromRecords(ReadRttmFile(gs_refs[i])));
    }
    const GridSearchResult result = GridSearchHyperparams(
        settings.vbx, gs_fa, gs_fb, gs_ploop, gs_tau,
        static_cast<int>(archives.size()),
        [&](int rec, const VBxConfig &cfg) {
          DiarizeOptions options;
          options.vbx = cfg;
          options.binarize = settings.binarize;
          return ComputeDer(refs[rec],
                            RunDiarization(archives[rec], plda, options));
        });
    std::printf("best fa=%g fb=%g ploop=%g tau=%g der=%.3f\n", result.best.fa,
                result.best.fb, result.best.ploop, result.best.ahc_threshold,
                result.best_der_pct);
    if (!gs_out.empty()) {
      std::ofstream out(gs_out, std::ios::trunc);
      if (!out) throw IoError("cannot write best config: " + gs_out);
      out << "vbx.fa = " << result.best.fa << "\n";
      out << "vbx.fb = " << result.best.fb << "\n";
      out << "vbx.ploop = " << result.best.ploop << "\n";
      out << "vbx.ahc_threshold = " << result.best.ahc_threshold << "\n";
    }
    if (!gs_csv.empty()) {
      std::ofstream csv(gs_csv, std::ios::trunc);
      if (!csv) throw IoError("cannot write grid csv: " + gs_csv);
      csv << "fa,fb,ploop,tau,der\n";
      for (const auto &point : result.evaluated) {
        csv << point.config.fa << "," << point.config.fb << ","
            << point.config.ploop << "," << point.config.ahc_threshold << ","
            << point.der_pct << "\n";
      }
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  try {
    return RunCli(argc, argv);
  } catch (const jdiar::ConfigError &e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 1;
  } catch (const jdiar::IoError &e) {
    std::cerr << "i/o error: " << e.what() << std::endl;
    return 2;
  } catch (const jdiar::FormatError &e) {
    std::cerr << "parse error: " << e.what() << std::endl;
    return 2;
  } catch (const jdiar::Error &e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 3;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 3;
  }
}
