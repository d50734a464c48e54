// src/joint-model.cc

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

#include "jdiar/joint-model.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace jdiar {

void EncoderConfig::Validate() const {
  if (input_dim < 1) throw ConfigError("encoder: input_dim must be >= 1");
  if (context_frames < 0) throw ConfigError("encoder: context_frames >= 0");
  if (hidden_dims.empty()) throw ConfigError("encoder: need hidden layers");
  for (int d : hidden_dims) {
    if (d < 1) throw ConfigError("encoder: hidden dims must be >= 1");
  }
  if (subsample_factor != 8) {
    // 8 x 10 ms input shift = one output every 80 ms.
    throw ConfigError("encoder: subsample_factor is fixed to 8");
  }
  if (embed_dim < 1) throw ConfigError("encoder: embed_dim must be >= 1");
  if (!(input_scale > 0.0)) {
    throw ConfigError("encoder: input_scale must be positive");
  }
}

std::string EncoderConfig::HiddenDimsString() const {
  std::ostringstream os;
  for (size_t i = 0; i < hidden_dims.size(); ++i) {
    if (i) os << ",";
    os << hidden_dims[i];
  }
  return os.str();
}

std::string ModeName(ModelMode mode) {
  return mode == ModelMode::kPerSegment ? "per_segment" : "per_frame";
}

namespace {

Tensor UniformInit(Rng &rng, int rows, int cols) {
  Tensor t({rows, cols});
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  for (size_t i = 0; i < t.size(); ++i) t[i] = rng.Uniform(-bound, bound);
  return t;
}

}  // namespace

JointModel JointModel::Create(const EncoderConfig &cfg, ModelMode mode,
                              int num_classes, uint64_t seed) {
  cfg.Validate();
  if (num_classes < 1) throw ConfigError("model: num_classes must be >= 1");
  JointModel model;
  model.cfg_ = cfg;
  model.mode_ = mode;
  model.num_classes_ = num_classes;
  model.seed_ = seed;

  Rng rng(seed);
  int in_dim = (2 * cfg.context_frames + 1) * cfg.input_dim;
  for (size_t l = 0; l < cfg.hidden_dims.size(); ++l) {
    const int out_dim = cfg.hidden_dims[l];
    const std::string prefix = "enc.l" + std::to_string(l);
    model.params_.Create(prefix + ".w", UniformInit(rng, in_dim, out_dim));
    model.params_.Create(prefix + ".b", Tensor({out_dim}));
    in_dim = out_dim;
  }
  model.InitHeads(rng);
  return model;
}

void JointModel::InitHeads(Rng &rng) {
  const int hidden = cfg_.LastHiddenDim();
  if (mode_ == ModelMode::kPerSegment) {
    // Projection consumes the pooled mean||std vector.
    params_.Create("proj.w", UniformInit(rng, 2 * hidden, cfg_.embed_dim));
    params_.Create("proj.b", Tensor({cfg_.embed_dim}));
  } else {
    params_.Create("proj.w", UniformInit(rng, hidden, cfg_.embed_dim));
    params_.Create("proj.b", Tensor({cfg_.embed_dim}));
    params_.Create("vad.w", UniformInit(rng, cfg_.embed_dim, 1));
    params_.Create("vad.b", Tensor({1}));
    params_.Create("osd.w", UniformInit(rng, cfg_.embed_dim, 1));
    params_.Create("osd.b", Tensor({1}));
  }
  params_.Create("cls.w", UniformInit(rng, num_classes_, cfg_.embed_dim));
}

Tensor JointModel::EncoderForward(const Tensor &features,
                                  ForwardStats *stats) const {
  if (features.cols() != cfg_.input_dim) {
    throw DimensionError("encoder: feature dim " +
                         std::to_string(features.cols()) + " != input_dim " +
                         std::to_string(cfg_.input_dim));
  }
  if (stats != nullptr) ++stats->encoder_passes;
  Tensor offset(features.shape());
  for (size_t i = 0; i < offset.size(); ++i) offset[i] = -cfg_.input_offset;
  Tensor h = Scale(Add(features, offset), 1.0 / cfg_.input_scale);
  h = FrameStack(h, cfg_.context_frames, cfg_.subsample_factor);
  for (size_t l = 0; l < cfg_.hidden_dims.size(); ++l) {
    const std::string prefix = "enc.l" + std::to_string(l);
    h = Relu(Add(MatMul(h, params_.Value(prefix + ".w")),
                 params_.Value(prefix + ".b")));
  }
  return h;
}

PerFrameOutput JointModel::ForwardPerFrame(const FeatureMatrix &features,
                                           ForwardStats *stats) const {
  if (mode_ != ModelMode::kPerFrame) {
    throw ContractError("forward_per_frame requires a per-frame model");
  }
  if (features.NumFrames() < cfg_.subsample_factor) {
    throw ContractError("forward_per_frame: input shorter than one output frame");
  }
  Tensor h = EncoderForward(features.values, stats);
  Tensor emb = Add(MatMul(h, params_.Value("proj.w")), params_.Value("proj.b"));
  Tensor vad = Sigmoid(Add(MatMul(emb, params_.Value("vad.w")),
                           params_.Value("vad.b")));
  Tensor osd = Sigmoid(Add(MatMul(emb, params_.Value("osd.w")),
                           params_.Value("osd.b")));

  PerFrameOutput out;
  const int t_out = emb.rows();
  out.embeddings = std::move(emb);
  out.vad_prob.resize(t_out);
  out.osd_prob.resize(t_out);
  out.timestamps_s.resize(t_out);
  for (int i = 0; i < t_out; ++i) {
    out.vad_prob[i] = vad[i];
    out.osd_prob[i] = osd[i];
    out.timestamps_s[i] = features.FrameTimeSeconds(i * cfg_.subsample_factor);
  }
  return out;
}

std::pair<int, int> JointModel::FrameRange(const FeatureMatrix &features,
                                           double start_s, double end_s) const {
  const double shift_s = features.frame_shift_ms / 1000.0;
  const double origin_s = features.origin_offset_ms / 1000.0;
  int first = static_cast<int>(std::ceil((start_s - origin_s) / shift_s - 1e-9));
  first = std::max(first, 0);
  int last = static_cast<int>(std::floor((end_s - origin_s) / shift_s - 1e-9));
  last = std::min(last, features.NumFrames() - 1);
  if (last < first) return {first, 0};
  return {first, last - first + 1};
}

std::vector<double> JointModel::ForwardPerSegment(const FeatureMatrix &features,
                                                  double start_s, double end_s,
                                                  ForwardStats *stats) const {
  if (mode_ != ModelMode::kPerSegment) {
    throw ContractError("forward_per_segment requires a per-segment model");
  }
  auto [first, count] = FrameRange(features, start_s, end_s);
  if (count < cfg_.subsample_factor) {
    throw ContractError("forward_per_segment: empty or too-short segment");
  }
  Tensor slice({count, features.Dim()});
  std::memcpy(slice.data(),
              features.values.data() +
                  static_cast<size_t>(first) * features.Dim(),
              sizeof(double) * slice.size());
  Tensor h = EncoderForward(slice, stats);
  Tensor pooled = Concatenate(MeanOverTime(h), StdOverTime(h), 1);
  Tensor emb =
      Add(MatMul(pooled, params_.Value("proj.w")), params_.Value("proj.b"));
  return emb.values();
}

JointModel JointModel::ConvertToPerFrame(uint64_t head_seed) const {
  if (mode_ != ModelMode::kPerSegment) {
    throw ContractError("convert: model is already per-frame");
  }
  JointModel out;
  out.cfg_ = cfg_;
  out.mode_ = ModelMode::kPerFrame;
  out.num_classes_ = num_classes_;
  out.seed_ = head_seed;
  for (const auto &e : params_.entries()) {
    if (e.name.rfind("enc.", 0) == 0) {
      out.params_.Create(e.name, e.value);
    }
  }
  Rng rng(head_seed);
  out.InitHeads(rng);
  return out;
}

Var JointModel::EncoderForwardTaped(Tape &tape, Var features) const {
  Tensor offset(tape.value(features).shape());
  for (size_t i = 0; i < offset.size(); ++i) offset[i] = -cfg_.input_offset;
  Var h = tape.Scale(tape.Add(features, tape.Constant(std::move(offset))),
                     1.0 / cfg_.input_scale);
  h = tape.FrameStack(h, cfg_.context_frames, cfg_.subsample_factor);
  for (size_t l = 0; l < cfg_.hidden_dims.size(); ++l) {
    const std::string prefix = "enc.l" + std::to_string(l);
    h = tape.Relu(tape.Add(tape.MatMul(h, tape.Param(prefix + ".w")),
                           tape.Param(prefix + ".b")));
  }
  return h;
}

Var JointModel::EmbeddingsTaped(Tape &tape, Var encoder_out) const {
  if (mode_ != ModelMode::kPerFrame) {
    throw ContractError("per-frame embeddings require a per-frame model");
  }
  return tape.Add(tape.MatMul(encoder_out, tape.Param("proj.w")),
                  tape.Param("proj.b"));
}

Var JointModel::VadLogitTaped(Tape &tape, Var embeddings) const {
  return tape.Add(tape.MatMul(embeddings, tape.Param("vad.w")),
                  tape.Param("vad.b"));
}

Var JointModel::OsdLogitTaped(Tape &tape, Var embeddings) const {
  return tape.Add(tape.MatMul(embeddings, tape.Param("osd.w")),
                  tape.Param("osd.b"));
}

Var JointModel::VadProbTaped(Tape &tape, Var embeddings) const {
  return tape.Sigmoid(VadLogitTaped(tape, embeddings));
}

Var JointModel::OsdProbTaped(Tape &tape, Var embeddings) const {
  return tape.Sigmoid(OsdLogitTaped(tape, embeddings));
}

namespace {

constexpr char kModelMagic[4] = {'J', 'D', 'M', 'X'};
constexpr uint32_t kModelVersion = 1;

void WriteU32(std::ostream &os, uint32_t v) {
  os.write(reinterpret_cast<const char *>(&v), 4);
}

uint32_t ReadU32Stream(std::istream &is, const char *what) {
  uint32_t v = 0;
  if (!is.read(reinterpret_cast<char *>(&v), 4)) {
    throw FormatError(std::string("model checkpoint truncated reading ") + what);
  }
  return v;
}

void WriteString(std::ostream &os, const std::string &s) {
  WriteU32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string ReadString(std::istream &is, const char *what) {
  uint32_t len = ReadU32Stream(is, what);
  std::string s(len, '\0');
  if (!is.read(s.data(), len)) {
    throw FormatError(std::string("model checkpoint truncated reading ") + what);
  }
  return s;
}

}  // namespace

void JointModel::Save(const std::string &path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write model checkpoint: " + path);
  os.write(kModelMagic, 4);
  WriteU32(os, kModelVersion);

  std::ostringstream cfg;
  cfg << "mode = " << ModeName(mode_) << "\n";
  cfg << "input_dim = " << cfg_.input_dim << "\n";
  cfg << "context_frames = " << cfg_.context_frames << "\n";
  cfg << "hidden_dims = " << cfg_.HiddenDimsString() << "\n";
  cfg << "subsample_factor = " << cfg_.subsample_factor << "\n";
  cfg << "embed_dim = " << cfg_.embed_dim << "\n";
  char norm_buf[96];
  std::snprintf(norm_buf, sizeof(norm_buf), "input_offset = %.17g\ninput_scale = %.17g\n",
                cfg_.input_offset, cfg_.input_scale);
  cfg << norm_buf;
  cfg << "num_classes = " << num_classes_ << "\n";
  cfg << "seed = " << seed_ << "\n";
  WriteString(os, cfg.str());

  WriteU32(os, static_cast<uint32_t>(params_.entries().size()));
  for (const auto &e : params_.entries()) {
    WriteString(os, e.name);
    WriteU32(os, static_cast<uint32_t>(e.value.shape().size()));
    for (int d : e.value.shape()) WriteU32(os, static_cast<uint32_t>(d));
    os.write(reinterpret_cast<const char *>(e.value.data()),
             static_cast<std::streamsize>(e.value.size() * sizeof(double)));
  }
  if (!os) throw IoError("short write to model checkpoint: " + path);
}

JointModel JointModel::Load(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open model checkpoint: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kModelMagic, 4) != 0) {
    throw FormatError("bad model checkpoint magic in " + path);
  }
  uint32_t version = ReadU32Stream(is, "version");
  if (version != kModelVersion) {
    throw FormatError("unsupported model checkpoint version " +
                      std::to_string(version));
  }

  JointModel model;
  std::istringstream cfg(ReadString(is, "config"));
  std::string line;
  while (std::getline(cfg, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string &s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t") + 1);
    };
    trim(key);
    trim(value);
    if (key == "mode") {
      model.mode_ = value == "per_frame" ? ModelMode::kPerFrame
                                         : ModelMode::kPerSegment;
    } else if (key == "input_dim") {
      model.cfg_.input_dim = std::stoi(value);
    } else if (key == "context_frames") {
      model.cfg_.context_frames = std::stoi(value);
    } else if (key == "hidden_dims") {
      model.cfg_.hidden_dims.clear();
      std::istringstream dims(value);
      std::string tok;
      while (std::getline(dims, tok, ',')) {
        model.cfg_.hidden_dims.push_back(std::stoi(tok));
      }
    } else if (key == "subsample_factor") {
      model.cfg_.subsample_factor = std::stoi(value);
    } else if (key == "embed_dim") {
      model.cfg_.embed_dim = std::stoi(value);
    } else if (key == "input_offset") {
      model.cfg_.input_offset = std::stod(value);
    } else if (key == "input_scale") {
      model.cfg_.input_scale = std::stod(value);
    } else if (key == "num_classes") {
      model.num_classes_ = std::stoi(value);
    } else if (key == "seed") {
      model.seed_ = std::stoull(value);
    }
  }
  model.cfg_.Validate();

  uint32_t num_tensors = ReadU32Stream(is, "tensor count");
  for (uint32_t i = 0; i < num_tensors; ++i) {
    std::string name = ReadString(is, "tensor name");
    uint32_t ndim = ReadU32Stream(is, "tensor rank");
    std::vector<int> shape(ndim);
    for (uint32_t d = 0; d < ndim; ++d) {
      shape[d] = static_cast<int>(ReadU32Stream(is, "tensor dim"));
    }
    Tensor t(shape);
    if (!is.read(reinterpret_cast<char *>(t.data()),
                 static_cast<std::streamsize>(t.size() * sizeof(double)))) {
      throw FormatError("model checkpoint truncated reading tensor " + name);
    }
    model.params_.Create(name, std::move(t));
  }
  return model;
}

}  // namespace jdiar
