#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "fseg/error.hpp"
#include "fseg/imaging.hpp"
#include "fseg/neuralnet.hpp"
#include "fseg/priors.hpp"
#include "fseg/proposals.hpp"
#include "fseg/random.hpp"
#include "fseg/sections.hpp"
#include "fseg/segface.hpp"
#include "fseg/segments.hpp"
#include "fseg/text.hpp"

namespace fseg {

/// A run of 3x3 'same' convolutions (each followed by ReLU), optionally
/// closed by a 2x2 max pool.
struct ConvBlock {
  std::vector<int> channels;
  bool pool = true;

  friend bool operator==(const ConvBlock&, const ConvBlock&) = default;
};

struct NetworkConfig {
  Scale scale = Scale::Toy;
  int in_channels = 1;
  std::vector<ConvBlock> column;
  int reduce_maps = 8;
  int fc_units = 64;
  int classes = 2;
  double mean = 117.0;  // subtracted from every channel, 0-255 scale
  SegmentLayout layout = default_layout(Scale::Toy);

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// Thirteen VGG16 convolutions in five pooled blocks, 50-map reduction, fc-250.
inline NetworkConfig full_preset() {
  NetworkConfig c;
  c.scale = Scale::Full;
  c.in_channels = 3;
  c.column = {{{64, 64}, true}, {{128, 128}, true}, {{256, 256, 256}, true}, {{512, 512, 512}, true}, {{512, 512, 512}, true}};
  c.reduce_maps = 50;
  c.fc_units = 250;
  c.layout = default_layout(Scale::Full);
  return c;
}

inline NetworkConfig toy_preset() {
  NetworkConfig c;
  c.scale = Scale::Toy;
  c.in_channels = 1;
  c.column = {{{8}, true}, {{16}, true}};
  c.reduce_maps = 8;
  c.fc_units = 64;
  c.layout = default_layout(Scale::Toy);
  return c;
}

inline NetworkConfig preset(Scale s) { return s == Scale::Full ? full_preset() : toy_preset(); }

/// Shape chain of one segment column.
struct ColumnShape {
  int in_c, in_h, in_w;
  int feat_c, feat_h, feat_w;
  int reduce_c, reduce_h, reduce_w;
  int flatten;
};

inline ColumnShape column_shape(const NetworkConfig& cfg, SegmentKind kind) {
  const auto& spec = cfg.layout[kind];
  ColumnShape s{};
  s.in_c = cfg.in_channels;
  s.in_h = spec.canon_h;
  s.in_w = spec.canon_w;
  int c = s.in_c, h = s.in_h, w = s.in_w;
  for (const auto& b : cfg.column) {
    for (int ch : b.channels) {
      if (ch < 1) fail(ErrorKind::ConfigShapeError, std::string(name_of(kind)) + ": conv channels must be positive");
      c = ch;
    }
    if (b.pool) {
      if (h < 2 || w < 2)
        fail(ErrorKind::ConfigShapeError, std::string(name_of(kind)) + ": feature map " + std::to_string(h) + "x" +
                                              std::to_string(w) + " too small to pool");
      h /= 2;
      w /= 2;
    }
  }
  s.feat_c = c;
  s.feat_h = h;
  s.feat_w = w;
  s.reduce_c = cfg.reduce_maps;
  s.reduce_h = h;
  s.reduce_w = w;
  s.flatten = cfg.reduce_maps * h * w;
  if (s.flatten < 1) fail(ErrorKind::ConfigShapeError, std::string(name_of(kind)) + ": empty feature grid");
  return s;
}

inline int concat_dim(const NetworkConfig& cfg) {
  int total = 0;
  for (SegmentKind k : kAllKinds) total += column_shape(cfg, k).flatten;
  return total;
}

// Flatten sizes the full-scale preset must reproduce, in kind order.
inline constexpr std::array<int, kNumSegments> kFullScaleFlatten = {200, 250, 800, 800, 900, 1200, 450, 900, 900};

inline void validate(const NetworkConfig& cfg) {
  if (cfg.in_channels < 1) fail(ErrorKind::ConfigShapeError, "in_channels must be positive");
  if (cfg.reduce_maps < 1 || cfg.fc_units < 1) fail(ErrorKind::ConfigShapeError, "reduce_maps and fc_units must be positive");
  if (cfg.classes != 2) fail(ErrorKind::ConfigShapeError, "the head must have exactly two classes");
  validate(cfg.layout);
  for (SegmentKind k : kAllKinds) {
    const auto s = column_shape(cfg, k);
    if (cfg.scale == Scale::Full && s.flatten != kFullScaleFlatten[static_cast<std::size_t>(index_of(k))])
      fail(ErrorKind::ConfigShapeError, std::string(name_of(k)) + ": full-scale flatten " + std::to_string(s.flatten) +
                                            " != " + std::to_string(kFullScaleFlatten[static_cast<std::size_t>(index_of(k))]));
  }
}

template <typename T>
struct BasicDeepSegFace {
  NetworkConfig config;
  std::array<nn::Sequential<T>, kNumSegments> columns;
  std::array<nn::Sequential<T>, kNumSegments> reduce;
  nn::Sequential<T> head;
  PriorTable priors;

  const SegmentLayout& layout() const { return config.layout; }

  std::vector<nn::Param<T>*> column_params() {
    std::vector<nn::Param<T>*> out;
    for (auto& c : columns)
      for (auto* p : c.params()) out.push_back(p);
    return out;
  }

  std::vector<nn::Param<T>*> trainable_params(bool freeze_columns) {
    std::vector<nn::Param<T>*> out;
    if (!freeze_columns) out = column_params();
    for (auto& r : reduce)
      for (auto* p : r.params()) out.push_back(p);
    for (auto* p : head.params()) out.push_back(p);
    return out;
  }

  void zero_grad() {
    for (auto* p : trainable_params(false)) p->grad.fill(T(0));
  }
};

using DeepSegFaceModel = BasicDeepSegFace<float>;

template <typename T = float>
BasicDeepSegFace<T> build_network(const NetworkConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  BasicDeepSegFace<T> m;
  m.config = cfg;
  Rng rng(seed);
  for (SegmentKind k : kAllKinds) {
    auto& col = m.columns[static_cast<std::size_t>(index_of(k))];
    int c = cfg.in_channels;
    for (const auto& b : cfg.column) {
      for (int ch : b.channels) {
        col.layers.emplace_back(nn::Conv2d<T>(3, 3, c, ch, 1));
        col.layers.emplace_back(nn::Relu{});
        c = ch;
      }
      if (b.pool) col.layers.emplace_back(nn::MaxPool2{});
    }
    auto& red = m.reduce[static_cast<std::size_t>(index_of(k))];
    red.layers.emplace_back(nn::Conv2d<T>(1, 1, c, cfg.reduce_maps, 0));
    red.layers.emplace_back(nn::Relu{});
    for (auto& l : col.layers) nn::init_layer(l, rng);
    for (auto& l : red.layers) nn::init_layer(l, rng);
  }
  m.head.layers.emplace_back(nn::Dense<T>(concat_dim(cfg), cfg.fc_units));
  m.head.layers.emplace_back(nn::Relu{});
  m.head.layers.emplace_back(nn::Dense<T>(cfg.fc_units, cfg.classes));
  m.head.layers.emplace_back(nn::Softmax{});
  for (auto& l : m.head.layers) nn::init_layer(l, rng);
  return m;
}

/// Crop, resample to the canonical size, subtract the configured mean and
/// replicate across input channels.
template <typename T>
nn::Tensor<T> segment_input(const GrayImageF& image, const SegmentDetection& det, const NetworkConfig& cfg) {
  const GrayImageF patch = segment_patch(image, det, cfg.layout);
  nn::Tensor<T> t(cfg.in_channels, patch.height, patch.width);
  const double mean = cfg.mean / 255.0;
  const std::size_t plane = patch.data.size();
  for (int c = 0; c < cfg.in_channels; ++c)
    for (std::size_t i = 0; i < plane; ++i)
      t.data[static_cast<std::size_t>(c) * plane + i] = static_cast<T>(patch.data[i] - mean);
  return t;
}

template <typename T>
nn::Tensor<T> zero_input(const NetworkConfig& cfg, SegmentKind k) {
  const auto& s = cfg.layout[k];
  return nn::Tensor<T>(cfg.in_channels, s.canon_h, s.canon_w);
}

/// Per-proposal network inputs, one optional tensor per kind.
template <typename T>
using ProposalInputs = std::array<std::optional<nn::Tensor<T>>, kNumSegments>;

template <typename T>
ProposalInputs<T> proposal_inputs(const BasicDeepSegFace<T>& model, const Proposal& p, const GrayImageF& image) {
  ProposalInputs<T> in;
  for (SegmentKind k : kAllKinds)
    if (p.has(k)) in[static_cast<std::size_t>(index_of(k))] = segment_input<T>(image, p.at(k), model.config);
  return in;
}

/// Softmax output for prepared inputs; absent kinds get an all-zero tensor.
template <typename T>
nn::Tensor<T> forward_inputs(const BasicDeepSegFace<T>& model, const ProposalInputs<T>& in) {
  const int dim = concat_dim(model.config);
  nn::Tensor<T> concat = nn::Tensor<T>::flat(dim);
  std::size_t off = 0;
  for (SegmentKind k : kAllKinds) {
    const auto ki = static_cast<std::size_t>(index_of(k));
    const nn::Tensor<T> x = in[ki] ? *in[ki] : zero_input<T>(model.config, k);
    const auto feat = model.reduce[ki].output(model.columns[ki].output(x));
    std::copy(feat.data.begin(), feat.data.end(), concat.data.begin() + static_cast<std::ptrdiff_t>(off));
    off += feat.size();
  }
  return model.head.output(concat);
}

/// (p_face, p_nonface) for a proposal.
template <typename T>
std::pair<double, double> forward_proposal(const BasicDeepSegFace<T>& model, const Proposal& p, const GrayImageF& image) {
  const auto probs = forward_inputs(model, proposal_inputs(model, p, image));
  return {static_cast<double>(probs[0]), static_cast<double>(probs[1])};
}

struct NetTrainParams {
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int epochs = 10;
  int batch = 32;
  std::uint64_t seed = 1;
  bool freeze_columns = false;
};

struct TrainTrace {
  std::vector<double> epoch_loss;
};

namespace detail {

struct NetSample {
  std::array<int, kNumSegments> input{};  // index into the input cache, -1 when absent
  int label = 0;                          // 0 = face, 1 = non-face
};

// Cycles through a seeded permutation of indices, reshuffling on wrap.
struct Cycler {
  std::vector<std::size_t> idx;
  std::size_t pos = 0;

  std::size_t next(Rng& rng) {
    if (pos == 0) rng.shuffle(idx);
    const std::size_t v = idx[pos];
    pos = (pos + 1) % idx.size();
    return v;
  }
};

}  // namespace detail

/// Loss and gradient accumulation for one batch of prepared samples. Items are
/// processed in order; absent-segment columns see the same zero tensor, so
/// their upstream gradients are summed and backpropagated once per batch.
template <typename T>
double accumulate_batch(BasicDeepSegFace<T>& model, const std::vector<nn::Tensor<T>>& cache,
                        const std::vector<detail::NetSample>& samples, const std::vector<std::size_t>& batch,
                        bool freeze_columns) {
  const auto& cfg = model.config;
  const int dim = concat_dim(cfg);
  std::array<int, kNumSegments> offset{}, width{};
  {
    int off = 0;
    for (SegmentKind k : kAllKinds) {
      const auto ki = static_cast<std::size_t>(index_of(k));
      offset[ki] = off;
      width[ki] = column_shape(cfg, k).flatten;
      off += width[ki];
    }
  }

  struct ZeroPath {
    std::vector<nn::Tensor<T>> col, red;
    nn::Tensor<T> grad;
    bool used = false;
  };
  std::array<ZeroPath, kNumSegments> zero;
  for (std::size_t ki = 0; ki < static_cast<std::size_t>(kNumSegments); ++ki) {
    bool any = false;
    for (std::size_t b : batch) any |= samples[b].input[ki] < 0;
    if (!any) continue;
    auto& z = zero[ki];
    z.used = true;
    z.col = model.columns[ki].forward(zero_input<T>(cfg, kAllKinds[ki]));
    z.red = model.reduce[ki].forward(z.col.back());
    z.grad = nn::Tensor<T>(z.red.back().c, z.red.back().h, z.red.back().w);
  }

  double loss = 0.0;
  for (std::size_t b : batch) {
    const auto& s = samples[b];
    std::array<std::vector<nn::Tensor<T>>, kNumSegments> col_acts, red_acts;
    nn::Tensor<T> concat = nn::Tensor<T>::flat(dim);
    for (std::size_t ki = 0; ki < static_cast<std::size_t>(kNumSegments); ++ki) {
      const nn::Tensor<T>* feat;
      if (s.input[ki] >= 0) {
        col_acts[ki] = model.columns[ki].forward(cache[static_cast<std::size_t>(s.input[ki])]);
        red_acts[ki] = model.reduce[ki].forward(col_acts[ki].back());
        feat = &red_acts[ki].back();
      } else {
        feat = &zero[ki].red.back();
      }
      std::copy(feat->data.begin(), feat->data.end(), concat.data.begin() + offset[ki]);
    }
    const auto head_acts = model.head.forward(concat);
    loss += nn::xent_loss(head_acts.back(), s.label);
    const auto gconcat = model.head.backward(head_acts, nn::xent_grad(head_acts.back(), s.label), true);
    for (std::size_t ki = 0; ki < static_cast<std::size_t>(kNumSegments); ++ki) {
      const auto* g = &gconcat.data[static_cast<std::size_t>(offset[ki])];
      if (s.input[ki] >= 0) {
        const auto& ra = red_acts[ki].back();
        nn::Tensor<T> gr(ra.c, ra.h, ra.w);
        std::copy_n(g, width[ki], gr.data.begin());
        auto gcol = model.reduce[ki].backward(red_acts[ki], gr, !freeze_columns);
        if (!freeze_columns) model.columns[ki].backward(col_acts[ki], gcol, false);
      } else {
        auto& zg = zero[ki].grad.data;
        for (int i = 0; i < width[ki]; ++i) zg[static_cast<std::size_t>(i)] += g[i];
      }
    }
  }
  for (std::size_t ki = 0; ki < static_cast<std::size_t>(kNumSegments); ++ki) {
    auto& z = zero[ki];
    if (!z.used) continue;
    auto gcol = model.reduce[ki].backward(z.red, z.grad, !freeze_columns);
    if (!freeze_columns) model.columns[ki].backward(z.col, gcol, false);
  }
  return loss;
}

/// Minibatch SGD with momentum on cross-entropy over labelled proposals.
/// Batches draw faces and non-faces from separate seeded cycles with the face
/// share clamped to [0.25, 0.75].
template <typename T>
TrainTrace train(BasicDeepSegFace<T>& model, const std::vector<TrainingImage>& data, const NetTrainParams& hp) {
  if (hp.batch < 1 || hp.epochs < 0) fail(ErrorKind::ConfigError, "net.batch must be >= 1 and net.epochs >= 0");
  std::vector<nn::Tensor<T>> cache;
  std::map<std::tuple<std::size_t, int, BoxI>, int> cache_index;
  std::vector<detail::NetSample> samples;
  detail::Cycler faces, nonfaces;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (const auto& lp : data[i].proposals) {
      detail::NetSample s;
      s.label = lp.label == Label::Face ? 0 : 1;
      for (SegmentKind k : kAllKinds) {
        const auto ki = static_cast<std::size_t>(index_of(k));
        s.input[ki] = -1;
        if (!lp.proposal.has(k)) continue;
        const auto key = std::tuple{i, index_of(k), lp.proposal.at(k).box};
        auto it = cache_index.find(key);
        if (it == cache_index.end()) {
          it = cache_index.emplace(key, static_cast<int>(cache.size())).first;
          cache.push_back(segment_input<T>(data[i].image, lp.proposal.at(k), model.config));
        }
        s.input[ki] = it->second;
      }
      (s.label == 0 ? faces : nonfaces).idx.push_back(samples.size());
      samples.push_back(s);
    }
  }
  if (faces.idx.empty() || nonfaces.idx.empty())
    fail(ErrorKind::DegenerateTrainingSet, "DeepSegFace training needs face and non-face proposals");

  const double share = std::clamp(static_cast<double>(faces.idx.size()) / static_cast<double>(samples.size()), 0.25, 0.75);
  const int n_face = std::clamp(static_cast<int>(std::lround(share * hp.batch)), hp.batch > 1 ? 1 : 0, hp.batch);
  const std::size_t batches = (samples.size() + static_cast<std::size_t>(hp.batch) - 1) / static_cast<std::size_t>(hp.batch);

  Rng rng(hp.seed);
  auto params = model.trainable_params(hp.freeze_columns);
  TrainTrace trace;
  std::vector<std::size_t> batch;
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t bi = 0; bi < batches; ++bi) {
      batch.clear();
      for (int j = 0; j < hp.batch; ++j) batch.push_back(j < n_face ? faces.next(rng) : nonfaces.next(rng));
      for (auto* p : params) p->grad.fill(T(0));
      total += accumulate_batch(model, cache, samples, batch, hp.freeze_columns);
      count += batch.size();
      const T inv = T(1) / static_cast<T>(batch.size());
      for (auto* p : params) {
        for (auto& g : p->grad.data) g *= inv;
        nn::sgd_step(*p, hp.lr, hp.momentum, hp.weight_decay);
      }
    }
    trace.epoch_loss.push_back(total / static_cast<double>(count));
  }
  return trace;
}

struct Detection {
  BoxI box;
  double score = 0.0;
};

/// Face probability times the prior re-rank multiplier.
template <typename T>
double rerank_score(const BasicDeepSegFace<T>& model, const Proposal& p, const GrayImageF& image) {
  return forward_proposal(model, p, image).first * rerank_multiplier(p, model.priors);
}

/// Highest-scoring proposal given per-proposal scores (first wins ties).
inline std::optional<Detection> argmax_detection(const std::vector<Proposal>& proposals, const std::vector<double>& scores) {
  std::optional<Detection> best;
  for (std::size_t i = 0; i < proposals.size(); ++i)
    if (!best || scores[i] > best->score) best = Detection{proposals[i].box, scores[i]};
  return best;
}

template <typename T>
std::optional<Detection> detect(const BasicDeepSegFace<T>& model, const GrayImageF& image,
                                const std::vector<Proposal>& proposals) {
  std::vector<double> scores;
  scores.reserve(proposals.size());
  for (const auto& p : proposals) scores.push_back(rerank_score(model, p, image));
  return argmax_detection(proposals, scores);
}

// ---------------------------------------------------------------------------
// Serialization.

inline std::string format_column_spec(const std::vector<ConvBlock>& blocks) {
  std::string out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i) out += ';';
    out += text::join(blocks[i].channels, ',');
    if (blocks[i].pool) out += 'P';
  }
  return out;
}

inline std::vector<ConvBlock> parse_column_spec(std::string_view s, const std::string& where) {
  std::vector<ConvBlock> out;
  for (auto part : text::split(text::trim(s), ';')) {
    part = text::trim(part);
    ConvBlock b;
    b.pool = !part.empty() && part.back() == 'P';
    if (b.pool) part.remove_suffix(1);
    b.channels = text::parse_list<int>(part, ',', where);
    out.push_back(std::move(b));
  }
  return out;
}

template <typename T>
void write_params(std::ostream& out, const std::vector<const nn::Param<T>*>& params) {
  for (const auto* p : params) {
    out << "param=" << p->value.c << ',' << p->value.h << ',' << p->value.w;
    for (T v : p->value.data) out << ' ' << text::fmt(v);
    out << '\n';
  }
}

template <typename T>
void read_params(const Section& sec, const std::vector<nn::Param<T>*>& params, std::size_t& next) {
  for (std::size_t i = 0; i < sec.entries.size(); ++i) {
    const auto& [key, val] = sec.entries[i];
    if (key != "param") continue;
    if (next >= params.size()) fail(ErrorKind::ParseError, sec.where(i) + ": more parameter blobs than layers");
    auto& p = *params[next++];
    const auto sp = val.find(' ');
    const auto shape = text::parse_list<int>(std::string_view(val).substr(0, sp), ',', sec.where(i));
    if (shape.size() != 3 || shape[0] != p.value.c || shape[1] != p.value.h || shape[2] != p.value.w)
      fail(ErrorKind::ShapeMismatch, sec.where(i) + ": parameter shape does not match the configured network");
    const auto values =
        sp == std::string::npos ? std::vector<T>{} : text::parse_list<T>(std::string_view(val).substr(sp + 1), ' ', sec.where(i));
    if (values.size() != p.value.size()) fail(ErrorKind::ParseError, sec.where(i) + ": wrong number of values");
    p.value.data = values;
  }
}

inline void write_network_config(std::ostream& out, const NetworkConfig& c) {
  out << "scale=" << to_string(c.scale) << "\nin_channels=" << c.in_channels << "\ncolumn=" << format_column_spec(c.column)
      << "\nreduce_maps=" << c.reduce_maps << "\nfc_units=" << c.fc_units << "\nclasses=" << c.classes
      << "\nmean=" << text::fmt(c.mean) << '\n';
}

template <typename T>
void save_deepsegface(const std::string& path, const BasicDeepSegFace<T>& m) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  out << "DEEPSEGFACE-MODEL v1\n[config]\n";
  write_network_config(out, m.config);
  for (SegmentKind k : kAllKinds) {
    const auto ki = static_cast<std::size_t>(index_of(k));
    out << "[column kind=" << name_of(k) << "]\n";
    auto ps = m.columns[ki].params();
    for (auto* p : m.reduce[ki].params()) ps.push_back(p);
    write_params<T>(out, ps);
  }
  out << "[head]\n";
  write_params<T>(out, m.head.params());
  out << "[priors]\n";
  write_priors(out, m.priors);
  out << "[layout]\n";
  write_layout(out, m.config.layout);
}

template <typename T = float>
BasicDeepSegFace<T> load_deepsegface(const std::string& path) {
  const auto sections = read_sections(path, "DEEPSEGFACE-MODEL v1");
  NetworkConfig cfg;
  bool have_cfg = false;
  for (const auto& sec : sections) {
    if (sec.name == "config") {
      cfg.scale = parse_scale(sec.get("scale"));
      cfg.in_channels = text::parse<int>(sec.get("in_channels"), path + " in_channels");
      cfg.column = parse_column_spec(sec.get("column"), path + " column");
      cfg.reduce_maps = text::parse<int>(sec.get("reduce_maps"), path + " reduce_maps");
      cfg.fc_units = text::parse<int>(sec.get("fc_units"), path + " fc_units");
      cfg.classes = text::parse<int>(sec.get("classes"), path + " classes");
      cfg.mean = text::parse<double>(sec.get("mean"), path + " mean");
      have_cfg = true;
    } else if (sec.name == "layout") {
      cfg.layout = read_layout(sec);
    }
  }
  if (!have_cfg) fail(ErrorKind::ParseError, path + ": missing [config] section");
  auto m = build_network<T>(cfg, 0);
  std::array<bool, kNumSegments> got{};
  bool head = false;
  for (const auto& sec : sections) {
    if (sec.name == "column") {
      const auto ki = static_cast<std::size_t>(index_of(parse_kind(sec.attr("kind"))));
      auto ps = m.columns[ki].params();
      for (auto* p : m.reduce[ki].params()) ps.push_back(p);
      std::size_t next = 0;
      read_params<T>(sec, ps, next);
      if (next != ps.size()) fail(ErrorKind::ParseError, path + ": column section has too few parameter blobs");
      got[ki] = true;
    } else if (sec.name == "head") {
      auto ps = m.head.params();
      std::size_t next = 0;
      read_params<T>(sec, ps, next);
      if (next != ps.size()) fail(ErrorKind::ParseError, path + ": head section has too few parameter blobs");
      head = true;
    } else if (sec.name == "priors") {
      for (std::size_t i = 0; i < sec.entries.size(); ++i)
        if (!read_prior_field(m.priors, sec.entries[i].first, sec.entries[i].second, sec.where(i)))
          fail(ErrorKind::ParseError, sec.where(i) + ": unknown priors key");
    } else if (sec.name != "config" && sec.name != "layout") {
      fail(ErrorKind::ParseError, path + ": unknown section [" + sec.name + "]");
    }
  }
  for (bool g : got)
    if (!g) fail(ErrorKind::ParseError, path + ": missing column section");
  if (!head) fail(ErrorKind::ParseError, path + ": missing [head] section");
  return m;
}

}  // namespace fseg
