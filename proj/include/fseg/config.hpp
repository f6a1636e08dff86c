#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "fseg/deepsegface.hpp"
#include "fseg/error.hpp"
#include "fseg/hog.hpp"
#include "fseg/proposals.hpp"
#include "fseg/segface.hpp"
#include "fseg/segments.hpp"
#include "fseg/svm.hpp"
#include "fseg/text.hpp"

namespace fseg {

/// Parameters of the synthetic face generator.
struct SynthSpec {
  int count = 10;
  int width = 160;
  int height = 120;
  double face_min = 0.35;          // face side as a fraction of frame height
  double face_max = 0.65;
  double occlusion_prob = 0.3;
  double occluder_min = 0.12;      // bar thickness as a fraction of face side
  double occluder_max = 0.25;
  double offframe_prob = 0.25;     // chance a face is pushed across a frame edge
  double shift_max = 0.25;         // max fraction of the face pushed off-frame
  double noise = 0.03;             // background noise standard deviation
  double no_face_fraction = 0.15;
  double decoy_prob = 0.0;         // chance of a face-like distractor per frame
  std::uint64_t seed = 1;
};

struct WeakParams {
  int rounds = 60;
  int feature_pool = 2000;
  int face_window = 36;     // base face side in pixels; segment windows derive from it
  int stride = 4;
  double scale_factor = 1.25;
  double min_scale = 1.0;
  double max_scale = 2.5;
  double accept_frac = 0.5;  // accept threshold as a fraction of Σ alpha
  int negatives = 3000;      // per kind
  int jitter = 2;            // extra jittered copies per positive
};

struct EvalParams {
  double iou_min = 0.5;
  double far_target = 0.01;
  double prec_target = 0.99;
};

struct RunConfig {
  std::uint64_t seed = 7;
  std::string data_dir = "data";
  std::string model_out = "models";
  std::string report_out = "reports";
  int train_count = 400;
  int test_count = 200;
  SynthSpec synth;
  WeakParams weak;
  ProposalParams proposals;
  double radius_frac = 0.25;
  Scale segment_scale = Scale::Toy;
  SegmentLayout layout = default_layout(Scale::Toy);
  HogParams hog;
  SvmParams svm{1e-3, 30, 1};
  NetworkConfig net = toy_preset();
  NetTrainParams net_train;
  EvalParams eval;
};

namespace detail {

struct ConfigError {
  static void raise(const std::string& key, const std::string& msg) {
    fail(ErrorKind::ConfigError, key + ": " + msg);
  }
};

template <typename T>
T config_value(const std::string& key, const std::string& val) {
  T out{};
  if constexpr (std::is_same_v<T, bool>) {
    if (val == "true" || val == "1") return true;
    if (val == "false" || val == "0") return false;
    ConfigError::raise(key, "expected true/false, got '" + val + "'");
  } else {
    if (!text::try_parse(val, out)) ConfigError::raise(key, "cannot parse '" + val + "'");
  }
  return out;
}

}  // namespace detail

/// Every stage seed derives from the run seed.
inline void set_seed(RunConfig& c, std::uint64_t seed) {
  c.seed = seed;
  c.net_train.seed = seed;
  c.svm.seed = seed;
  c.synth.seed = seed;
}

/// Flat `dotted.key = value` text; '#' starts a comment line.
inline std::map<std::string, std::string> read_key_values(std::istream& in, const std::string& source) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorKind::ConfigError, source + ":" + std::to_string(lineno) + ": expected key = value");
    kv[std::string(text::trim(t.substr(0, eq)))] = std::string(text::trim(t.substr(eq + 1)));
  }
  return kv;
}

inline void validate(const RunConfig& c) {
  auto need = [](bool ok, const std::string& key, const std::string& msg) {
    if (!ok) detail::ConfigError::raise(key, msg);
  };
  auto rate = [&](double v, const std::string& key) { need(v > 0.0 && v < 1.0, key, "must lie in (0, 1)"); };
  auto frac = [&](double v, const std::string& key) { need(v >= 0.0 && v <= 1.0, key, "must lie in [0, 1]"); };
  need(c.proposals.zeta >= 1, "proposals.zeta", "must be >= 1");
  need(c.proposals.min_segments >= 1 && c.proposals.min_segments <= kNumSegments, "proposals.min_segments",
       "must be in [1, 9]");
  need(c.radius_frac > 0.0, "proposals.radius_frac", "must be > 0");
  need(c.train_count >= 1, "synth.train_count", "must be >= 1");
  need(c.test_count >= 1, "synth.test_count", "must be >= 1");
  need(c.synth.width >= 16 && c.synth.height >= 16, "synth.width", "frame must be at least 16x16");
  frac(c.synth.face_min, "synth.face_min");
  frac(c.synth.face_max, "synth.face_max");
  need(c.synth.face_min <= c.synth.face_max, "synth.face_max", "must be >= synth.face_min");
  frac(c.synth.occlusion_prob, "synth.occlusion_prob");
  frac(c.synth.occluder_min, "synth.occluder_min");
  frac(c.synth.occluder_max, "synth.occluder_max");
  frac(c.synth.offframe_prob, "synth.offframe_prob");
  frac(c.synth.shift_max, "synth.shift_max");
  frac(c.synth.no_face_fraction, "synth.no_face_fraction");
  frac(c.synth.decoy_prob, "synth.decoy_prob");
  need(c.synth.noise >= 0.0, "synth.noise", "must be >= 0");
  need(c.weak.rounds >= 1, "weak.rounds", "must be >= 1");
  need(c.weak.feature_pool >= 1, "weak.feature_pool", "must be >= 1");
  need(c.weak.face_window >= 8, "weak.face_window", "must be >= 8");
  need(c.weak.stride >= 1, "weak.stride", "must be >= 1");
  need(c.weak.scale_factor > 1.0, "weak.scale_factor", "must be > 1");
  need(c.weak.min_scale > 0.0, "weak.min_scale", "must be > 0");
  need(c.weak.max_scale >= c.weak.min_scale, "weak.max_scale", "must be >= weak.min_scale");
  rate(c.weak.accept_frac, "weak.accept_frac");
  need(c.weak.negatives >= 10, "weak.negatives", "must be >= 10");
  need(c.weak.jitter >= 0, "weak.jitter", "must be >= 0");
  need(c.svm.lambda > 0.0, "svm.lambda", "must be > 0");
  need(c.svm.epochs >= 1, "svm.epochs", "must be >= 1");
  rate(c.net_train.lr, "net.lr");
  need(c.net_train.momentum >= 0.0 && c.net_train.momentum < 1.0, "net.momentum", "must lie in [0, 1)");
  need(c.net_train.weight_decay >= 0.0, "net.weight_decay", "must be >= 0");
  need(c.net_train.epochs >= 1, "net.epochs", "must be >= 1");
  need(c.net_train.batch >= 1, "net.batch", "must be >= 1");
  rate(c.eval.iou_min, "eval.iou_min");
  rate(c.eval.far_target, "eval.far_target");
  rate(c.eval.prec_target, "eval.prec_target");
  try {
    validate(c.hog);
    validate(c.layout);
    validate(c.net);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    fail(ErrorKind::ConfigError, e.what());
  }
}

/// Applies key/value overrides on top of the defaults. Unknown keys are errors.
inline RunConfig parse_config(const std::map<std::string, std::string>& kv) {
  RunConfig c;
  // Scale presets first so explicit keys can override what they imply.
  if (auto it = kv.find("net.scale"); it != kv.end()) c.net = preset(parse_scale(it->second));
  if (auto it = kv.find("segments.scale"); it != kv.end()) c.segment_scale = parse_scale(it->second);
  else c.segment_scale = c.net.scale;
  c.layout = default_layout(c.segment_scale);

  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto num = [](auto& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) {
      field = detail::config_value<std::remove_reference_t<decltype(field)>>(k, v);
    };
  };
  std::map<std::string, Setter> setters = {
      {"seed", num(c.seed)},
      {"paths.data_dir", [&](auto&, auto& v) { c.data_dir = v; }},
      {"paths.model_out", [&](auto&, auto& v) { c.model_out = v; }},
      {"paths.report_out", [&](auto&, auto& v) { c.report_out = v; }},
      {"synth.train_count", num(c.train_count)},
      {"synth.test_count", num(c.test_count)},
      {"synth.width", num(c.synth.width)},
      {"synth.height", num(c.synth.height)},
      {"synth.face_min", num(c.synth.face_min)},
      {"synth.face_max", num(c.synth.face_max)},
      {"synth.occlusion_prob", num(c.synth.occlusion_prob)},
      {"synth.occluder_min", num(c.synth.occluder_min)},
      {"synth.occluder_max", num(c.synth.occluder_max)},
      {"synth.offframe_prob", num(c.synth.offframe_prob)},
      {"synth.shift_max", num(c.synth.shift_max)},
      {"synth.noise", num(c.synth.noise)},
      {"synth.no_face_fraction", num(c.synth.no_face_fraction)},
      {"synth.decoy_prob", num(c.synth.decoy_prob)},
      {"weak.rounds", num(c.weak.rounds)},
      {"weak.feature_pool", num(c.weak.feature_pool)},
      {"weak.face_window", num(c.weak.face_window)},
      {"weak.stride", num(c.weak.stride)},
      {"weak.scale_factor", num(c.weak.scale_factor)},
      {"weak.min_scale", num(c.weak.min_scale)},
      {"weak.max_scale", num(c.weak.max_scale)},
      {"weak.accept_frac", num(c.weak.accept_frac)},
      {"weak.negatives", num(c.weak.negatives)},
      {"weak.jitter", num(c.weak.jitter)},
      {"proposals.zeta", num(c.proposals.zeta)},
      {"proposals.min_segments", num(c.proposals.min_segments)},
      {"proposals.radius_frac", num(c.radius_frac)},
      {"proposals.box_mode", [&](auto&, auto& v) { c.proposals.box_mode = parse_box_mode(v); }},
      {"segments.scale", [](auto&, auto&) {}},
      {"net.scale", [](auto&, auto&) {}},
      {"hog.cell", num(c.hog.cell)},
      {"hog.block", num(c.hog.block)},
      {"hog.bins", num(c.hog.bins)},
      {"hog.block_stride", num(c.hog.block_stride)},
      {"hog.clip", num(c.hog.clip)},
      {"svm.lambda", num(c.svm.lambda)},
      {"svm.epochs", num(c.svm.epochs)},
      {"net.in_channels", num(c.net.in_channels)},
      {"net.column", [&](auto& k, auto& v) { c.net.column = parse_column_spec(v, k); }},
      {"net.reduce_maps", num(c.net.reduce_maps)},
      {"net.fc_units", num(c.net.fc_units)},
      {"net.mean", num(c.net.mean)},
      {"net.lr", num(c.net_train.lr)},
      {"net.momentum", num(c.net_train.momentum)},
      {"net.weight_decay", num(c.net_train.weight_decay)},
      {"net.epochs", num(c.net_train.epochs)},
      {"net.batch", num(c.net_train.batch)},
      {"net.freeze_columns", num(c.net_train.freeze_columns)},
      {"eval.iou_min", num(c.eval.iou_min)},
      {"eval.far_target", num(c.eval.far_target)},
      {"eval.prec_target", num(c.eval.prec_target)},
  };
  for (const auto& [key, val] : kv) {
    if (key.starts_with("segments.layout.")) {
      const auto kind = try_parse_kind(key.substr(16));
      if (!kind) detail::ConfigError::raise(key, "unknown segment kind");
      const auto old = c.layout[*kind];
      try {
        auto spec = parse_segment_spec(val, key);
        if (text::split(val, ',').size() == 4) {
          spec.canon_h = old.canon_h;
          spec.canon_w = old.canon_w;
        }
        c.layout[*kind] = spec;
      } catch (const Error& e) {
        detail::ConfigError::raise(key, e.what());
      }
      continue;
    }
    auto it = setters.find(key);
    if (it == setters.end()) detail::ConfigError::raise(key, "unknown configuration key");
    try {
      it->second(key, val);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::ConfigError) throw;
      detail::ConfigError::raise(key, e.what());
    }
  }
  c.net.layout = c.layout;
  set_seed(c, c.seed);
  validate(c);
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::MissingInput, "config file " + path);
  return parse_config(read_key_values(in, path));
}

inline RunConfig parse_config_text(const std::string& body) {
  std::istringstream in(body);
  return parse_config(read_key_values(in, "<string>"));
}

}  // namespace fseg
