// Command-line front end for the segment-based face detection pipeline.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "fseg/pipeline.hpp"

namespace fs = std::filesystem;
using namespace fseg;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string model = "deepsegface";
  std::string out;
  std::string split = "test";
};

RunConfig load(const Options& o) {
  RunConfig c = o.config.empty() ? parse_config({}) : load_config(o.config);
  if (o.seed) set_seed(c, *o.seed);
  return c;
}

std::string out_dir(const Options& o, const std::string& fallback) {
  const std::string dir = o.out.empty() ? fallback : o.out;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::IoError, "cannot create " + dir + ": " + ec.message());
  return dir;
}

std::string in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

std::string check_split(const std::string& s) {
  if (s != "train" && s != "test") fail(ErrorKind::ConfigError, "--split: expected train or test, got '" + s + "'");
  return s;
}

void cmd_synth(const Options& o) {
  const auto c = load(o);
  const auto dir = out_dir(o, c.data_dir);
  synth_splits(c, dir);
  std::cout << "wrote " << c.train_count << " train and " << c.test_count << " test frames to " << dir << "\n";
}

void cmd_train_weak(const Options& o) {
  const auto c = load(o);
  const auto ds = load_dataset(split_dir(c, "train"));
  const auto dets = train_weak(ds, c);
  const auto path = in(out_dir(o, c.model_out), "weak.model");
  save_detectors(path, dets);
  std::cout << "wrote " << path << "\n";
}

void cmd_detect_segments(const Options& o) {
  const auto c = load(o);
  const auto split = check_split(o.split);
  const auto weak = load_detectors(in(c.model_out, "weak.model"));
  const auto dets = detect_all(load_dataset(split_dir(c, split)), weak, c);
  const auto path = in(out_dir(o, c.report_out), "detections_" + split + ".csv");
  export_detections(path, dets);
  std::cout << "wrote " << path << "\n";
}

void cmd_gen_proposals(const Options& o) {
  const auto c = load(o);
  const auto split = check_split(o.split);
  const auto dets = import_detections(in(c.report_out, "detections_" + split + ".csv"));
  const auto props = proposals_all(dets, c);
  const auto path = in(out_dir(o, c.report_out), "proposals_" + split + ".csv");
  export_proposals(path, props);
  std::cout << "wrote " << path << " (" << text::fmt(mean_proposals_per_image(props)) << " proposals/image)\n";
}

std::vector<TrainingImage> training_set(const RunConfig& c) {
  const auto ds = load_dataset(split_dir(c, "train"));
  return training_images(ds, import_proposals(in(c.report_out, "proposals_train.csv")), c);
}

void cmd_train_segface(const Options& o) {
  const auto c = load(o);
  const auto model = train_segface(training_set(c), segface_params(c));
  const auto path = in(out_dir(o, c.model_out), "segface.model");
  save_segface(path, model);
  std::cout << "wrote " << path << "\n";
}

void cmd_train_deepsegface(const Options& o) {
  const auto c = load(o);
  TrainTrace trace;
  const auto model = train_deep(training_set(c), c, &trace);
  const auto path = in(out_dir(o, c.model_out), "deepsegface.model");
  save_deepsegface(path, model);
  std::cout << "wrote " << path << " (final loss "
            << (trace.epoch_loss.empty() ? std::string("n/a") : text::fmt(trace.epoch_loss.back())) << ")\n";
}

void cmd_detect(const Options& o) {
  const auto c = load(o);
  const auto kind = parse_model_kind(o.model);
  const auto split = check_split(o.split);
  const auto weak = load_detectors(in(c.model_out, "weak.model"));
  std::optional<SegFaceModel> sf;
  std::optional<DeepSegFaceModel> deep;
  Scorer scorer;
  if (kind == ModelKind::SegFace) {
    sf = load_segface(in(c.model_out, "segface.model"));
    scorer.segface = &*sf;
  } else {
    deep = load_deepsegface(in(c.model_out, "deepsegface.model"));
    scorer.deep = &*deep;
  }
  const auto outp = detect_dataset(load_dataset(split_dir(c, split)), weak, scorer, c);
  const auto dir = out_dir(o, c.report_out);
  const std::string m(to_string(kind));
  write_results(in(dir, m + "_results.csv"), outp.results);
  export_proposals(in(dir, m + "_proposals.csv"), outp.proposals);
  std::cout << "wrote " << in(dir, m + "_results.csv") << "\n";
}

void cmd_eval(const Options& o) {
  const auto c = load(o);
  const auto kind = parse_model_kind(o.model);
  const std::string m(to_string(kind));
  const auto truths = load_dataset(split_dir(c, check_split(o.split))).truths();
  const auto results = read_results(in(c.report_out, m + "_results.csv"), truths);
  const auto props = import_proposals(in(c.report_out, m + "_proposals.csv"));
  const auto s = evaluate(results, props, truths, c.eval);
  std::cout << m << ": tar_at_far=" << text::fmt(s.tar_at_far) << " recall_at_prec=" << text::fmt(s.recall_at_precision)
            << " coverage=" << text::fmt(s.coverage) << " roc_auc=" << text::fmt(s.auc) << "\n";
  write_eval(out_dir(o, c.report_out), m, s);
}

void cmd_validate(const Options& o) {
  load(o);
  std::cout << "config ok\n";
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::ConfigError: return 2;
    case ErrorKind::MissingInput:
    case ErrorKind::NotFound: return 3;
    default: return 4;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Facial-segment face detection pipeline"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config, "run configuration file");
  app.add_option("--seed", o.seed, "overrides the configured seed");
  app.add_option("--model", o.model, "segface or deepsegface");
  app.add_option("--out", o.out, "output directory for this command");
  app.add_option("--split", o.split, "train or test");

  struct Command {
    const char* name;
    const char* help;
    void (*run)(const Options&);
  };
  const Command commands[] = {
      {"synth", "generate the synthetic train and test splits", cmd_synth},
      {"train-weak", "train the boosted segment detectors", cmd_train_weak},
      {"detect-segments", "run the segment detectors over a split", cmd_detect_segments},
      {"gen-proposals", "cluster detections into face proposals", cmd_gen_proposals},
      {"train-segface", "train the HoG + SVM proposal scorer", cmd_train_segface},
      {"train-deepsegface", "train the multi-column network scorer", cmd_train_deepsegface},
      {"detect", "detect faces with the chosen --model", cmd_detect},
      {"eval", "score detections against the annotations", cmd_eval},
      {"validate-config", "check a configuration file", cmd_validate},
  };
  for (const auto& cmd : commands) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->fallthrough();
    sub->callback([&o, run = cmd.run] { run(o); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "fseg: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "fseg: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "fseg: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
