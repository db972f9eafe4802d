// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "difom/binary_io.hpp"
#include "difom/config.hpp"
#include "difom/errors.hpp"
#include "difom/image_io.hpp"
#include "difom/metrics.hpp"
#include "difom/spectral.hpp"
#include "difom/teacher_io.hpp"
#include "difom/train.hpp"

namespace difom::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fmt(bool v) { return v ? "true" : "false"; }

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    if constexpr (std::is_floating_point_v<T>) {
      s += fmt(static_cast<double>(v[i]));
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s;
}

std::size_t thread_cap() {
  const char* env = std::getenv("DIFOM_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  const std::size_t n = parse_size("DIFOM_THREADS", env);
  if (n == 0) throw ConfigError("DIFOM_THREADS must be >= 1");
  return n;
}

// ---------------------------------------------------------------- train settings

struct TrainSettings {
  ModelConfig model = ModelConfig::desk();
  TrainConfig train = TrainConfig::desk();
  fs::path train_dir;
  fs::path test_dir;
  std::size_t data_count = 32;
  std::size_t data_test_count = 16;
  std::uint64_t data_seed = 0;
  double data_contrast = kCamouflageContrast;
  std::string teacher_source = "synthetic";
  fs::path teacher_dir;
  double teacher_noise = 0.1;
  std::uint64_t teacher_seed = 0;
  bool teacher_zscore = true;
  fs::path output_dir = "difom_out";
};

struct Key {
  std::string name;
  std::string help;
  std::function<void(TrainSettings&, const std::string&)> set;
  std::function<std::string(const TrainSettings&)> get;
};

std::string flag_for(const std::string& key) {
  std::string f = key.rfind("train.", 0) == 0 ? key.substr(6) : key;
  std::replace(f.begin(), f.end(), '.', '-');
  std::replace(f.begin(), f.end(), '_', '-');
  return "--" + f;
}

const std::vector<Key>& train_keys() {
  using S = TrainSettings;
  static const std::vector<Key> keys = {
      {"data.train_dir", "training folder with images/ and masks/ (empty: synthetic data)",
       [](S& s, const std::string& v) { s.train_dir = v; }, [](const S& s) { return s.train_dir.string(); }},
      {"data.test_dir", "held-out folder with images/ and masks/ (empty: synthetic data)",
       [](S& s, const std::string& v) { s.test_dir = v; }, [](const S& s) { return s.test_dir.string(); }},
      {"data.count", "synthetic training images",
       [](S& s, const std::string& v) { s.data_count = parse_size("data.count", v); },
       [](const S& s) { return std::to_string(s.data_count); }},
      {"data.test_count", "synthetic held-out images",
       [](S& s, const std::string& v) { s.data_test_count = parse_size("data.test_count", v); },
       [](const S& s) { return std::to_string(s.data_test_count); }},
      {"data.seed", "synthetic dataset seed",
       [](S& s, const std::string& v) { s.data_seed = parse_u64("data.seed", v); },
       [](const S& s) { return std::to_string(s.data_seed); }},
      {"data.contrast", "synthetic polyp contrast",
       [](S& s, const std::string& v) { s.data_contrast = parse_double("data.contrast", v); },
       [](const S& s) { return fmt(s.data_contrast); }},
      {"model.input_size", "square input side",
       [](S& s, const std::string& v) { s.model.input_size = parse_size("model.input_size", v); },
       [](const S& s) { return std::to_string(s.model.input_size); }},
      {"model.channels", "encoder channel ladder, comma separated",
       [](S& s, const std::string& v) { s.model.channels = parse_size_list("model.channels", v); },
       [](const S& s) { return join(s.model.channels); }},
      {"model.latent_channels", "channels of the two bottleneck latents",
       [](S& s, const std::string& v) { s.model.latent_channels = parse_size("model.latent_channels", v); },
       [](const S& s) { return std::to_string(s.model.latent_channels); }},
      {"model.d_star", "teacher channel count the projections map to",
       [](S& s, const std::string& v) { s.model.d_star = parse_size("model.d_star", v); },
       [](const S& s) { return std::to_string(s.model.d_star); }},
      {"model.teacher_resolution", "fused teacher grid side",
       [](S& s, const std::string& v) { s.model.teacher_resolution = parse_size("model.teacher_resolution", v); },
       [](const S& s) { return std::to_string(s.model.teacher_resolution); }},
      {"model.distillation", "false drops latents and projections (vanilla twin)",
       [](S& s, const std::string& v) { s.model.distillation = parse_bool("model.distillation", v); },
       [](const S& s) { return fmt(s.model.distillation); }},
      {"model.standardize_input", "per-image input standardisation",
       [](S& s, const std::string& v) { s.model.standardize_input = parse_bool("model.standardize_input", v); },
       [](const S& s) { return fmt(s.model.standardize_input); }},
      {"train.total_epochs", "total epochs",
       [](S& s, const std::string& v) { s.train.total_epochs = parse_size("train.total_epochs", v); },
       [](const S& s) { return std::to_string(s.train.total_epochs); }},
      {"train.phase1_end", "first epoch of phase II",
       [](S& s, const std::string& v) { s.train.phase1_end = parse_size("train.phase1_end", v); },
       [](const S& s) { return std::to_string(s.train.phase1_end); }},
      {"train.phase2_end", "first epoch of phase III",
       [](S& s, const std::string& v) { s.train.phase2_end = parse_size("train.phase2_end", v); },
       [](const S& s) { return std::to_string(s.train.phase2_end); }},
      {"train.learning_rate", "Adam learning rate",
       [](S& s, const std::string& v) { s.train.learning_rate = parse_double("train.learning_rate", v); },
       [](const S& s) { return fmt(s.train.learning_rate); }},
      {"train.batch_size", "mini-batch size",
       [](S& s, const std::string& v) { s.train.batch_size = parse_size("train.batch_size", v); },
       [](const S& s) { return std::to_string(s.train.batch_size); }},
      {"train.distillation", "false trains the seg-only twin (same architecture, no teacher)",
       [](S& s, const std::string& v) { s.train.distillation = parse_bool("train.distillation", v); },
       [](const S& s) { return fmt(s.train.distillation); }},
      {"train.augmentation", "random flips and multi-scale",
       [](S& s, const std::string& v) { s.train.augmentation = parse_bool("train.augmentation", v); },
       [](const S& s) { return fmt(s.train.augmentation); }},
      {"train.scales", "augmentation scales, comma separated",
       [](S& s, const std::string& v) { s.train.augment.scales = parse_double_list("train.scales", v); },
       [](const S& s) { return join(s.train.augment.scales); }},
      {"train.flip_probability", "probability of each flip",
       [](S& s, const std::string& v) { s.train.augment.flip_probability = parse_double("train.flip_probability", v); },
       [](const S& s) { return fmt(s.train.augment.flip_probability); }},
      {"train.seed", "initialisation and shuffling seed",
       [](S& s, const std::string& v) { s.train.seed = parse_u64("train.seed", v); },
       [](const S& s) { return std::to_string(s.train.seed); }},
      {"train.cutoff", "radial frequency cutoff rho",
       [](S& s, const std::string& v) { s.train.cutoff = parse_double("train.cutoff", v); },
       [](const S& s) { return fmt(s.train.cutoff); }},
      {"loss.alpha1", "weight of the semantic distillation term",
       [](S& s, const std::string& v) { s.train.weights.alpha1 = parse_double("loss.alpha1", v); },
       [](const S& s) { return fmt(s.train.weights.alpha1); }},
      {"loss.alpha2", "weight of the structural distillation term",
       [](S& s, const std::string& v) { s.train.weights.alpha2 = parse_double("loss.alpha2", v); },
       [](const S& s) { return fmt(s.train.weights.alpha2); }},
      {"loss.lambda1", "segmentation weight in phases II/III",
       [](S& s, const std::string& v) { s.train.weights.lambda1 = parse_double("loss.lambda1", v); },
       [](const S& s) { return fmt(s.train.weights.lambda1); }},
      {"loss.lambda2", "low-frequency distillation weight",
       [](S& s, const std::string& v) { s.train.weights.lambda2 = parse_double("loss.lambda2", v); },
       [](const S& s) { return fmt(s.train.weights.lambda2); }},
      {"loss.lambda3", "high-frequency distillation weight",
       [](S& s, const std::string& v) { s.train.weights.lambda3 = parse_double("loss.lambda3", v); },
       [](const S& s) { return fmt(s.train.weights.lambda3); }},
      {"teacher.source", "synthetic or directory",
       [](S& s, const std::string& v) { s.teacher_source = v; }, [](const S& s) { return s.teacher_source; }},
      {"teacher.dir", "folder of <id>.dfom bundles",
       [](S& s, const std::string& v) { s.teacher_dir = v; }, [](const S& s) { return s.teacher_dir.string(); }},
      {"teacher.noise_sigma", "synthetic teacher noise",
       [](S& s, const std::string& v) { s.teacher_noise = parse_double("teacher.noise_sigma", v); },
       [](const S& s) { return fmt(s.teacher_noise); }},
      {"teacher.seed", "synthetic teacher seed",
       [](S& s, const std::string& v) { s.teacher_seed = parse_u64("teacher.seed", v); },
       [](const S& s) { return std::to_string(s.teacher_seed); }},
      {"teacher.zscore", "standardise each teacher record before fusion",
       [](S& s, const std::string& v) { s.teacher_zscore = parse_bool("teacher.zscore", v); },
       [](const S& s) { return fmt(s.teacher_zscore); }},
      {"output.dir", "checkpoints, log, predictions and report",
       [](S& s, const std::string& v) { s.output_dir = v; }, [](const S& s) { return s.output_dir.string(); }},
  };
  return keys;
}

void print_settings(const TrainSettings& s, std::ostream& out) {
  out << "# resolved configuration\n";
  for (const Key& k : train_keys()) out << k.name << " = " << k.get(s) << '\n';
}

std::vector<SegmentationSample> load_split(const fs::path& dir, std::size_t count, std::uint64_t seed,
                                           const TrainSettings& s, const std::string& prefix) {
  std::vector<SegmentationSample> data;
  if (!dir.empty()) {
    data = read_samples(dir);
    for (const auto& d : data) {
      if (d.image.height() != s.model.input_size || d.image.width() != s.model.input_size) {
        throw std::invalid_argument("sample " + d.id + " is " + std::to_string(d.image.height()) + "x" +
                                    std::to_string(d.image.width()) + " but model.input_size is " +
                                    std::to_string(s.model.input_size));
      }
    }
    return data;
  }
  if (count == 0) throw ConfigError(prefix + " split is empty");
  data = make_synthetic_dataset({count, s.model.input_size, seed, s.data_contrast});
  for (auto& d : data) d.id = prefix + d.id.substr(d.id.find('_'));
  return data;
}

int cmd_train(const TrainSettings& s, std::ostream& out) {
  print_settings(s, out);
  s.model.validate();
  s.train.validate();
  if (s.teacher_source != "synthetic" && s.teacher_source != "directory") {
    throw ConfigError("teacher.source: expected 'synthetic' or 'directory', got '" + s.teacher_source + "'");
  }
  if (!(s.data_contrast >= 0.0)) throw ConfigError("data.contrast must be >= 0");
  if (!(s.teacher_noise >= 0.0)) throw ConfigError("teacher.noise_sigma must be >= 0");

  const auto train = load_split(s.train_dir, s.data_count, s.data_seed, s, "train");
  const auto test = load_split(s.test_dir, s.data_test_count, s.data_seed + 1000003, s, "heldout");

  TeacherSource source;
  source.synth = default_synth_spec(s.teacher_noise);
  source.synth_seed = s.teacher_seed;
  if (s.teacher_source == "directory") {
    source.kind = TeacherSource::Kind::Directory;
    source.directory = s.teacher_dir;
    if (s.train.distillation && !fs::is_directory(s.teacher_dir)) {
      throw MissingInputError("teacher directory not found: '" + s.teacher_dir.string() +
                              "' (phases II/III need teacher bundles; set teacher.dir or train.distillation = false)");
    }
  }
  TeacherProvider teachers(source, FusionOptions{s.model.teacher_resolution, s.teacher_zscore}, s.train.cutoff);

  fs::create_directories(s.output_dir);
  const fs::path staging = s.output_dir / "checkpoints.partial";
  const fs::path final_dir = s.output_dir / "checkpoints";
  fs::remove_all(staging);
  TrainConfig config = s.train;
  config.checkpoint_dir = staging;
  config.log_path = s.output_dir / "train_log.csv";

  StudentNet model(s.model, s.train.seed);
  out << "# model parameters: " << model.parameter_count() << '\n';
  TrainResult result;
  try {
    result = run_training(config, model, train, &teachers);
  } catch (...) {
    fs::remove_all(staging);
    throw;
  }
  fs::remove_all(final_dir);
  fs::rename(staging, final_dir);

  const auto preds = predict(model, test);
  FolderReport report;
  std::vector<MetricReport> rows;
  fs::create_directories(s.output_dir / "predictions");
  for (std::size_t i = 0; i < test.size(); ++i) {
    write_gray(s.output_dir / "predictions" / (test[i].id + ".png"), preds[i]);
    rows.push_back(evaluate_pair(make_eval_pair(preds[i], test[i].mask)));
    report.rows.emplace_back(test[i].id, rows.back());
  }
  report.mean = average(rows);
  write_report_csv(s.output_dir / "report.csv", report);

  const StepRecord& last = result.log.back();
  out << "steps " << result.log.size() << ", final loss " << fmt(last.loss.total) << ", teacher loads "
      << result.teacher_accesses << '\n';
  out << std::fixed << std::setprecision(4) << "held-out mDice " << report.mean.m_dice << "  mIoU "
      << report.mean.m_iou << "  Fw " << report.mean.f_beta_w << "  S " << report.mean.s_alpha << "  Emax "
      << report.mean.e_phi_max << "  MAE " << report.mean.mae << '\n';
  out << "wrote " << (s.output_dir / "report.csv").string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- other subcommands

void print_report(const MetricReport& m, std::ostream& out) {
  out << std::fixed << std::setprecision(4) << "images " << m.n_images << "\nm_dice " << m.m_dice << "\nm_iou "
      << m.m_iou << "\nf_beta_w " << m.f_beta_w << "\ns_alpha " << m.s_alpha << "\ne_phi_max " << m.e_phi_max
      << "\nmae " << m.mae << '\n';
}

FeatureMap normalise_channel(const FeatureMap& m, std::size_t c) {
  FeatureMap out(1, m.height(), m.width());
  const auto ch = m.channel(c);
  const auto [lo, hi] = std::minmax_element(ch.begin(), ch.end());
  const float range = *hi - *lo;
  for (std::size_t i = 0; i < ch.size(); ++i) out.data()[i] = range > 0 ? (ch[i] - *lo) / range : 0.0f;
  return out;
}

int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const MissingInputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitMissing;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == FormatError::Kind::Io ? kExitMissing : kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Frequency-decomposed foundation-model distillation for polyp segmentation", "difom"};
  app.require_subcommand(1);
  app.get_formatter()->column_width(34);

  // train
  auto* train = app.add_subcommand("train", "Three-phase training with held-out evaluation");
  std::string config_path;
  train->add_option("--config", config_path, "Flat 'key = value' configuration file")->type_name("FILE");
  std::map<std::string, std::string> flag_values;
  std::map<std::string, CLI::Option*> flag_opts;
  for (const Key& k : train_keys()) {
    flag_opts[k.name] =
        train->add_option(flag_for(k.name), flag_values[k.name], k.help + " [" + k.name + "]")->type_name("VALUE");
  }

  // eval
  auto* eval = app.add_subcommand("eval", "Six-metric evaluation of a prediction folder");
  std::string pred_dir, gt_dir, report_path;
  bool fixed = false;
  double threshold = 0.5;
  eval->add_option("--pred", pred_dir, "Prediction masks (8-bit .pgm/.png)")->required();
  eval->add_option("--gt", gt_dir, "Ground-truth masks with matching names")->required();
  eval->add_option("--out", report_path, "Report CSV path");
  eval->add_flag("--fixed-threshold", fixed, "Binarise once instead of sweeping 256 thresholds");
  eval->add_option("--threshold", threshold, "Threshold used with --fixed-threshold")->capture_default_str();

  // decompose
  auto* dec = app.add_subcommand("decompose", "Dump low/high-frequency components of a teacher bundle");
  std::string bundle_path, dec_out;
  double cutoff = kDefaultCutoff;
  std::size_t resolution = kPaperTeacherResolution, max_channels = 16;
  bool no_zscore = false;
  dec->add_option("--bundle", bundle_path, "DFOM bundle")->required();
  dec->add_option("--out", dec_out, "Output folder for PGM dumps")->required();
  dec->add_option("--cutoff", cutoff, "Radial cutoff rho in (0, 1)")->capture_default_str();
  dec->add_option("--resolution", resolution, "Fused grid side")->capture_default_str();
  dec->add_option("--max-channels", max_channels, "Channels dumped per component")->capture_default_str();
  dec->add_flag("--no-zscore", no_zscore, "Skip per-record standardisation");

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic polyp dataset");
  std::size_t count = 32, size = 64;
  std::uint64_t seed = 0;
  double contrast = 0.25, noise = 0.1;
  std::string synth_out;
  bool with_teachers = false;
  synth->add_option("--count", count, "Number of samples")->capture_default_str();
  synth->add_option("--size", size, "Image side")->capture_default_str();
  synth->add_option("--seed", seed, "Generator seed")->capture_default_str();
  synth->add_option("--contrast", contrast, "Polyp contrast (0.05 camouflage)")->capture_default_str();
  synth->add_option("--out", synth_out, "Output folder (images/, masks/)")->required();
  synth->add_flag("--teachers", with_teachers, "Also write synthetic teacher bundles to teachers/");
  synth->add_option("--teacher-noise", noise, "Synthetic teacher noise")->capture_default_str();

  // inspect
  auto* inspect = app.add_subcommand("inspect", "List the records of a teacher bundle");
  std::string inspect_path;
  inspect->add_option("bundle", inspect_path, "DFOM bundle")->required();

  std::vector<std::string> rev(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }

  return guarded(
      [&]() -> int {
        const std::size_t threads = thread_cap();
        if (train->parsed()) {
          TrainSettings s;
          if (!config_path.empty()) {
            for (const auto& [key, value] : read_config(config_path)) {
              const auto it = std::find_if(train_keys().begin(), train_keys().end(),
                                           [&](const Key& k) { return k.name == key; });
              if (it == train_keys().end()) {
                throw ConfigError(config_path + ":" + std::to_string(value.line) + ": unknown key '" + key + "'");
              }
              it->set(s, value.text);
            }
          }
          for (const Key& k : train_keys()) {
            if (flag_opts[k.name]->count() > 0) k.set(s, flag_values[k.name]);
          }
          s.train.distillation = s.train.distillation && s.model.distillation;  // the vanilla twin cannot distill
          return cmd_train(s, out);
        }
        if (eval->parsed()) {
          out << "# resolved configuration\npred = " << pred_dir << "\ngt = " << gt_dir << "\nout = " << report_path
              << "\nfixed_threshold = " << (fixed ? fmt(threshold) : "none") << "\nthreads = " << threads << '\n';
          EvalOptions options;
          if (fixed) {
            if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("--threshold must lie in [0, 1]");
            options.fixed_threshold = threshold;
          }
          options.threads = threads;
          const FolderReport report = evaluate_folder(pred_dir, gt_dir, options);
          if (!report_path.empty()) write_report_csv(report_path, report);
          print_report(report.mean, out);
          return kExitOk;
        }
        if (dec->parsed()) {
          out << "# resolved configuration\nbundle = " << bundle_path << "\nout = " << dec_out
              << "\ncutoff = " << fmt(cutoff) << "\nresolution = " << resolution << "\nmax_channels = " << max_channels
              << "\nzscore = " << fmt(!no_zscore) << '\n';
          if (max_channels == 0) throw ConfigError("--max-channels must be >= 1");
          const TeacherBundle bundle = load_bundle(bundle_path, {resolution, !no_zscore});
          const FrequencyComponents fc = decompose(bundle.fused, cutoff);
          fs::create_directories(dec_out);
          const std::size_t n = std::min(max_channels, bundle.d_star);
          for (std::size_t c = 0; c < n; ++c) {
            std::ostringstream idx;
            idx << std::setw(3) << std::setfill('0') << c;
            write_gray(fs::path(dec_out) / ("lfc_" + idx.str() + ".pgm"), normalise_channel(fc.lfc, c));
            write_gray(fs::path(dec_out) / ("hfc_" + idx.str() + ".pgm"), normalise_channel(fc.hfc, c));
          }
          out << "d_star " << bundle.d_star << ", wrote " << 2 * n << " images\n";
          return kExitOk;
        }
        if (synth->parsed()) {
          out << "# resolved configuration\ncount = " << count << "\nsize = " << size << "\nseed = " << seed
              << "\ncontrast = " << fmt(contrast) << "\nout = " << synth_out << "\nteachers = " << fmt(with_teachers)
              << "\nteacher_noise = " << fmt(noise) << '\n';
          if (count == 0 || size < 8) throw ConfigError("synth needs --count >= 1 and --size >= 8");
          if (!(contrast >= 0.0)) throw ConfigError("--contrast must be >= 0");
          const auto data = make_synthetic_dataset({count, size, seed, contrast});
          const SynthTeacherSpec spec = default_synth_spec(noise);
          if (with_teachers) fs::create_directories(fs::path(synth_out) / "teachers");
          for (const auto& sample : data) {
            write_sample(synth_out, sample);
            if (with_teachers) {
              write_bundle(synthesize_records(sample, spec, seed), fs::path(synth_out) / "teachers" / (sample.id + ".dfom"));
            }
          }
          out << "wrote " << data.size() << " samples to " << synth_out << '\n';
          return kExitOk;
        }
        const auto records = read_records(inspect_path);
        std::size_t d_star = 0;
        out << std::left << std::setw(24) << "model_id" << std::right << std::setw(8) << "H" << std::setw(8) << "W"
            << std::setw(8) << "D" << '\n';
        for (const auto& r : records) {
          out << std::left << std::setw(24) << r.model_id << std::right << std::setw(8) << r.features.height()
              << std::setw(8) << r.features.width() << std::setw(8) << r.features.channels() << '\n';
          d_star += r.features.channels();
        }
        out << "records " << records.size() << "\nd_star " << d_star << '\n';
        return kExitOk;
      },
      err);
}

}  // namespace difom::cli
