// Copyright 2026 The rpk Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rpk/checkpoint.hpp"
#include "rpk/datagen.hpp"
#include "rpk/embedding_cache.hpp"
#include "rpk/errors.hpp"
#include "rpk/pipeline.hpp"

namespace rpk::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNonFinite = 4;
inline constexpr int kExitMissingSplit = 5;

class MissingSplit : public Error {
 public:
  using Error::Error;
};

inline constexpr std::string_view kIdTrainFile = "id-train.rpkd";
inline constexpr std::string_view kIdTestFile = "id-test.rpkd";
inline constexpr std::string_view kCovOodFile = "cov-ood.rpkd";
inline constexpr std::string_view kSemOodFile = "sem-ood.rpkd";

struct GenSettings {
  std::uint64_t seed = 0;
  std::size_t classes = 10;
  std::size_t n_train = 2000;
  std::size_t n_test = 500;
  std::size_t n_ood = 500;
  std::size_t side = 32;
  std::string shift = "tint:0.3";
};

struct DataPaths {
  std::string dir;
  std::string id_train, id_test, cov_ood, sem_ood;

  std::string resolve(const std::string& explicit_path, std::string_view file) const {
    if (!explicit_path.empty()) return explicit_path;
    if (dir.empty()) return {};
    return (std::filesystem::path(dir) / file).string();
  }
  std::string train() const { return resolve(id_train, kIdTrainFile); }
  std::string test() const { return resolve(id_test, kIdTestFile); }
  std::string cov() const { return resolve(cov_ood, kCovOodFile); }
  std::string sem() const { return resolve(sem_ood, kSemOodFile); }
};

struct EvalSettings {
  std::optional<double> alpha = 0.4;  // nullopt: pick by ID accuracy over the alpha grid
  std::vector<std::string> methods{"zs", "lp", "rp", "rrp"};
  LinearProbeConfig probe;
};

// JSON run configuration: {"train":{}, "encoder":{}, "gen":{}, "data":{}, "eval":{}}.
struct RunConfig {
  TrainConfig train;
  EncoderSpec encoder;
  bool encoder_side_set = false;
  GenSettings gen;
  DataPaths data;
  EvalSettings eval;

  EncoderSpec encoder_for(const TrainConfig& c) const {
    EncoderSpec s = encoder;
    if (!encoder_side_set) s.side = c.side();
    return s;
  }
};

namespace detail {

using json_detail::reject_unknown;
using json_detail::take;

inline double check_alpha(double a) {
  if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("alpha must lie in [0,1], got " + format_value(a));
  return a;
}

inline std::optional<double> parse_alpha(const std::string& text) {
  if (text == "auto") return std::nullopt;
  double a = 0;
  try {
    std::size_t used = 0;
    a = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
  } catch (const std::exception&) {
    throw ConfigError("alpha must be a number in [0,1] or 'auto', got '" + text + "'");
  }
  return check_alpha(a);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace detail

inline RunConfig parse_run_config(const Json& j) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  detail::reject_unknown(j, {"train", "encoder", "gen", "data", "eval"}, "run config");
  RunConfig rc;
  if (j.contains("train")) update_from_json(rc.train, j.at("train"));
  if (j.contains("encoder")) {
    update_from_json(rc.encoder, j.at("encoder"));
    rc.encoder_side_set = j.at("encoder").contains("side");
  }
  if (j.contains("gen")) {
    const Json& g = j.at("gen");
    detail::reject_unknown(g, {"seed", "classes", "n_train", "n_test", "n_ood", "side", "shift"}, "gen config");
    detail::take(g, "seed", rc.gen.seed);
    detail::take(g, "classes", rc.gen.classes);
    detail::take(g, "n_train", rc.gen.n_train);
    detail::take(g, "n_test", rc.gen.n_test);
    detail::take(g, "n_ood", rc.gen.n_ood);
    detail::take(g, "side", rc.gen.side);
    detail::take(g, "shift", rc.gen.shift);
  }
  if (j.contains("data")) {
    const Json& d = j.at("data");
    detail::reject_unknown(d, {"dir", "id_train", "id_test", "cov_ood", "sem_ood"}, "data config");
    detail::take(d, "dir", rc.data.dir);
    detail::take(d, "id_train", rc.data.id_train);
    detail::take(d, "id_test", rc.data.id_test);
    detail::take(d, "cov_ood", rc.data.cov_ood);
    detail::take(d, "sem_ood", rc.data.sem_ood);
  }
  if (j.contains("eval")) {
    const Json& e = j.at("eval");
    detail::reject_unknown(e, {"alpha", "methods", "probe"}, "eval config");
    if (e.contains("alpha")) {
      const Json& a = e.at("alpha");
      if (a.is_string()) rc.eval.alpha = detail::parse_alpha(a.get<std::string>());
      else if (a.is_number()) rc.eval.alpha = detail::check_alpha(a.get<double>());
      else throw ConfigError("eval.alpha must be a number or \"auto\"");
    }
    detail::take(e, "methods", rc.eval.methods);
    if (e.contains("probe")) {
      const Json& p = e.at("probe");
      detail::reject_unknown(p, {"learning_rate", "epochs", "batch_size", "seed"}, "probe config");
      detail::take(p, "learning_rate", rc.eval.probe.learning_rate);
      detail::take(p, "epochs", rc.eval.probe.epochs);
      detail::take(p, "batch_size", rc.eval.probe.batch_size);
      detail::take(p, "seed", rc.eval.probe.seed);
    }
  }
  return rc;
}

inline RunConfig load_run_config(const std::string& path) {
  const std::string text = io::read_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  return parse_run_config(j);
}

inline std::size_t env_thread_cap() {
  const char* v = std::getenv("RPK_THREADS");
  if (!v || !*v) return 0;
  char* end = nullptr;
  const unsigned long n = std::strtoul(v, &end, 10);
  if (*end != '\0' || n == 0) throw ConfigError("RPK_THREADS must be a positive integer, got '" + std::string(v) + "'");
  return n;
}

// Requested threads capped by RPK_THREADS; 0 requested means "as many as allowed".
inline std::size_t effective_threads(std::size_t requested) {
  const std::size_t cap = env_thread_cap();
  std::size_t n = requested == 0 ? thread_cap(0) : requested;
  if (cap != 0) n = std::min(n, cap);
  return std::max<std::size_t>(1, n);
}

inline void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw MissingSplit("no path for " + what + " (use --data DIR or set data." + what + ")");
  if (!std::filesystem::is_regular_file(path)) throw MissingSplit("missing " + what + " split: " + path);
}

inline void ensure_parent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(parent, ec);
  if (ec) throw IoError("cannot create directory " + parent.string() + ": " + ec.message());
}

inline void write_text(const std::string& path, const std::string& text) {
  ensure_parent(path);
  io::write_file(path, text);
}

inline BenchmarkSuite load_suite(const DataPaths& paths, bool need_train) {
  const std::string train = paths.train(), test = paths.test(), cov = paths.cov(), sem = paths.sem();
  if (need_train) require_file(train, "id_train");
  require_file(test, "id_test");
  require_file(cov, "cov_ood");
  require_file(sem, "sem_ood");
  BenchmarkSuite suite;
  if (need_train) suite.id_train = read_dataset(train);
  suite.id_test = read_dataset(test);
  suite.covariate.push_back({"cov-ood", read_dataset(cov)});
  suite.semantic.push_back({"sem-ood", read_dataset(sem)});
  suite.validate();
  if (need_train && suite.id_train.split != Split::kIdTrain) throw ConfigError(train + " is not an id-train split");
  return suite;
}

// Flags shared by commands that build a TrainConfig.
struct TrainFlags {
  std::optional<double> lr, momentum, temperature;
  std::optional<std::size_t> epochs, batch, warmup, pad, upsample, vocab_size, feature_width, hidden_width, token_width;
  std::optional<std::uint64_t> seed, encoder_seed;
  std::optional<std::string> image_init;
  bool freeze_text = false, freeze_image = false;

  void add_to(CLI::App& app) {
    app.add_option("--lr", lr, "learning rate");
    app.add_option("--epochs", epochs, "training epochs");
    app.add_option("--batch-size", batch, "minibatch size");
    app.add_option("--warmup", warmup, "linear warmup steps");
    app.add_option("--temperature", temperature, "logit scale tau");
    app.add_option("--momentum", momentum, "SGD momentum");
    app.add_option("--seed", seed, "run seed");
    app.add_option("--pad", pad, "border width of the reprogrammed region");
    app.add_option("--upsample", upsample, "side of the implanted image region");
    app.add_option("--vocab-size", vocab_size, "pad the vocabulary to this many tokens");
    app.add_option("--image-init", image_init, "W initialisation: zeros|uniform");
    app.add_option("--encoder-seed", encoder_seed, "toy encoder seed");
    app.add_option("--feature-width", feature_width, "joint feature width k");
    app.add_option("--hidden-width", hidden_width, "toy encoder hidden width");
    app.add_option("--token-width", token_width, "token embedding width e");
    app.add_flag("--freeze-text", freeze_text, "do not train theta, b");
    app.add_flag("--freeze-image", freeze_image, "do not train W");
  }

  void apply(RunConfig& rc) const {
    TrainConfig& c = rc.train;
    if (lr) c.learning_rate = *lr;
    if (epochs) c.epochs = *epochs;
    if (batch) c.batch_size = *batch;
    if (warmup) c.warmup_steps = *warmup;
    if (temperature) c.temperature = *temperature;
    if (momentum) c.momentum = *momentum;
    if (seed) c.seed = *seed;
    if (pad) c.pad = *pad;
    if (upsample) c.upsample_side = *upsample;
    if (vocab_size) c.vocab_size = *vocab_size;
    if (image_init) update_from_json(c, Json{{"image_init", *image_init}});
    if (freeze_text) c.train_text = false;
    if (freeze_image) c.train_image = false;
    if (encoder_seed) rc.encoder.seed = *encoder_seed;
    if (feature_width) rc.encoder.feature_width = *feature_width;
    if (hidden_width) rc.encoder.hidden_width = *hidden_width;
    if (token_width) rc.encoder.token_width = *token_width;
    c.validate();
  }
};

struct DataFlags {
  std::optional<std::string> dir, train, test, cov, sem;

  void add_to(CLI::App& app, bool with_train) {
    app.add_option("--data", dir, "directory holding the four split files");
    if (with_train) app.add_option("--train", train, "id-train split file");
    app.add_option("--test", test, "id-test split file");
    app.add_option("--cov", cov, "covariate-ood split file");
    app.add_option("--sem", sem, "semantic-ood split file");
  }

  void apply(DataPaths& p) const {
    if (dir) p.dir = *dir;
    if (train) p.id_train = *train;
    if (test) p.id_test = *test;
    if (cov) p.cov_ood = *cov;
    if (sem) p.sem_ood = *sem;
  }
};

inline Json dataset_summary(const std::string& path, const LabeledDataset& ds) {
  return Json{{"path", path}, {"split", split_name(ds.split)}, {"n", ds.size()}, {"classes", ds.class_names.size()},
              {"side", ds.side}};
}

inline int cmd_gen(const RunConfig& rc, const std::string& out_dir, std::ostream& out) {
  const GenSettings& g = rc.gen;
  const ShiftSpec shift = parse_shift(g.shift, derive_seed(g.seed, 0xc0));
  const LabeledDataset train = gen_id(g.seed, g.n_train, g.classes, g.side, Split::kIdTrain);
  const LabeledDataset test = gen_id(g.seed, g.n_test, g.classes, g.side, Split::kIdTest);
  const LabeledDataset cov = apply_shift(test, shift);
  const LabeledDataset sem = gen_semantic_ood(g.seed, g.n_ood, g.side);
  Json files = Json::array();
  for (auto [name, ds] : {std::pair{kIdTrainFile, &train}, std::pair{kIdTestFile, &test}, std::pair{kCovOodFile, &cov},
                          std::pair{kSemOodFile, &sem}}) {
    const std::string path = (std::filesystem::path(out_dir) / name).string();
    ensure_parent(path);
    write_dataset(*ds, path);
    files.push_back(dataset_summary(path, *ds));
  }
  out << Json{{"files", files}, {"shift", g.shift}, {"seed", g.seed}}.dump() << "\n";
  return kExitOk;
}

inline std::string loss_csv(const std::vector<double>& losses) {
  std::ostringstream os;
  os << "step,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) os << i << "," << format_value(losses[i]) << "\n";
  return os.str();
}

inline int cmd_train(const RunConfig& rc, const std::string& checkpoint, std::string loss_path,
                     const std::string& vocab_path, std::ostream& out, std::ostream& err) {
  const std::string train_path = rc.data.train();
  require_file(train_path, "id_train");
  const LabeledDataset train = read_dataset(train_path);
  auto encoders = std::make_shared<const EncoderPair>(EncoderPair::toy(rc.encoder_for(rc.train)));
  const TrainedModel model = fit(train, encoders, rc.train, &err);
  write_text(checkpoint, encode_checkpoint(model));
  if (loss_path.empty()) loss_path = checkpoint + ".loss.csv";
  write_text(loss_path, loss_csv(model.loss_history));
  if (!vocab_path.empty()) {
    ensure_parent(vocab_path);
    write_vocabulary(model.text.vocabulary(), vocab_path);
  }
  Json summary{{"checkpoint", checkpoint}, {"loss_csv", loss_path}, {"steps", model.steps},
               {"encoder_hash", hex64(model.encoder_hash)}};
  summary["final_loss"] = model.loss_history.empty() ? Json(nullptr) : Json(model.loss_history.back());
  out << summary.dump() << "\n";
  return kExitOk;
}

inline std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  if (names.empty()) throw ConfigError("no methods selected");
  std::vector<Method> out;
  for (const auto& n : names) out.push_back(parse_method(n));
  return out;
}

inline bool needs_checkpoint(std::span<const Method> methods) {
  return std::any_of(methods.begin(), methods.end(),
                     [](Method m) { return m == Method::kReprogrammer || m == Method::kResidual; });
}

inline std::vector<EvalReport> run_eval(const RunConfig& rc, const std::string& checkpoint, std::ostream& err) {
  const std::vector<Method> methods = parse_methods(rc.eval.methods);
  const bool need_probe = std::find(methods.begin(), methods.end(), Method::kLinearProbe) != methods.end();
  if (needs_checkpoint(methods) && checkpoint.empty()) throw ConfigError("methods rp/rrp need --checkpoint");
  if (!checkpoint.empty() && !std::filesystem::is_regular_file(checkpoint)) {
    throw IoError("checkpoint not found: " + checkpoint);
  }
  const BenchmarkSuite suite = load_suite(rc.data, need_probe);
  TrainedModel model;
  if (!checkpoint.empty()) {
    model = read_checkpoint(checkpoint);
  } else {
    auto encoders = std::make_shared<const EncoderPair>(EncoderPair::toy(rc.encoder_for(rc.train)));
    model = initial_model(encoders, suite.id_test.class_names, rc.train);
  }
  const SuiteFeatures feats = compute_features(model, suite, need_probe);
  std::optional<LinearClassifier> probe;
  if (need_probe) probe = fit_probe(feats, suite, rc.eval.probe);
  double alpha = 0.0;
  if (rc.eval.alpha) {
    alpha = *rc.eval.alpha;
  } else if (std::find(methods.begin(), methods.end(), Method::kResidual) != methods.end()) {
    const auto grid = alpha_grid();
    alpha = select_alpha(alpha_sweep(feats, suite, model.config.temperature, grid));
    err << "selected alpha " << alpha << " by id-test accuracy\n";
  }
  std::vector<EvalReport> reports;
  for (Method m : methods) {
    reports.push_back(evaluate(m, feats, suite, alpha, model.config.temperature, probe ? &*probe : nullptr));
  }
  return reports;
}

inline int cmd_eval(const RunConfig& rc, const std::string& checkpoint, const std::string& prefix, std::ostream& out,
                    std::ostream& err) {
  const std::vector<EvalReport> reports = run_eval(rc, checkpoint, err);
  const Json summary = report_json(reports);
  if (!prefix.empty()) {
    write_text(prefix + ".csv", report_csv(reports));
    write_text(prefix + ".json", summary.dump(2) + "\n");
  }
  out << summary.dump() << "\n";
  return kExitOk;
}

inline int cmd_sweep_padding(const RunConfig& rc, const std::vector<std::size_t>& pads, std::size_t threads,
                             const std::string& out_path, std::ostream& out, std::ostream& err) {
  if (pads.empty()) throw ConfigError("no pad values given");
  const BenchmarkSuite suite = load_suite(rc.data, true);
  auto encoders = std::make_shared<const EncoderPair>(EncoderPair::toy(rc.encoder_for(rc.train)));
  const std::vector<PadRow> rows = sweep_padding(suite, encoders, rc.train, pads, effective_threads(threads));
  for (const auto& r : rows)
    if (!r.valid) err << "warning: " << r.warning << "\n";
  const std::string csv = pad_csv(rows);
  if (!out_path.empty()) write_text(out_path, csv);
  out << csv;
  return kExitOk;
}

inline constexpr std::array<std::string_view, 6> kExportFiles{"image-zs.rpke", "image-rp.rpke", "image-rrp.rpke",
                                                               "text-zs.rpke",  "text-rp.rpke",  "text-rrp.rpke"};

inline int cmd_export(const std::string& checkpoint, const std::string& dataset, double alpha,
                      const std::string& out_dir, std::ostream& out) {
  if (!std::filesystem::is_regular_file(checkpoint)) throw IoError("checkpoint not found: " + checkpoint);
  if (!std::filesystem::is_regular_file(dataset)) throw IoError("dataset not found: " + dataset);
  const TrainedModel model = read_checkpoint(checkpoint);
  const LabeledDataset ds = read_dataset(dataset);
  const EmbeddingExport ex = export_embeddings(model, ds, alpha);
  const std::array<const EmbeddingCache*, 6> caches{&ex.image_zero_shot, &ex.image_reprogrammed, &ex.image_blended,
                                                    &ex.text_zero_shot,  &ex.text_reprogrammed,  &ex.text_blended};
  Json files = Json::array();
  for (std::size_t i = 0; i < caches.size(); ++i) {
    const std::string path = (std::filesystem::path(out_dir) / kExportFiles[i]).string();
    ensure_parent(path);
    write_embedding_cache(*caches[i], path);
    files.push_back(Json{{"path", path}, {"rows", caches[i]->rows()}, {"width", caches[i]->width}});
  }
  out << Json{{"files", files}, {"alpha", alpha}}.dump() << "\n";
  return kExitOk;
}

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const MissingSplit*>(&e)) return kExitMissingSplit;
  if (dynamic_cast<const NonFiniteLoss*>(&e)) return kExitNonFinite;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ShapeError*>(&e)) return kExitConfig;
  if (dynamic_cast<const IoError*>(&e)) return kExitIo;
  if (dynamic_cast<const nlohmann::json::exception*>(&e)) return kExitConfig;
  return kExitFailure;
}

// Entry point shared by the rpk binary and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"rpk: reprogramming toolkit for frozen text-image encoder pairs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "rpk 0.1.0");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::string config_path;
  auto with_config = [&](CLI::App* sub) { sub->add_option("--config", config_path, "JSON run config")->check(CLI::ExistingFile); };

  TrainFlags train_flags;
  DataFlags data_flags;

  auto* gen = app.add_subcommand("gen", "generate the four synthetic splits");
  with_config(gen);
  std::string gen_out;
  std::optional<std::uint64_t> gen_seed;
  std::optional<std::size_t> gen_classes, gen_n_train, gen_n_test, gen_n_ood, gen_side;
  std::optional<std::string> gen_shift;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", gen_seed, "dataset seed");
  gen->add_option("--classes", gen_classes, "number of ID classes m");
  gen->add_option("--n-train", gen_n_train, "id-train size");
  gen->add_option("--n-test", gen_n_test, "id-test (and cov-ood) size");
  gen->add_option("--n-ood", gen_n_ood, "semantic-ood size");
  gen->add_option("--side", gen_side, "image side s");
  gen->add_option("--shift", gen_shift, "covariate shift kind:magnitude (rotate|tint|noise|blur)");

  auto* train = app.add_subcommand("train", "fit W, theta, b against the frozen toy encoders");
  with_config(train);
  std::string ckpt_out, loss_out, vocab_out;
  train->add_option("--out", ckpt_out, "checkpoint path")->required();
  train->add_option("--loss-csv", loss_out, "loss history CSV (default <out>.loss.csv)");
  train->add_option("--vocab-out", vocab_out, "write the vocabulary file here");
  train_flags.add_to(*train);
  data_flags.add_to(*train, true);

  auto* eval = app.add_subcommand("eval", "score zs/lp/rp/rrp on the four splits");
  with_config(eval);
  std::string eval_ckpt, eval_out;
  std::optional<std::string> eval_alpha, eval_methods;
  eval->add_option("--checkpoint", eval_ckpt, "trained checkpoint (not needed for zs/lp)");
  eval->add_option("--out", eval_out, "report prefix: writes PREFIX.csv and PREFIX.json");
  eval->add_option("--alpha", eval_alpha, "residual blend weight in [0,1] or 'auto'");
  eval->add_option("--method", eval_methods, "comma list of zs,lp,rp,rrp");
  train_flags.add_to(*eval);
  data_flags.add_to(*eval, true);

  auto* sweep = app.add_subcommand("sweep-padding", "train and evaluate once per pad value");
  with_config(sweep);
  std::string sweep_out;
  std::string sweep_pads = "0,4,8,16";
  std::size_t sweep_threads = 0;
  sweep->add_option("--pads", sweep_pads, "comma list of pad values")->capture_default_str();
  sweep->add_option("--threads", sweep_threads, "worker threads (0: all cores, capped by RPK_THREADS)");
  sweep->add_option("--out", sweep_out, "CSV path (also printed to stdout)");
  train_flags.add_to(*sweep);
  data_flags.add_to(*sweep, true);

  auto* exp = app.add_subcommand("export-embeddings", "write zero-shot, reprogrammed and blended features");
  std::string exp_ckpt, exp_data, exp_out;
  double exp_alpha = 0.4;
  exp->add_option("--checkpoint", exp_ckpt, "trained checkpoint")->required();
  exp->add_option("--dataset", exp_data, "dataset file")->required();
  exp->add_option("--alpha", exp_alpha, "blend weight")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  exp->add_option("--out", exp_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: " << e.what() << "\n";
    const auto parsed = app.get_subcommands();
    err << (parsed.empty() ? app.help() : parsed.front()->help());
    return kExitConfig;
  }

  try {
    RunConfig rc = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (gen->parsed()) {
      if (gen_seed) rc.gen.seed = *gen_seed;
      if (gen_classes) rc.gen.classes = *gen_classes;
      if (gen_n_train) rc.gen.n_train = *gen_n_train;
      if (gen_n_test) rc.gen.n_test = *gen_n_test;
      if (gen_n_ood) rc.gen.n_ood = *gen_n_ood;
      if (gen_side) rc.gen.side = *gen_side;
      if (gen_shift) rc.gen.shift = *gen_shift;
      return cmd_gen(rc, gen_out, out);
    }
    if (train->parsed()) {
      train_flags.apply(rc);
      data_flags.apply(rc.data);
      return cmd_train(rc, ckpt_out, loss_out, vocab_out, out, err);
    }
    if (eval->parsed()) {
      train_flags.apply(rc);
      data_flags.apply(rc.data);
      if (eval_alpha) rc.eval.alpha = detail::parse_alpha(*eval_alpha);
      if (eval_methods) rc.eval.methods = detail::split_list(*eval_methods);
      return cmd_eval(rc, eval_ckpt, eval_out, out, err);
    }
    if (sweep->parsed()) {
      train_flags.apply(rc);
      data_flags.apply(rc.data);
      std::vector<std::size_t> pads;
      for (const auto& p : detail::split_list(sweep_pads)) {
        try {
          std::size_t used = 0;
          const unsigned long v = std::stoul(p, &used);
          if (used != p.size()) throw std::invalid_argument(p);
          pads.push_back(v);
        } catch (const std::exception&) {
          throw ConfigError("bad pad value '" + p + "'");
        }
      }
      return cmd_sweep_padding(rc, pads, sweep_threads, sweep_out, out, err);
    }
    if (exp->parsed()) return cmd_export(exp_ckpt, exp_data, exp_alpha, exp_out, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitFailure;
}

}  // namespace rpk::cli
