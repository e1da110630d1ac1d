// Batch driver wiring ingestion, cleaning, feature extraction, training,
// prediction and evaluation into one command-line tool.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ppdetect/corpus.hpp"
#include "ppdetect/eval.hpp"
#include "ppdetect/features.hpp"
#include "ppdetect/semantics.hpp"
#include "ppdetect/svm.hpp"
#include "ppdetect/synth.hpp"
#include "ppdetect/timeutil.hpp"

namespace {

using namespace ppdetect;

int g_verbosity = 1;

void log_line(const std::string& message) {
  if (g_verbosity > 0) std::cerr << "[ppdetect] " << message << '\n';
}

struct CorpusArgs {
  std::string format = "jsonl";
  std::string delimiter = ",";
  std::string timezone = "Z";
};

void add_corpus_flags(CLI::App* cmd, CorpusArgs& args) {
  cmd->add_option("--format", args.format, "Input format: jsonl or csv")
      ->check(CLI::IsMember({"jsonl", "csv"}));
  cmd->add_option("--delimiter", args.delimiter, "Field delimiter for csv input");
  cmd->add_option("--tz", args.timezone,
                  "Zone of naive timestamps, e.g. +08:00 (a '# timezone:' file header wins)")
      ->envname("PPDETECT_TZ");
}

IngestOptions ingest_options(const CorpusArgs& args) {
  IngestOptions opts;
  opts.format = args.format == "csv" ? CorpusFormat::delimited_text : CorpusFormat::jsonl;
  if (args.delimiter.size() != 1) throw CLI::ValidationError("--delimiter must be one character");
  opts.delimiter = args.delimiter[0];
  auto offset = parse_utc_offset(args.timezone == "UTC" ? "Z" : args.timezone);
  if (!offset) throw CLI::ValidationError("--tz must look like Z, +08:00 or -0530");
  opts.utc_offset_s = *offset;
  return opts;
}

int utc_offset_of(const CorpusArgs& args) {
  auto offset = parse_utc_offset(args.timezone == "UTC" ? "Z" : args.timezone);
  return offset ? *offset : 0;
}

Corpus load_corpus(const std::string& path, const CorpusArgs& args) {
  IngestResult result = ingest(path, ingest_options(args));
  for (const RecordError& err : result.errors)
    std::cerr << "[ppdetect] " << path << ":" << err.line << ": " << err.message << '\n';
  log_line(path + ": " + std::to_string(result.corpus.records.size()) + " records, " +
           std::to_string(result.errors.size()) + " record errors");
  return std::move(result.corpus);
}

struct SimilarityArgs {
  std::string stop_words_path;
  std::string dictionary_path;
  double ratio_threshold = 0.8;
  int pair_flag_threshold = 3;
};

void add_similarity_flags(CLI::App* cmd, SimilarityArgs& args) {
  cmd->add_option("--stop-words", args.stop_words_path, "Stop-word file (one token per line)");
  cmd->add_option("--dictionary", args.dictionary_path,
                  "Dictionary file enabling longest-match segmentation");
  cmd->add_option("--ratio-threshold", args.ratio_threshold,
                  "Common-word ratio above which two comments are similar")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--pair-threshold", args.pair_flag_threshold,
                  "Similar-pair count that flags a user");
}

Segmenter make_segmenter(const SimilarityArgs& args) {
  Segmenter seg;
  if (!args.stop_words_path.empty()) seg.stop_words = read_stop_word_file(args.stop_words_path);
  if (!args.dictionary_path.empty()) {
    seg.mode = Segmenter::Mode::dictionary;
    seg.dictionary = read_dictionary_file(args.dictionary_path);
  }
  return seg;
}

struct TrainArgs {
  double c = 1.0;
  double gamma = 0.2;
  double kkt_tol = 1e-3;
  long max_passes = 10000;
  int folds = 10;
  std::uint64_t seed = 1;
  int features_set = 5;
  std::vector<double> grid_c;
  std::vector<double> grid_gamma;
  bool no_cv = false;
};

void add_train_flags(CLI::App* cmd, TrainArgs& args) {
  cmd->add_option("--c", args.c, "Soft-margin C");
  cmd->add_option("--gamma", args.gamma, "RBF gamma");
  cmd->add_option("--kkt-tol", args.kkt_tol, "KKT tolerance for the solver");
  cmd->add_option("--max-passes", args.max_passes, "Optimization step limit");
  cmd->add_option("--folds", args.folds, "Cross-validation folds");
  cmd->add_option("--seed", args.seed, "Seed for all randomized steps");
  cmd->add_option("--features-set", args.features_set,
                  "Feature ablation: 2 (reply+interval), 4 (non-semantic) or 5 (all)")
      ->check(CLI::IsMember({2, 4, 5}));
  cmd->add_option("--grid-c", args.grid_c, "C candidates for grid search")->delimiter(',');
  cmd->add_option("--grid-gamma", args.grid_gamma, "Gamma candidates for grid search")
      ->delimiter(',');
  cmd->add_flag("--no-cv", args.no_cv, "Skip cross-validation before the final fit");
}

std::vector<std::size_t> mask_of(int features_set) {
  switch (features_set) {
    case 2:
      return {0, 1};
    case 4:
      return {0, 1, 2, 3};
    default:
      return {0, 1, 2, 3, 4};
  }
}

TrainConfig train_config(const TrainArgs& args) {
  TrainConfig cfg;
  cfg.c = args.c;
  cfg.gamma = args.gamma;
  cfg.kkt_tol = args.kkt_tol;
  cfg.max_passes = args.max_passes;
  cfg.folds = args.folds;
  cfg.seed = args.seed;
  cfg.feature_mask = mask_of(args.features_set);
  for (double c : args.grid_c)
    for (double g : args.grid_gamma) cfg.grid.push_back({c, g});
  return cfg;
}

void attach_labels(std::vector<LabeledVector>& rows, const std::string& labels_path,
                   bool require_all) {
  if (!labels_path.empty()) {
    const std::map<std::string, Label> labels = read_label_file(labels_path);
    for (LabeledVector& row : rows) {
      auto it = labels.find(row.user_id);
      if (it != labels.end()) row.label = it->second;
    }
  }
  if (require_all)
    for (const LabeledVector& row : rows)
      if (!row.label)
        throw std::runtime_error("user '" + row.user_id + "' has no label; pass --labels");
}

/// Runs CV (unless disabled), trains the final model on all rows and
/// prints the summary to `out`.
SvmModel fit_model(const std::vector<LabeledVector>& rows, TrainConfig cfg, bool no_cv,
                   std::ostream& out) {
  if (!no_cv) {
    const CvResult cv = cross_validate(rows, cfg);
    for (const CvCandidate& cand : cv.candidates) {
      char line[128];
      std::snprintf(line, sizeof line, "cv c=%g gamma=%g accuracy=%.4f", cand.c, cand.gamma,
                    cand.mean_accuracy);
      out << line << '\n';
    }
    cfg.c = cv.best_c;
    cfg.gamma = cv.best_gamma;
    char line[128];
    std::snprintf(line, sizeof line, "cv best c=%g gamma=%g", cv.best_c, cv.best_gamma);
    out << line << '\n';
  }
  const SvmModel model = train(rows, cfg);
  out << "support_vectors " << model.support_vectors.size() << '\n';
  if (!model.converged)
    std::cerr << "[ppdetect] warning: solver hit the step limit before meeting the KKT "
                 "tolerance; model flagged non-converged\n";
  return model;
}

std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void write_predictions(const std::vector<LabeledVector>& rows, const SvmModel& model,
                       std::ostream& out) {
  out << "user_id,label,decision_value\n";
  for (const LabeledVector& row : rows) {
    const Prediction p = predict(model, row.features);
    out << row.user_id << ',' << to_string(p.label) << ',' << format_double(p.decision_value)
        << '\n';
  }
}

std::map<std::string, Label> read_prediction_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::map<std::string, Label> predictions;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::size_t c1 = line.find(',');
    if (c1 == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected user_id,label");
    std::string user = line.substr(0, c1);
    if (line_no == 1 && user == "user_id") continue;
    std::size_t c2 = line.find(',', c1 + 1);
    std::string label_text = line.substr(c1 + 1, c2 == std::string::npos ? c2 : c2 - c1 - 1);
    auto label = parse_label(label_text);
    if (!label)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad label '" +
                               label_text + "'");
    predictions[user] = *label;
  }
  return predictions;
}

/// Opens --out or falls back to stdout.
class OutputTarget {
 public:
  explicit OutputTarget(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw std::runtime_error("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::vector<LabeledVector> corpus_features(const Corpus& corpus, const Segmenter& seg,
                                           const SimilarityConfig& similarity,
                                           const FeatureOptions& opts) {
  std::vector<LabeledVector> rows;
  for (const UserProfile& profile : group_by_user(corpus)) {
    LabeledVector row;
    row.user_id = profile.user_id;
    row.features = extract(profile, count_similar_pairs(profile, seg, similarity), opts);
    row.label = profile.label;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Paid-poster detection toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Declarative key=value defaults for any flag");
  app.add_flag("-q{0},--quiet{0},-v{2},--verbose{2}", g_verbosity, "Log verbosity");

  // ingest
  auto* cmd_ingest = app.add_subcommand("ingest", "Parse a comment file into canonical JSONL");
  std::string in_path, out_path, labels_path, labels_out;
  CorpusArgs corpus_args;
  cmd_ingest->add_option("--in", in_path, "Input comment file")->required();
  cmd_ingest->add_option("--out", out_path, "Output path (default: stdout)");
  add_corpus_flags(cmd_ingest, corpus_args);

  // clean
  auto* cmd_clean = app.add_subcommand("clean", "Apply the cleaning pipeline to a corpus");
  CleaningConfig cleaning;
  bool keep_anonymous = false, no_dedup = false;
  std::vector<std::string> exclude_ids, anonymous_ids;
  cmd_clean->add_option("--in", in_path, "Input comment file")->required();
  cmd_clean->add_option("--out", out_path, "Output path (default: stdout)");
  add_corpus_flags(cmd_clean, corpus_args);
  cmd_clean->add_option("--min-comments", cleaning.min_comments,
                        "Drop users with fewer comments than this");
  cmd_clean->add_option("--exclude", exclude_ids, "Extra user ids to drop entirely");
  cmd_clean->add_option("--anonymous-id", anonymous_ids, "User ids that mean anonymous");
  cmd_clean->add_flag("--keep-anonymous", keep_anonymous, "Keep anonymous records");
  cmd_clean->add_flag("--no-dedup", no_dedup, "Skip duplicate removal");

  // features
  auto* cmd_features = app.add_subcommand("features", "Extract per-user feature vectors");
  SimilarityArgs similarity_args;
  cmd_features->add_option("--in", in_path, "Cleaned corpus file")->required();
  cmd_features->add_option("--out", out_path, "Output path (default: stdout)");
  cmd_features->add_option("--labels", labels_path, "Label file to join on user_id");
  add_corpus_flags(cmd_features, corpus_args);
  add_similarity_flags(cmd_features, similarity_args);

  // train
  auto* cmd_train = app.add_subcommand("train", "Train the RBF-kernel classifier");
  TrainArgs train_args;
  std::string features_path, model_path;
  cmd_train->add_option("--features", features_path, "Feature dump file")->required();
  cmd_train->add_option("--labels", labels_path, "Label file (if the dump has no labels)");
  cmd_train->add_option("--out", model_path, "Model output path")->required();
  add_train_flags(cmd_train, train_args);

  // predict
  auto* cmd_predict = app.add_subcommand("predict", "Classify users with a trained model");
  cmd_predict->add_option("--model", model_path, "Model file")->required();
  cmd_predict->add_option("--features", features_path, "Feature dump file")->required();
  cmd_predict->add_option("--out", out_path, "Output path (default: stdout)");

  // eval
  auto* cmd_eval = app.add_subcommand("eval", "Score predictions against ground truth");
  std::string pred_path, truth_path;
  cmd_eval->add_option("--pred", pred_path, "Prediction file (user_id,label[,...])")->required();
  cmd_eval->add_option("--truth", truth_path, "Label file with the benchmark classes")
      ->required();
  cmd_eval->add_option("--out", out_path, "Output path (default: stdout)");

  // synth
  auto* cmd_synth = app.add_subcommand("synth", "Generate a labeled synthetic corpus");
  std::string synth_config_path;
  long n_normal = -1, n_paid = -1;
  std::uint64_t synth_seed = 0;
  bool synth_seed_set = false, synth_check = false;
  cmd_synth->add_option("--synth-config", synth_config_path,
                        "Generator config file (n_normal, n_paid, seed, weights)");
  cmd_synth->add_option("--n-normal", n_normal, "Number of normal users");
  cmd_synth->add_option("--n-paid", n_paid, "Number of paid-poster users");
  cmd_synth->add_option("--seed", synth_seed, "Generator seed")
      ->each([&](const std::string&) { synth_seed_set = true; });
  cmd_synth->add_option("--out", out_path, "Corpus output path (default: stdout)");
  cmd_synth->add_option("--labels-out", labels_out, "Label file output path");
  cmd_synth->add_flag("--check", synth_check,
                      "Verify realized feature bins against the drawn ones");

  // pipeline
  auto* cmd_pipeline =
      app.add_subcommand("pipeline", "Train on one corpus, evaluate on another");
  std::string train_corpus, test_corpus, train_labels, test_labels, pred_out;
  cmd_pipeline->add_option("--train-corpus", train_corpus, "Training comment file")->required();
  cmd_pipeline->add_option("--test-corpus", test_corpus, "Test comment file")->required();
  cmd_pipeline->add_option("--train-labels", train_labels, "Training label file")->required();
  cmd_pipeline->add_option("--test-labels", test_labels, "Benchmark label file")->required();
  cmd_pipeline->add_option("--out", out_path, "Metrics output path (default: stdout)");
  cmd_pipeline->add_option("--pred-out", pred_out, "Also write test predictions here");
  add_corpus_flags(cmd_pipeline, corpus_args);
  add_similarity_flags(cmd_pipeline, similarity_args);
  add_train_flags(cmd_pipeline, train_args);

  for (CLI::App* sub : app.get_subcommands(nullptr)) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 1;
  }

  try {
    if (*cmd_ingest) {
      const Corpus corpus = load_corpus(in_path, corpus_args);
      OutputTarget out(out_path);
      write_corpus_jsonl(corpus, out.stream());
    } else if (*cmd_clean) {
      Corpus corpus = load_corpus(in_path, corpus_args);
      for (const std::string& id : exclude_ids) cleaning.excluded_user_ids.insert(id);
      for (const std::string& id : anonymous_ids) cleaning.anonymous_user_ids.insert(id);
      cleaning.drop_anonymous = !keep_anonymous;
      cleaning.dedup = !no_dedup;
      const Corpus cleaned = clean(corpus, cleaning);
      log_line("clean: " + std::to_string(corpus.records.size()) + " -> " +
               std::to_string(cleaned.records.size()) + " records");
      OutputTarget out(out_path);
      write_corpus_jsonl(cleaned, out.stream());
    } else if (*cmd_features) {
      Corpus corpus = load_corpus(in_path, corpus_args);
      if (!labels_path.empty()) corpus.label_map = read_label_file(labels_path);
      const Segmenter seg = make_segmenter(similarity_args);
      const SimilarityConfig similarity{similarity_args.ratio_threshold,
                                        similarity_args.pair_flag_threshold};
      FeatureOptions opts;
      opts.utc_offset_s = utc_offset_of(corpus_args);
      const std::vector<LabeledVector> rows = corpus_features(corpus, seg, similarity, opts);
      log_line("features: " + std::to_string(rows.size()) + " users");
      OutputTarget out(out_path);
      write_feature_file(rows, out.stream());
    } else if (*cmd_train) {
      std::vector<LabeledVector> rows = read_feature_file(features_path);
      attach_labels(rows, labels_path, true);
      const SvmModel model = fit_model(rows, train_config(train_args), train_args.no_cv,
                                       std::cout);
      save_model(model, model_path);
      log_line("model written to " + model_path);
    } else if (*cmd_predict) {
      const SvmModel model = load_model(model_path);
      const std::vector<LabeledVector> rows = read_feature_file(features_path);
      OutputTarget out(out_path);
      write_predictions(rows, model, out.stream());
    } else if (*cmd_eval) {
      const std::map<std::string, Label> predictions = read_prediction_file(pred_path);
      const std::map<std::string, Label> truth = read_label_file(truth_path);
      const ConfusionMatrix m = confusion(predictions, truth);
      const Metrics k = metrics(m);
      OutputTarget out(out_path);
      out.stream() << metrics_table(m, k) << metrics_csv_line(m, k) << '\n';
    } else if (*cmd_synth) {
      SynthConfig cfg;
      if (!synth_config_path.empty()) cfg = load_synth_config(synth_config_path);
      if (n_normal >= 0) cfg.n_normal = n_normal;
      if (n_paid >= 0) cfg.n_paid = n_paid;
      if (synth_seed_set) cfg.seed = synth_seed;
      if (synth_check) {
        const RoundTripReport report = round_trip_check(cfg);
        for (const RoundTripMismatch& mm : report.mismatches)
          std::cerr << "[ppdetect] mismatch: user " << mm.user_id << " " << mm.feature
                    << " drawn bin " << mm.drawn_bin << " realized bin " << mm.realized_bin
                    << '\n';
        std::cout << "round_trip users=" << report.users_checked
                  << " mismatches=" << report.mismatches.size() << '\n';
        if (!report.ok()) return 2;
        return 0;
      }
      const Corpus corpus = generate(cfg);
      log_line("synth: " + std::to_string(corpus.records.size()) + " records for " +
               std::to_string(cfg.n_normal + cfg.n_paid) + " users");
      if (!labels_out.empty()) write_label_file(corpus.label_map, labels_out);
      OutputTarget out(out_path);
      write_corpus_jsonl(corpus, out.stream());
    } else if (*cmd_pipeline) {
      const Segmenter seg = make_segmenter(similarity_args);
      const SimilarityConfig similarity{similarity_args.ratio_threshold,
                                        similarity_args.pair_flag_threshold};
      FeatureOptions opts;
      opts.utc_offset_s = utc_offset_of(corpus_args);

      Corpus train_c = load_corpus(train_corpus, corpus_args);
      train_c.label_map = read_label_file(train_labels);
      std::vector<LabeledVector> train_rows =
          corpus_features(clean(train_c), seg, similarity, opts);
      attach_labels(train_rows, "", true);
      log_line("pipeline: " + std::to_string(train_rows.size()) + " training users");

      OutputTarget out(out_path);
      const SvmModel model =
          fit_model(train_rows, train_config(train_args), train_args.no_cv, out.stream());

      Corpus test_c = load_corpus(test_corpus, corpus_args);
      const std::vector<LabeledVector> test_rows =
          corpus_features(clean(test_c), seg, similarity, opts);
      std::map<std::string, Label> predictions;
      for (const LabeledVector& row : test_rows)
        predictions[row.user_id] = predict(model, row.features).label;
      if (!pred_out.empty()) {
        std::ofstream pf(pred_out, std::ios::binary);
        if (!pf) throw std::runtime_error("cannot write '" + pred_out + "'");
        write_predictions(test_rows, model, pf);
      }

      const std::map<std::string, Label> truth = read_label_file(test_labels);
      const ConfusionMatrix m = confusion(predictions, truth);
      const Metrics k = metrics(m);
      out.stream() << metrics_table(m, k) << metrics_csv_line(m, k) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "[ppdetect] error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
