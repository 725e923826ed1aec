#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "termgnn/datagen/dataset.hpp"
#include "termgnn/gnn/model.hpp"

namespace termgnn::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitFormat = 2, kExitDiverged = 3 };

/// Bad flag combinations or arguments that parse but make no sense.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing or unreadable input files.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Maps an exception escaping a command to its exit code.
int exit_code_for(const std::exception& e);

lang::Program read_program(const fs::path& path);

struct GenOptions {
  std::string kind = "clf";  // "clf" or "seg"
  std::size_t n = 950;
  double split = 0.8;
  fs::path out;
  datagen::GeneratorConfig generator;  // generator.seed is the dataset seed
  interp::FuzzOptions fuzz;
  unsigned threads = 0;
};

/// Writes data.jsonl, meta.json and vocab.json; returns the dataset.
datagen::Dataset run_gen(const GenOptions& o, std::ostream& log);

struct TrainOptions {
  std::string model = "gat-clf";
  fs::path data;
  int sessions = 10;
  fs::path out;
  std::uint64_t seed = 0;
  int max_epochs = 300;
  int patience = 20;
  int batch_size = 30;
  std::optional<double> learning_rate;
  gnn::HyperParams hp;
  unsigned jobs = 0;  // 0 = hardware concurrency
  bool verbose = false;
};

struct SessionSummary {
  int session = 0;
  std::uint64_t seed = 0;
  int best_epoch = 0;
  int epochs_run = 0;
  double best_metric = 0.0;
  fs::path model_file;
  fs::path curve_file;
};

/// Seed of session k of a run seeded with `seed`.
std::uint64_t session_seed(std::uint64_t seed, int k);

/// Trains o.sessions independent models. Session k writes
/// <model>-s<k>.model and <model>-s<k>.csv (the learning curve); a
/// summary.json aggregates the best test metrics.
std::vector<SessionSummary> run_train(const TrainOptions& o, std::ostream& log);

struct EvalOptions {
  std::vector<fs::path> models;
  fs::path data;
  std::string split = "test";
  std::optional<fs::path> curves_dir;  // ROC and PR curves as CSV, classifiers only
};

/// JSON report with one entry per model and mean/std over models.
std::string run_eval(const EvalOptions& o);

/// JSON with both class probabilities and the verdict.
std::string run_predict(const fs::path& model, const fs::path& program);

/// JSON with per-node confidences, the predicted mask and the most likely
/// culprit loop.
std::string run_segment(const fs::path& model, const fs::path& program);

/// Pretty-printed slice.
std::string run_slice(const fs::path& program, lang::NodeId loop);

/// JSON {"found": bool, "inputs": {...}}.
std::string run_witness(const fs::path& program, lang::NodeId loop, const interp::FuzzOptions& fuzz);

/// DOT text; without a model the plain AST.
std::string run_viz(const std::optional<fs::path>& model, const fs::path& program);

/// Classifier verdict, then for nonterminating programs the culprit loop from
/// the segmenter, its slice and a witness for the slice. JSON.
std::string run_debug(const fs::path& program, const fs::path& clf, const fs::path& seg,
                      const interp::FuzzOptions& fuzz);

}  // namespace termgnn::cli
