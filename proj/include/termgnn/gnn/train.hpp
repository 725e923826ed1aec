#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "termgnn/gnn/model.hpp"

namespace termgnn::gnn {

/// A program prepared for every model family.
struct Example {
  graph::FeatureGraph graph;
  std::vector<std::int32_t> line_tokens;
  int label = 0;                // 0 nonterminating, 1 terminating
  std::vector<int> node_mask;   // segmentation target per graph node, may be empty
};

Example make_example(const lang::Program& p, const Model& blank, int label, std::vector<int> node_mask = {});

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double test_metric = 0.0;  // ROC-AUC for classifiers, micro Dice for segmenters
};

struct TrainConfig {
  int max_epochs = 300;
  int patience = 20;
  int batch_size = 30;
  std::optional<double> learning_rate;  // default depends on the model kind
  std::uint64_t seed = 0;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  Model model;  // parameters of the best epoch
  std::vector<EpochLog> history;
  int best_epoch = 0;
  double best_metric = 0.0;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 1e-4 for classifiers (graph and recurrent), 1e-3 for segmenters.
double default_learning_rate(ModelKind k);

/// Mean loss of a batch on a tape.
Var batch_loss(Tape& tape, const BoundParams& p, const Model& m, std::span<const Example* const> batch);

/// Trains blank.params from a fresh initialisation seeded by cfg.seed. After
/// each epoch the test split is scored; training stops once neither the
/// metric nor, on ties, the test loss has improved for cfg.patience epochs,
/// and the best epoch's parameters are returned.
TrainResult train(Model blank, std::span<const Example> train_set, std::span<const Example> test_set,
                  const TrainConfig& cfg);

/// Probability of the terminating class per example.
std::vector<double> predict_terminating(const Model& m, std::span<const Example> examples);
/// Per-node confidences per example.
std::vector<std::vector<double>> predict_confidences(const Model& m, std::span<const Example> examples);

struct Evaluation {
  double metric = 0.0;
  double loss = 0.0;
};

Evaluation evaluate(const Model& m, std::span<const Example> examples);

}  // namespace termgnn::gnn
