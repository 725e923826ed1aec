#include "termgnn/gnn/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "termgnn/autodiff/optim.hpp"
#include "termgnn/metrics/metrics.hpp"
#include "termgnn/util/random.hpp"

namespace termgnn::gnn {

namespace {

// Tape temporaries are a few hundred KB each; above glibc's default mmap
// threshold every one of them becomes an mmap/munmap pair.
void keep_large_allocations_on_heap() {
#ifdef __GLIBC__
  static const bool done = [] {
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
    return true;
  }();
  (void)done;
#endif
}


constexpr std::size_t kEvalBatch = 64;

graph::BatchedGraph batch_of(std::span<const Example* const> batch) {
  std::vector<graph::FeatureGraph> graphs;
  graphs.reserve(batch.size());
  for (const Example* e : batch) graphs.push_back(e->graph);
  return graph::batch(graphs);
}

std::vector<const Example*> pointers(std::span<const Example> examples) {
  std::vector<const Example*> out;
  for (const auto& e : examples) out.push_back(&e);
  return out;
}

}  // namespace

Example make_example(const lang::Program& p, const Model& blank, int label, std::vector<int> node_mask) {
  Example e;
  if (is_graph_model(blank.kind)) {
    e.graph = graph::ast_to_graph(p, blank.vocab);
  } else {
    e.line_tokens = blank.line_vocab.encode(p);
  }
  e.label = label;
  e.node_mask = std::move(node_mask);
  return e;
}

double default_learning_rate(ModelKind k) { return is_segmenter(k) ? 1e-3 : 1e-4; }

Var batch_loss(Tape& tape, const BoundParams& p, const Model& m, std::span<const Example* const> batch) {
  if (is_segmenter(m.kind)) {
    graph::BatchedGraph g = batch_of(batch);
    std::vector<double> y;
    for (const Example* e : batch) {
      if (static_cast<std::int32_t>(e->node_mask.size()) != e->graph.n_nodes) {
        throw std::invalid_argument("segmentation example without a full node mask");
      }
      y.insert(y.end(), e->node_mask.begin(), e->node_mask.end());
    }
    Var conf = segmenter_forward(p, m.kind, m.hp, g);
    return ad::focal_loss(conf, y, m.hp.focal_gamma, m.hp.focal_alpha);
  }
  std::vector<double> y;
  for (const Example* e : batch) y.push_back(e->label);
  Var probs;
  if (is_graph_model(m.kind)) {
    probs = classifier_forward(p, m.kind, m.hp, batch_of(batch));
  } else {
    std::vector<std::vector<std::int32_t>> seqs;
    for (const Example* e : batch) seqs.push_back(e->line_tokens);
    probs = recurrent_forward(tape, p, m.kind, m.hp, seqs);
  }
  return ad::binary_cross_entropy(ad::select_column(probs, 1), y);
}

std::vector<double> predict_terminating(const Model& m, std::span<const Example> examples) {
  std::vector<double> out;
  for (std::size_t start = 0; start < examples.size(); start += kEvalBatch) {
    auto chunk = examples.subspan(start, std::min(kEvalBatch, examples.size() - start));
    std::vector<std::pair<double, double>> probs;
    if (is_graph_model(m.kind)) {
      std::vector<graph::FeatureGraph> graphs;
      for (const auto& e : chunk) graphs.push_back(e.graph);
      probs = classify(m, graph::batch(graphs));
    } else {
      std::vector<std::vector<std::int32_t>> seqs;
      for (const auto& e : chunk) seqs.push_back(e.line_tokens);
      probs = recurrent_classify(m, seqs);
    }
    for (auto [p0, p1] : probs) out.push_back(p1);
  }
  return out;
}

std::vector<std::vector<double>> predict_confidences(const Model& m, std::span<const Example> examples) {
  std::vector<std::vector<double>> out;
  for (std::size_t start = 0; start < examples.size(); start += kEvalBatch) {
    auto chunk = examples.subspan(start, std::min(kEvalBatch, examples.size() - start));
    std::vector<graph::FeatureGraph> graphs;
    for (const auto& e : chunk) graphs.push_back(e.graph);
    graph::BatchedGraph b = graph::batch(graphs);
    std::vector<double> conf = segment(m, b);
    for (std::int32_t k = 0; k < b.n_graphs; ++k) {
      out.emplace_back(conf.begin() + b.node_offset[k], conf.begin() + b.node_offset[k + 1]);
    }
  }
  return out;
}

Evaluation evaluate(const Model& m, std::span<const Example> examples) {
  Evaluation ev;
  if (examples.empty()) return ev;
  if (is_segmenter(m.kind)) {
    auto conf = predict_confidences(m, examples);
    metrics::SegReport total;
    double loss = 0.0, nodes = 0.0;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      std::vector<int> pred(conf[i].size());
      for (std::size_t j = 0; j < conf[i].size(); ++j) {
        pred[j] = conf[i][j] >= 0.5;
        loss += ad::focal_loss(examples[i].node_mask[j], conf[i][j], m.hp.focal_gamma, m.hp.focal_alpha);
      }
      nodes += static_cast<double>(conf[i].size());
      total = metrics::merge(total, metrics::seg_scores(pred, examples[i].node_mask));
    }
    ev.metric = total.dice;
    ev.loss = loss / nodes;
    return ev;
  }
  auto p = predict_terminating(m, examples);
  std::vector<int> labels;
  double loss = 0.0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    labels.push_back(examples[i].label);
    loss += ad::cross_entropy(examples[i].label, p[i]);
  }
  ev.loss = loss / static_cast<double>(examples.size());
  bool both = std::count(labels.begin(), labels.end(), 1) > 0 && std::count(labels.begin(), labels.end(), 0) > 0;
  ev.metric = both ? metrics::roc(p, labels).area : 0.0;
  return ev;
}

TrainResult train(Model blank, std::span<const Example> train_set, std::span<const Example> test_set,
                  const TrainConfig& cfg) {
  if (train_set.empty()) throw std::invalid_argument("empty training set");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch size must be positive");
  keep_large_allocations_on_heap();
  TrainResult res;
  Model& m = blank;
  m.params = init_params(m.kind, m.hp, m.input_dim(), derive_seed(cfg.seed, fnv1a("init")));
  std::span<const Example> monitor = test_set.empty() ? train_set : test_set;

  ad::AdamState adam;
  adam.learning_rate = cfg.learning_rate.value_or(default_learning_rate(m.kind));
  std::vector<Tensor*> param_ptrs;
  for (auto& t : m.params.values()) param_ptrs.push_back(&t);

  Rng rng(derive_seed(cfg.seed, fnv1a("shuffle")));
  std::vector<const Example*> order = pointers(train_set);

  ParamSet best = m.params;
  Evaluation best_eval{-1.0, std::numeric_limits<double>::infinity()};
  int stale = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t n = std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - start);
      std::span<const Example* const> batch(order.data() + start, n);
      Tape tape;
      BoundParams p(tape, m.params, true);
      Var loss = batch_loss(tape, p, m, batch);
      double value = loss.value()(0, 0);
      if (!std::isfinite(value)) {
        throw TrainingDiverged("non-finite loss in epoch " + std::to_string(epoch));
      }
      tape.backward(loss);
      std::vector<Tensor> grads;
      grads.reserve(p.vars().size());
      for (Var v : p.vars()) grads.push_back(v.grad());
      ad::adam_step(param_ptrs, grads, adam);
      loss_sum += value * static_cast<double>(n);
    }

    Evaluation ev = evaluate(m, monitor);
    EpochLog log{epoch, loss_sum / static_cast<double>(order.size()), ev.loss, ev.metric};
    res.history.push_back(log);
    if (cfg.on_epoch) cfg.on_epoch(log);

    bool improved = ev.metric > best_eval.metric || (ev.metric == best_eval.metric && ev.loss < best_eval.loss);
    if (improved) {
      best_eval = ev;
      best = m.params;
      res.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  m.params = std::move(best);
  res.best_metric = best_eval.metric;
  res.model = std::move(m);
  return res;
}

}  // namespace termgnn::gnn
