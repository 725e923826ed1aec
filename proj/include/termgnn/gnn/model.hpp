#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "termgnn/autodiff/tape.hpp"
#include "termgnn/graph/encoding.hpp"
#include "termgnn/lang/ast.hpp"

namespace termgnn::gnn {

using ad::Tape;
using ad::Tensor;
using ad::Var;

enum class ModelKind { GcnClf, GatClf, GcnSeg, GatSeg, Rnn, Gru };

std::string to_string(ModelKind k);
/// Parses "gcn-clf", "gat-clf", "gcn-seg", "gat-seg", "rnn" or "gru".
ModelKind parse_model_kind(std::string_view s);

bool is_graph_model(ModelKind k);
bool is_segmenter(ModelKind k);
bool uses_attention(ModelKind k);

struct HyperParams {
  int hidden = 64;
  int graph_layers = 4;
  int dense_hidden = 64;
  double leaky_slope = 0.2;
  double focal_gamma = 2.0;
  double focal_alpha = 0.25;
};

/// Named parameter tensors in insertion order.
class ParamSet {
 public:
  void add(std::string name, Tensor value);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  std::vector<Tensor>& values() { return values_; }
  const std::vector<Tensor>& values() const { return values_; }
  bool operator==(const ParamSet& o) const { return names_ == o.names_ && values_ == o.values_; }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::map<std::string, std::size_t> index_;
};

/// Per-line instruction dictionary for the recurrent baselines: one token
/// per pretty-printed source line (leading whitespace stripped), UNK at 0.
class LineVocabulary {
 public:
  static LineVocabulary build(std::span<const lang::Program> programs);
  static LineVocabulary from_lines(std::vector<std::string> lines);
  std::size_t size() const { return lines_.size(); }
  const std::vector<std::string>& lines() const { return lines_; }
  std::vector<std::int32_t> encode(const lang::Program& p) const;
  bool operator==(const LineVocabulary& o) const { return lines_ == o.lines_; }

 private:
  std::vector<std::string> lines_{"<UNK>"};
  std::map<std::string, std::int32_t> index_{{"<UNK>", 0}};
};

struct Model {
  ModelKind kind = ModelKind::GatClf;
  HyperParams hp;
  ParamSet params;
  graph::Vocabulary vocab;        // graph models
  LineVocabulary line_vocab;      // recurrent models
  std::string vocab_file = "vocab.json";

  std::size_t input_dim() const { return is_graph_model(kind) ? vocab.size() : line_vocab.size(); }
};

/// Glorot-uniform weights and zero biases, seeded per parameter name.
ParamSet init_params(ModelKind kind, const HyperParams& hp, std::size_t input_dim, std::uint64_t seed);

class VocabularyMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameters placed on a tape, looked up by name.
class BoundParams {
 public:
  BoundParams(Tape& tape, const ParamSet& params, bool requires_grad);
  BoundParams(std::span<const std::string> names, std::span<const Var> vars);
  Var operator[](const std::string& name) const;
  const std::vector<Var>& vars() const { return vars_; }

 private:
  std::map<std::string, Var> by_name_;
  std::vector<Var> vars_;
};

/// Directed-edge attention of one GAT layer: edge e carries a message from
/// src[e] to dst[e] with raw score e_ij and normalized alpha_ij.
struct AttentionRecord {
  std::vector<std::int32_t> src;
  std::vector<std::int32_t> dst;
  std::vector<double> raw;
  std::vector<double> alpha;
};

struct LayerTrace {
  std::vector<AttentionRecord>* attention = nullptr;  // one entry per GAT layer
};

// Tape-level forward passes, shared by training, inference and gradient checks.
// A layer without input features (std::nullopt) reads the one-hot node
// tokens of the graph, so H W reduces to a row lookup in W.
Var gcn_layer(std::optional<Var> h, Var w, Var b, const graph::BatchedGraph& g);
Var gat_layer(std::optional<Var> h, Var w, Var a, const graph::BatchedGraph& g, double slope,
              AttentionRecord* record = nullptr);
Var graph_stack(const BoundParams& p, ModelKind kind, const HyperParams& hp, const graph::BatchedGraph& g,
                LayerTrace trace = {});
/// Per-graph probabilities, one row (p_nonterm, p_term) per member graph.
Var classifier_forward(const BoundParams& p, ModelKind kind, const HyperParams& hp, const graph::BatchedGraph& g,
                       LayerTrace trace = {});
/// Per-node confidence column.
Var segmenter_forward(const BoundParams& p, ModelKind kind, const HyperParams& hp, const graph::BatchedGraph& g,
                      LayerTrace trace = {});
/// Per-sequence probabilities; sequences must be non-empty.
Var recurrent_forward(Tape& tape, const BoundParams& p, ModelKind kind, const HyperParams& hp,
                      std::span<const std::vector<std::int32_t>> sequences);

// Inference on a model.
std::vector<std::pair<double, double>> classify(const Model& m, const graph::BatchedGraph& g);
std::vector<double> segment(const Model& m, const graph::BatchedGraph& g);
std::vector<std::pair<double, double>> recurrent_classify(const Model& m,
                                                          std::span<const std::vector<std::int32_t>> sequences);

struct EdgeScore {
  std::int32_t u = 0;  // AST parent side
  std::int32_t v = 0;
  double alpha_max = 0.0;
  double display = 0.0;  // min-max normalized over the graph's non-self edges
};

struct AttentionView {
  AttentionRecord last_layer;
  std::vector<EdgeScore> edges;  // one per undirected tree edge, in graph edge order
};

/// Attention of the last GAT layer on a single graph. Throws
/// std::invalid_argument for models without attention.
AttentionView extract_attention(const Model& m, const graph::FeatureGraph& g);

/// Display scores from directed attention: per undirected non-self edge the
/// larger of its two alphas, min-max normalized; all scores are 1 when every
/// edge has the same value.
std::vector<EdgeScore> display_scores(const graph::FeatureGraph& g, const AttentionRecord& rec);

/// Checks that a graph was encoded with the model's vocabulary size.
void check_input(const Model& m, const graph::BatchedGraph& g);

}  // namespace termgnn::gnn
