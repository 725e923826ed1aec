#include "termgnn/gnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "termgnn/autodiff/optim.hpp"
#include "termgnn/lang/printer.hpp"
#include "termgnn/util/random.hpp"

namespace termgnn::gnn {

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::GcnClf: return "gcn-clf";
    case ModelKind::GatClf: return "gat-clf";
    case ModelKind::GcnSeg: return "gcn-seg";
    case ModelKind::GatSeg: return "gat-seg";
    case ModelKind::Rnn: return "rnn";
    case ModelKind::Gru: return "gru";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view s) {
  for (auto k : {ModelKind::GcnClf, ModelKind::GatClf, ModelKind::GcnSeg, ModelKind::GatSeg, ModelKind::Rnn,
                 ModelKind::Gru}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown model kind '" + std::string(s) + "'");
}

bool is_graph_model(ModelKind k) { return k != ModelKind::Rnn && k != ModelKind::Gru; }
bool is_segmenter(ModelKind k) { return k == ModelKind::GcnSeg || k == ModelKind::GatSeg; }
bool uses_attention(ModelKind k) { return k == ModelKind::GatClf || k == ModelKind::GatSeg; }

void ParamSet::add(std::string name, Tensor value) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter " + name);
  index_[name] = names_.size();
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
}

Tensor& ParamSet::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter " + name);
  return values_[it->second];
}

const Tensor& ParamSet::at(const std::string& name) const { return const_cast<ParamSet*>(this)->at(name); }

namespace {

std::vector<std::string> source_lines(const lang::Program& p) {
  std::vector<std::string> out;
  std::istringstream in(lang::pretty_print(p));
  std::string line;
  while (std::getline(in, line)) {
    auto first = line.find_first_not_of(' ');
    out.push_back(first == std::string::npos ? "" : line.substr(first));
  }
  return out;
}

}  // namespace

LineVocabulary LineVocabulary::build(std::span<const lang::Program> programs) {
  std::set<std::string> seen;
  for (const auto& p : programs) {
    for (auto& l : source_lines(p)) seen.insert(std::move(l));
  }
  seen.erase("<UNK>");
  std::vector<std::string> lines{"<UNK>"};
  lines.insert(lines.end(), seen.begin(), seen.end());
  return from_lines(std::move(lines));
}

LineVocabulary LineVocabulary::from_lines(std::vector<std::string> lines) {
  if (lines.empty() || lines.front() != "<UNK>") throw std::invalid_argument("line vocabulary must start with UNK");
  LineVocabulary v;
  v.lines_ = std::move(lines);
  v.index_.clear();
  for (std::size_t i = 0; i < v.lines_.size(); ++i) v.index_[v.lines_[i]] = static_cast<std::int32_t>(i);
  return v;
}

std::vector<std::int32_t> LineVocabulary::encode(const lang::Program& p) const {
  std::vector<std::int32_t> out;
  for (const auto& l : source_lines(p)) {
    auto it = index_.find(l);
    out.push_back(it == index_.end() ? 0 : it->second);
  }
  return out;
}

ParamSet init_params(ModelKind kind, const HyperParams& hp, std::size_t input_dim, std::uint64_t seed) {
  ParamSet ps;
  auto in = static_cast<Eigen::Index>(input_dim);
  auto H = static_cast<Eigen::Index>(hp.hidden);
  auto D = static_cast<Eigen::Index>(hp.dense_hidden);
  auto weight = [&](const std::string& name, Eigen::Index r, Eigen::Index c) {
    ps.add(name, ad::glorot_uniform(r, c, derive_seed(seed, fnv1a(name))));
  };
  auto zeros = [&](const std::string& name, Eigen::Index r, Eigen::Index c) { ps.add(name, Tensor::Zero(r, c)); };

  if (is_graph_model(kind)) {
    for (int l = 0; l < hp.graph_layers; ++l) {
      std::string pre = "graph." + std::to_string(l) + ".";
      weight(pre + "weight", l == 0 ? in : H, H);
      if (uses_attention(kind)) {
        weight(pre + "attention", 2 * H, 1);
      } else {
        zeros(pre + "bias", 1, H);
      }
    }
    if (is_segmenter(kind)) {
      weight("head.weight", H, 1);
      zeros("head.bias", 1, 1);
    } else {
      weight("dense.0.weight", H, D);
      zeros("dense.0.bias", 1, D);
      weight("dense.1.weight", D, D);
      zeros("dense.1.bias", 1, D);
      weight("head.weight", D, 2);
      zeros("head.bias", 1, 2);
    }
  } else if (kind == ModelKind::Rnn) {
    weight("rnn.input", in, H);
    weight("rnn.hidden", H, H);
    zeros("rnn.bias", 1, H);
    weight("out.weight", H, 2);
    zeros("out.bias", 1, 2);
  } else {
    for (const char* gate : {"z", "r", "n"}) weight(std::string("gru.input_") + gate, in, H);
    for (const char* gate : {"z", "r", "n"}) weight(std::string("gru.hidden_") + gate, H, H);
    for (const char* gate : {"z", "r", "n"}) zeros(std::string("gru.bias_") + gate, 1, H);
    weight("out.weight", H, 2);
    zeros("out.bias", 1, 2);
  }
  return ps;
}

BoundParams::BoundParams(Tape& tape, const ParamSet& params, bool requires_grad) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    Var v = tape.leaf(params.values()[i], requires_grad);
    by_name_[params.names()[i]] = v;
    vars_.push_back(v);
  }
}

BoundParams::BoundParams(std::span<const std::string> names, std::span<const Var> vars) {
  if (names.size() != vars.size()) throw std::invalid_argument("parameter names and values differ in count");
  for (std::size_t i = 0; i < names.size(); ++i) by_name_[names[i]] = vars[i];
  vars_.assign(vars.begin(), vars.end());
}

Var BoundParams::operator[](const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw std::out_of_range("no parameter " + name);
  return it->second;
}

namespace {

Var project(std::optional<Var> h, Var w, const graph::BatchedGraph& g) {
  if (h) return ad::matmul(*h, w);
  if (w.rows() != g.vocab_size) throw ad::ShapeError("first layer weight rows must equal the vocabulary size");
  return ad::gather_rows(w, g.tokens);
}

}  // namespace

Var gcn_layer(std::optional<Var> h, Var w, Var b, const graph::BatchedGraph& g) {
  Var hw = project(h, w, g);
  std::vector<double> coeff(g.src.size());
  for (std::size_t e = 0; e < g.src.size(); ++e) {
    coeff[e] = 1.0 / (std::sqrt(static_cast<double>(g.degree[g.src[e]])) *
                      std::sqrt(static_cast<double>(g.degree[g.dst[e]])));
  }
  Var msg = ad::scale_rows(ad::gather_rows(hw, g.src), coeff);
  Var agg = ad::scatter_add_rows(msg, g.dst, g.n_nodes);
  return ad::relu(ad::add_bias(agg, b));
}

Var gat_layer(std::optional<Var> h, Var w, Var a, const graph::BatchedGraph& g, double slope,
              AttentionRecord* record) {
  Var z = project(h, w, g);
  Eigen::Index D = z.cols();
  if (a.rows() != 2 * D || a.cols() != 1) throw ad::ShapeError("attention vector must be (2 * out_dim) x 1");
  // a^T (z_i | z_j) = z_i . a_dst + z_j . a_src
  Var s_dst = ad::matmul(z, ad::slice_rows(a, 0, D));
  Var s_src = ad::matmul(z, ad::slice_rows(a, D, D));
  Var e = ad::leaky_relu(ad::add(ad::gather_rows(s_dst, g.dst), ad::gather_rows(s_src, g.src)), slope);
  Var alpha = ad::softmax_over_segments(e, g.dst, g.n_nodes);
  if (record) {
    record->src = g.src;
    record->dst = g.dst;
    record->raw.assign(e.value().data(), e.value().data() + e.value().size());
    record->alpha.assign(alpha.value().data(), alpha.value().data() + alpha.value().size());
  }
  Var msg = ad::mul_rows(ad::gather_rows(z, g.src), alpha);
  return ad::relu(ad::scatter_add_rows(msg, g.dst, g.n_nodes));
}

Var graph_stack(const BoundParams& p, ModelKind kind, const HyperParams& hp, const graph::BatchedGraph& g,
                LayerTrace trace) {
  std::optional<Var> h;
  for (int l = 0; l < hp.graph_layers; ++l) {
    std::string pre = "graph." + std::to_string(l) + ".";
    if (uses_attention(kind)) {
      AttentionRecord rec;
      h = gat_layer(h, p[pre + "weight"], p[pre + "attention"], g, hp.leaky_slope,
                    trace.attention ? &rec : nullptr);
      if (trace.attention) trace.attention->push_back(std::move(rec));
    } else {
      h = gcn_layer(h, p[pre + "weight"], p[pre + "bias"], g);
    }
  }
  return *h;
}

namespace {

Var dense(Var x, Var w, Var b) { return ad::add_bias(ad::matmul(x, w), b); }

}  // namespace

Var classifier_forward(const BoundParams& p, ModelKind kind, const HyperParams& hp, const graph::BatchedGraph& g,
                       LayerTrace trace) {
  Var h = graph_stack(p, kind, hp, g, trace);
  Var pooled = ad::mean_rows_by_group(h, g.graph_id, g.n_graphs);
  Var d0 = ad::relu(dense(pooled, p["dense.0.weight"], p["dense.0.bias"]));
  Var d1 = ad::relu(dense(d0, p["dense.1.weight"], p["dense.1.bias"]));
  return ad::softmax_rows(dense(d1, p["head.weight"], p["head.bias"]));
}

Var segmenter_forward(const BoundParams& p, ModelKind kind, const HyperParams& hp, const graph::BatchedGraph& g,
                      LayerTrace trace) {
  Var h = graph_stack(p, kind, hp, g, trace);
  return ad::sigmoid(dense(h, p["head.weight"], p["head.bias"]));
}

Var recurrent_forward(Tape& tape, const BoundParams& p, ModelKind kind, const HyperParams& hp,
                      std::span<const std::vector<std::int32_t>> sequences) {
  if (sequences.empty()) throw std::invalid_argument("no sequences");
  std::size_t T = 0;
  for (const auto& s : sequences) {
    if (s.empty()) throw std::invalid_argument("empty token sequence");
    T = std::max(T, s.size());
  }
  auto B = static_cast<Eigen::Index>(sequences.size());
  Var h = tape.leaf(Tensor::Zero(B, hp.hidden));
  bool gru = kind == ModelKind::Gru;
  std::vector<std::int32_t> tok(sequences.size());
  for (std::size_t t = 0; t < T; ++t) {
    Tensor mask(B, 1);
    bool all_active = true;
    for (std::size_t i = 0; i < sequences.size(); ++i) {
      bool active = t < sequences[i].size();
      tok[i] = active ? sequences[i][t] : 0;
      mask(static_cast<Eigen::Index>(i), 0) = active ? 1.0 : 0.0;
      all_active = all_active && active;
    }
    Var cand;
    if (!gru) {
      Var pre = ad::add(ad::gather_rows(p["rnn.input"], tok), ad::matmul(h, p["rnn.hidden"]));
      cand = ad::tanh(ad::add_bias(pre, p["rnn.bias"]));
    } else {
      auto gate = [&](const char* g, Var hidden_in) {
        std::string s(g);
        Var pre = ad::add(ad::gather_rows(p["gru.input_" + s], tok), ad::matmul(hidden_in, p["gru.hidden_" + s]));
        return ad::add_bias(pre, p["gru.bias_" + s]);
      };
      Var z = ad::sigmoid(gate("z", h));
      Var r = ad::sigmoid(gate("r", h));
      Var n = ad::tanh(gate("n", ad::mul(r, h)));
      cand = ad::add(ad::mul(ad::affine(z, -1.0, 1.0), n), ad::mul(z, h));
    }
    if (all_active) {
      h = cand;
    } else {
      Var keep_new = tape.leaf(mask);
      Var keep_old = tape.leaf((1.0 - mask.array()).matrix());
      h = ad::add(ad::mul_rows(cand, keep_new), ad::mul_rows(h, keep_old));
    }
  }
  return ad::softmax_rows(ad::add_bias(ad::matmul(h, p["out.weight"]), p["out.bias"]));
}

void check_input(const Model& m, const graph::BatchedGraph& g) {
  if (static_cast<std::size_t>(g.vocab_size) != m.vocab.size()) {
    throw VocabularyMismatch("graph encoded with a vocabulary of size " + std::to_string(g.vocab_size) +
                             ", model expects " + std::to_string(m.vocab.size()));
  }
}

namespace {

std::vector<std::pair<double, double>> rows_to_pairs(const Tensor& t) {
  std::vector<std::pair<double, double>> out(static_cast<std::size_t>(t.rows()));
  for (Eigen::Index i = 0; i < t.rows(); ++i) out[static_cast<std::size_t>(i)] = {t(i, 0), t(i, 1)};
  return out;
}

}  // namespace

std::vector<std::pair<double, double>> classify(const Model& m, const graph::BatchedGraph& g) {
  if (!is_graph_model(m.kind) || is_segmenter(m.kind)) throw std::invalid_argument("not a graph classifier");
  check_input(m, g);
  Tape tape;
  BoundParams p(tape, m.params, false);
  return rows_to_pairs(classifier_forward(p, m.kind, m.hp, g).value());
}

std::vector<double> segment(const Model& m, const graph::BatchedGraph& g) {
  if (!is_segmenter(m.kind)) throw std::invalid_argument("not a segmentation model");
  check_input(m, g);
  Tape tape;
  BoundParams p(tape, m.params, false);
  const Tensor& c = segmenter_forward(p, m.kind, m.hp, g).value();
  return {c.data(), c.data() + c.size()};
}

std::vector<std::pair<double, double>> recurrent_classify(const Model& m,
                                                          std::span<const std::vector<std::int32_t>> sequences) {
  if (is_graph_model(m.kind)) throw std::invalid_argument("not a recurrent model");
  Tape tape;
  BoundParams p(tape, m.params, false);
  return rows_to_pairs(recurrent_forward(tape, p, m.kind, m.hp, sequences).value());
}

std::vector<EdgeScore> display_scores(const graph::FeatureGraph& g, const AttentionRecord& rec) {
  std::map<std::pair<std::int32_t, std::int32_t>, double> alpha;
  for (std::size_t e = 0; e < rec.src.size(); ++e) alpha[{rec.src[e], rec.dst[e]}] = rec.alpha[e];
  std::vector<EdgeScore> out;
  for (auto [u, v] : g.edges) {
    if (u == v) continue;
    out.push_back({u, v, std::max(alpha.at({u, v}), alpha.at({v, u})), 0.0});
  }
  if (out.empty()) return out;
  auto [lo, hi] = std::minmax_element(out.begin(), out.end(),
                                      [](const EdgeScore& a, const EdgeScore& b) { return a.alpha_max < b.alpha_max; });
  double mn = lo->alpha_max, mx = hi->alpha_max;
  for (auto& e : out) e.display = mx > mn ? (e.alpha_max - mn) / (mx - mn) : 1.0;
  return out;
}

AttentionView extract_attention(const Model& m, const graph::FeatureGraph& fg) {
  if (!uses_attention(m.kind)) throw std::invalid_argument("model " + to_string(m.kind) + " has no attention layers");
  graph::BatchedGraph g = graph::batch(fg);
  check_input(m, g);
  Tape tape;
  BoundParams p(tape, m.params, false);
  std::vector<AttentionRecord> records;
  if (is_segmenter(m.kind)) {
    segmenter_forward(p, m.kind, m.hp, g, {&records});
  } else {
    classifier_forward(p, m.kind, m.hp, g, {&records});
  }
  AttentionView view;
  view.last_layer = std::move(records.back());
  view.edges = display_scores(fg, view.last_layer);
  return view;
}

}  // namespace termgnn::gnn
