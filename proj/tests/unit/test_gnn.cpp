#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fixtures.hpp"
#include "model_helpers.hpp"
#include "oracles.hpp"
#include "termgnn/gnn/persist.hpp"
#include "termgnn/lang/parser.hpp"

using namespace termgnn;
using namespace termgnn::gnn;
using ad::Tape;
using ad::Tensor;
using ad::Var;

namespace {

graph::FeatureGraph two_node_graph() {
  graph::FeatureGraph g;
  g.n_nodes = 2;
  g.vocab_size = 2;
  g.tokens = {0, 1};
  g.edges = {{0, 0}, {1, 1}, {0, 1}};
  g.node_origin = {0, 1};
  g.node_line = {0, 0};
  return g;
}

Model random_model(ModelKind kind, std::size_t vocab_size, std::uint64_t seed, HyperParams hp = {}) {
  Model m;
  m.kind = kind;
  m.hp = hp;
  std::vector<graph::TokenKey> keys{graph::kUnkKey};
  for (std::size_t i = 1; i < vocab_size; ++i) keys.push_back({"Var", "v" + std::to_string(100 + i)});
  m.vocab = graph::Vocabulary::from_keys(keys);
  m.params = init_params(kind, hp, m.input_dim(), seed);
  return m;
}

std::vector<double> incoming_sums(const AttentionRecord& rec, std::int32_t n) {
  std::vector<double> sums(static_cast<std::size_t>(n), 0.0);
  for (std::size_t e = 0; e < rec.dst.size(); ++e) sums[rec.dst[e]] += rec.alpha[e];
  return sums;
}

}  // namespace

TEST_CASE("gcn layer on an isolated node with identity weights") {
  graph::FeatureGraph g;
  g.n_nodes = 1;
  g.vocab_size = 2;
  g.tokens = {0};
  g.edges = {{0, 0}};
  g.node_origin = {0};
  g.node_line = {0};
  Tape tape;
  Var w = tape.leaf(Tensor::Identity(2, 2));
  Var b = tape.leaf(Tensor::Zero(1, 2));
  Var out = gcn_layer(std::nullopt, w, b, graph::batch(g));
  CHECK(out.value()(0, 0) == 1.0);
  CHECK(out.value()(0, 1) == 0.0);
}

TEST_CASE("gcn layer on two connected nodes weighs every neighbour by one half") {
  Tape tape;
  Var w = tape.leaf(Tensor::Identity(2, 2));
  Var b = tape.leaf(Tensor::Zero(1, 2));
  Var out = gcn_layer(std::nullopt, w, b, graph::batch(two_node_graph()));
  for (int i = 0; i < 2; ++i) {
    CHECK(out.value()(i, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(out.value()(i, 1) == doctest::Approx(0.5).epsilon(1e-15));
  }
}

TEST_CASE("gcn layer matches the dense normalized-adjacency oracle") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    auto n = static_cast<std::int32_t>(rng.uniform_int(1, 50));
    const std::int32_t vocab = 6, dout = 5;
    auto fg = testing::random_tree(rng, n, vocab);
    auto bg = graph::batch(fg);
    std::vector<std::vector<double>> adj(n, std::vector<double>(n, 0.0));
    for (auto [u, v] : fg.edges) adj[u][v] = adj[v][u] = 1.0;

    Tape tape;
    bool hidden_input = trial % 2 == 1;
    Eigen::Index din = hidden_input ? 4 : vocab;
    Tensor w = Tensor::Random(din, dout);
    Tensor b = Tensor::Random(1, dout);
    Tensor h = hidden_input ? Tensor(Tensor::Random(n, din)) : Tensor::Zero(n, din);
    if (!hidden_input) {
      for (std::int32_t i = 0; i < n; ++i) h(i, fg.tokens[i]) = 1.0;
    }
    std::optional<Var> hv;
    if (hidden_input) hv = tape.leaf(h);
    Var out = gcn_layer(hv, tape.leaf(w), tape.leaf(b), bg);

    std::vector<std::vector<double>> hh(n), ww(din);
    for (std::int32_t i = 0; i < n; ++i) hh[i].assign(h.row(i).data(), h.row(i).data() + din);
    for (Eigen::Index k = 0; k < din; ++k) ww[k].assign(w.row(k).data(), w.row(k).data() + dout);
    std::vector<double> bb(b.data(), b.data() + dout);
    auto ref = oracle::dense_gcn(adj, hh, ww, bb);
    double worst = 0.0;
    for (std::int32_t i = 0; i < n; ++i) {
      for (std::int32_t k = 0; k < dout; ++k) worst = std::max(worst, std::abs(out.value()(i, k) - ref[i][k]));
    }
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("attention of a node with only its self-loop is exactly one") {
  graph::FeatureGraph g;
  g.n_nodes = 1;
  g.vocab_size = 3;
  g.tokens = {2};
  g.edges = {{0, 0}};
  g.node_origin = {0};
  g.node_line = {0};
  Tape tape;
  AttentionRecord rec;
  gat_layer(std::nullopt, tape.leaf(Tensor::Random(3, 4)), tape.leaf(Tensor::Random(8, 1)), graph::batch(g), 0.2,
            &rec);
  REQUIRE(rec.alpha.size() == 1);
  CHECK(rec.alpha[0] == 1.0);
}

TEST_CASE("identical node features give uniform attention") {
  Rng rng(5);
  auto fg = testing::random_tree(rng, 20, 1);  // every token is 0
  auto bg = graph::batch(fg);
  Tape tape;
  AttentionRecord rec;
  gat_layer(std::nullopt, tape.leaf(Tensor::Random(1, 6)), tape.leaf(Tensor::Random(12, 1)), bg, 0.2, &rec);
  for (std::size_t e = 0; e < rec.alpha.size(); ++e) {
    CHECK(rec.alpha[e] == doctest::Approx(1.0 / bg.degree[rec.dst[e]]).epsilon(1e-12));
  }
}

TEST_CASE("attention sums to one over every neighbourhood at every layer") {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    auto fg = testing::random_tree(rng, 20, 8);
    Model m = random_model(ModelKind::GatClf, 8, rng.next());
    Tape tape;
    BoundParams p(tape, m.params, false);
    std::vector<AttentionRecord> records;
    classifier_forward(p, m.kind, m.hp, graph::batch(fg), {&records});
    REQUIRE(records.size() == 4);
    for (const auto& rec : records) {
      for (double s : incoming_sums(rec, fg.n_nodes)) CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
      for (double a : rec.alpha) {
        CHECK(a > 0.0);
        CHECK(a <= 1.0);
      }
    }
  }
}

TEST_CASE("classifier outputs are distributions and batching does not change them") {
  Rng rng(21);
  for (ModelKind kind : {ModelKind::GcnClf, ModelKind::GatClf}) {
    Model m = random_model(kind, 9, 77);
    std::vector<graph::FeatureGraph> graphs;
    for (int i = 0; i < 6; ++i) graphs.push_back(testing::random_tree(rng, static_cast<std::int32_t>(rng.uniform_int(1, 30)), 9));
    auto batched = classify(m, graph::batch(graphs));
    REQUIRE(batched.size() == graphs.size());
    for (std::size_t i = 0; i < graphs.size(); ++i) {
      auto single = classify(m, graph::batch(graphs[i]));
      CHECK(single[0].first + single[0].second == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(single[0].first > 0.0);
      CHECK(single[0].second > 0.0);
      CHECK(std::abs(single[0].first - batched[i].first) <= 1e-6);
      CHECK(std::abs(single[0].second - batched[i].second) <= 1e-6);
    }
  }
}

TEST_CASE("classification is invariant and segmentation equivariant under node permutation") {
  Rng rng(33);
  for (int trial = 0; trial < 5; ++trial) {
    auto fg = testing::random_tree(rng, 25, 10);
    auto perm = testing::random_permutation(rng, fg.n_nodes);
    auto pg = testing::permute(fg, perm);
    for (ModelKind kind : {ModelKind::GcnClf, ModelKind::GatClf}) {
      Model m = random_model(kind, 10, 100 + trial);
      auto a = classify(m, graph::batch(fg));
      auto b = classify(m, graph::batch(pg));
      CHECK(std::abs(a[0].second - b[0].second) <= 1e-12);
    }
    for (ModelKind kind : {ModelKind::GcnSeg, ModelKind::GatSeg}) {
      Model m = random_model(kind, 10, 200 + trial);
      auto a = segment(m, graph::batch(fg));
      auto b = segment(m, graph::batch(pg));
      for (std::int32_t i = 0; i < fg.n_nodes; ++i) {
        CHECK(a[i] > 0.0);
        CHECK(a[i] < 1.0);
        CHECK(std::abs(a[i] - b[perm[i]]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("display scores") {
  SUBCASE("a single edge is scored one") {
    Model m = random_model(ModelKind::GatClf, 2, 3);
    auto view = extract_attention(m, two_node_graph());
    REQUIRE(view.edges.size() == 1);
    CHECK(view.edges[0].display == 1.0);
    CHECK(view.last_layer.alpha.size() == 4);
  }
  SUBCASE("scores follow the nodes under permutation") {
    Rng rng(41);
    auto fg = testing::random_tree(rng, 15, 6);
    auto perm = testing::random_permutation(rng, fg.n_nodes);
    auto pg = testing::permute(fg, perm);
    Model m = random_model(ModelKind::GatSeg, 6, 8);
    auto a = extract_attention(m, fg).edges;
    auto b = extract_attention(m, pg).edges;
    REQUIRE(a.size() == b.size());
    for (std::size_t e = 0; e < a.size(); ++e) {
      CHECK(b[e].u == perm[a[e].u]);
      CHECK(b[e].v == perm[a[e].v]);
      CHECK(std::abs(a[e].display - b[e].display) <= 1e-9);
      CHECK(a[e].display >= 0.0);
      CHECK(a[e].display <= 1.0);
    }
  }
  SUBCASE("models without attention are rejected") {
    Model m = random_model(ModelKind::GcnClf, 2, 3);
    CHECK_THROWS_AS(extract_attention(m, two_node_graph()), std::invalid_argument);
  }
}

TEST_CASE("vocabulary size mismatches are rejected") {
  Model m = random_model(ModelKind::GatClf, 5, 1);
  CHECK_THROWS_AS(classify(m, graph::batch(two_node_graph())), VocabularyMismatch);
}

TEST_CASE("rnn without recurrence depends only on the last token") {
  HyperParams hp;
  hp.hidden = 6;
  Model m;
  m.kind = ModelKind::Rnn;
  m.hp = hp;
  m.line_vocab = LineVocabulary::from_lines({"<UNK>", "a = 1", "b = 2", "while a > b:"});
  m.params = init_params(m.kind, hp, m.input_dim(), 5);
  m.params.at("rnn.hidden").setZero();
  std::vector<std::vector<std::int32_t>> seqs{{1, 2, 3}, {3}, {2, 1, 1, 3}, {1, 2}};
  auto out = recurrent_classify(m, seqs);
  CHECK(out[0].second == doctest::Approx(out[1].second).epsilon(1e-15));
  CHECK(out[0].second == doctest::Approx(out[2].second).epsilon(1e-15));
  CHECK(out[0].second != doctest::Approx(out[3].second));
  for (auto [p0, p1] : out) CHECK(p0 + p1 == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<std::vector<std::int32_t>> empty{{}};
  CHECK_THROWS_AS(recurrent_classify(m, empty), std::invalid_argument);
}

TEST_CASE("padded recurrent batches match single sequences") {
  for (ModelKind kind : {ModelKind::Rnn, ModelKind::Gru}) {
    Model m;
    m.kind = kind;
    m.hp.hidden = 5;
    m.line_vocab = LineVocabulary::from_lines({"<UNK>", "x", "y", "z"});
    m.params = init_params(kind, m.hp, m.input_dim(), 12);
    std::vector<std::vector<std::int32_t>> seqs{{1, 2, 3, 1, 2}, {3}, {2, 2}};
    auto batched = recurrent_classify(m, seqs);
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      auto single = recurrent_classify(m, std::span(seqs).subspan(i, 1));
      CHECK(std::abs(single[0].second - batched[i].second) <= 1e-12);
    }
  }
}

TEST_CASE("line vocabulary strips indentation and maps unknown lines to zero") {
  auto p = lang::parse(fixtures::kRunningExample);
  std::vector<lang::Program> ps{p};
  auto v = LineVocabulary::build(ps);
  CHECK(v.lines()[0] == "<UNK>");
  auto enc = v.encode(p);
  CHECK(enc.size() == 7);  // header plus six statement lines
  CHECK(std::find(enc.begin(), enc.end(), 0) == enc.end());
  auto q = lang::parse("def main(a, b):\n  while a > b:\n    a = 3\n");
  auto enc_q = v.encode(q);
  CHECK(enc_q[1] == enc[1]);  // "while a > b:" is shared
  CHECK(enc_q[2] == 0);
}

TEST_CASE("model gradients match finite differences") {
  Rng rng(2718);
  HyperParams hp;
  hp.hidden = 5;
  hp.dense_hidden = 4;
  for (ModelKind kind : {ModelKind::GcnClf, ModelKind::GatClf, ModelKind::GcnSeg, ModelKind::GatSeg, ModelKind::Rnn,
                         ModelKind::Gru}) {
    for (int trial = 0; trial < 3; ++trial) {
      auto res = testing::grad_check_model(kind, hp, rng);
      INFO(to_string(kind));
      CHECK(res.checked > 0);
      CHECK(res.max_rel_error <= 1e-4);
    }
  }
}

TEST_CASE("initialisation depends on the seed and kind only") {
  HyperParams hp;
  auto a = init_params(ModelKind::GatClf, hp, 12, 4);
  auto b = init_params(ModelKind::GatClf, hp, 12, 4);
  auto c = init_params(ModelKind::GatClf, hp, 12, 5);
  CHECK(a == b);
  CHECK(!(a == c));
  CHECK(a.at("graph.0.weight").rows() == 12);
  CHECK(a.at("graph.3.attention").rows() == 2 * hp.hidden);
  CHECK(a.at("head.weight").cols() == 2);
  auto s = init_params(ModelKind::GatSeg, hp, 12, 4);
  CHECK(s.at("head.weight").cols() == 1);
  CHECK(!s.contains("dense.0.weight"));
}

TEST_CASE("model files round trip bit-exactly") {
  for (ModelKind kind : {ModelKind::GcnClf, ModelKind::GatSeg, ModelKind::Gru}) {
    Model m = random_model(kind, 7, 99);
    if (!is_graph_model(kind)) {
      m.line_vocab = LineVocabulary::from_lines({"<UNK>", "a = 1", "while a > 0:"});
      m.params = init_params(kind, m.hp, m.input_dim(), 99);
    }
    std::string bytes = serialize(m);
    Model back = deserialize(bytes);
    CHECK(back.kind == m.kind);
    CHECK(back.params == m.params);
    if (is_graph_model(kind)) CHECK(back.vocab == m.vocab);
    CHECK(back.line_vocab == m.line_vocab);
    CHECK(serialize(back) == bytes);
  }
}

TEST_CASE("malformed model files are rejected") {
  Model m = random_model(ModelKind::GatClf, 4, 1);
  std::string bytes = serialize(m);
  CHECK_THROWS_AS(deserialize("not a model"), ModelFormatError);
  CHECK_THROWS_AS(deserialize(bytes.substr(0, bytes.size() - 3)), ModelFormatError);
  CHECK_THROWS_AS(deserialize(bytes + "x"), ModelFormatError);
  std::string bad_version = bytes;
  bad_version[8] = 7;
  CHECK_THROWS_AS(deserialize(bad_version), ModelFormatError);
  // Swap the declared shape of the first tensor.
  std::string bad_shape = bytes;
  auto pos = bad_shape.find("\"rows\":4,\"cols\":64");
  REQUIRE(pos != std::string::npos);
  bad_shape.replace(pos, 18, "\"rows\":64,\"cols\":4");
  CHECK_THROWS_AS(deserialize(bad_shape), ModelFormatError);
  CHECK_THROWS_AS(load_model("/nonexistent/model.bin"), ModelFormatError);
}

TEST_CASE("training is deterministic and restores the best epoch") {
  Rng rng(64);
  Model blank;
  blank.kind = ModelKind::GcnClf;
  blank.hp.hidden = 8;
  blank.hp.dense_hidden = 8;
  std::vector<graph::TokenKey> keys{graph::kUnkKey};
  for (int i = 1; i < 5; ++i) keys.push_back({"Var", std::string(1, static_cast<char>('a' + i))});
  blank.vocab = graph::Vocabulary::from_keys(keys);
  std::vector<Example> train_set, test_set;
  for (int i = 0; i < 40; ++i) {
    Example e;
    e.graph = testing::random_tree(rng, static_cast<std::int32_t>(rng.uniform_int(2, 8)), 5);
    // Label: whether token 4 occurs.
    e.label = std::count(e.graph.tokens.begin(), e.graph.tokens.end(), 4) > 0;
    (i < 30 ? train_set : test_set).push_back(e);
  }
  TrainConfig cfg;
  cfg.max_epochs = 15;
  cfg.patience = 5;
  cfg.batch_size = 7;
  cfg.learning_rate = 1e-2;
  cfg.seed = 3;
  auto r1 = train(blank, train_set, test_set, cfg);
  auto r2 = train(blank, train_set, test_set, cfg);
  CHECK(serialize(r1.model) == serialize(r2.model));
  REQUIRE(r1.history.size() == r2.history.size());
  for (std::size_t i = 0; i < r1.history.size(); ++i) CHECK(r1.history[i].train_loss == r2.history[i].train_loss);
  CHECK(evaluate(r1.model, test_set).metric == r1.best_metric);
  CHECK(r1.history[r1.best_epoch - 1].test_metric == r1.best_metric);
  cfg.seed = 4;
  auto r3 = train(blank, train_set, test_set, cfg);
  CHECK(serialize(r3.model) != serialize(r1.model));
}
