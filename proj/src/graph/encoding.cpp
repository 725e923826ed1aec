#include "termgnn/graph/encoding.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "termgnn/util/random.hpp"

namespace termgnn::graph {

TokenKey token_key(const lang::AstNode& node) {
  return TokenKey{std::string(lang::to_string(node.kind)), node.lexeme};
}

Vocabulary Vocabulary::build(std::span<const lang::Program> programs) {
  std::set<TokenKey> seen;
  for (const auto& p : programs) {
    for (const auto& n : lang::flatten(p)) seen.insert(token_key(n));
  }
  seen.erase(kUnkKey);
  std::vector<TokenKey> keys{kUnkKey};
  keys.insert(keys.end(), seen.begin(), seen.end());
  return from_keys(std::move(keys));
}

Vocabulary Vocabulary::from_keys(std::vector<TokenKey> keys) {
  if (keys.empty() || keys.front() != kUnkKey) throw std::invalid_argument("vocabulary must start with UNK");
  Vocabulary v;
  v.keys_ = std::move(keys);
  v.index_.clear();
  for (std::size_t i = 0; i < v.keys_.size(); ++i) {
    if (!v.index_.emplace(v.keys_[i], static_cast<std::int32_t>(i)).second) {
      throw std::invalid_argument("duplicate vocabulary entry");
    }
  }
  return v;
}

std::int32_t Vocabulary::index_of(const TokenKey& key) const {
  auto it = index_.find(key);
  return it == index_.end() ? 0 : it->second;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = fnv1a("vocab");
  for (const auto& k : keys_) {
    h = splitmix64(h ^ fnv1a(k.kind));
    h = splitmix64(h ^ fnv1a(k.lexeme));
  }
  return h;
}

std::string Vocabulary::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& k : keys_) arr.push_back({k.kind, k.lexeme});
  return arr.dump();
}

Vocabulary Vocabulary::from_json(const std::string& text) {
  auto arr = nlohmann::json::parse(text);
  if (!arr.is_array()) throw std::invalid_argument("vocabulary file must hold a JSON array");
  std::vector<TokenKey> keys;
  for (const auto& e : arr) {
    if (!e.is_array() || e.size() != 2) throw std::invalid_argument("vocabulary entries must be [kind, lexeme]");
    keys.push_back({e[0].get<std::string>(), e[1].get<std::string>()});
  }
  return from_keys(std::move(keys));
}

std::vector<std::vector<double>> FeatureGraph::feature_matrix() const {
  std::vector<std::vector<double>> m(n_nodes, std::vector<double>(vocab_size, 0.0));
  for (std::int32_t i = 0; i < n_nodes; ++i) m[i][tokens[i]] = 1.0;
  return m;
}

FeatureGraph ast_to_graph(const lang::Program& p, const Vocabulary& v) {
  auto nodes = lang::flatten(p);
  FeatureGraph g;
  g.n_nodes = static_cast<std::int32_t>(nodes.size());
  g.vocab_size = static_cast<std::int32_t>(v.size());
  g.tokens.reserve(nodes.size());
  for (const auto& n : nodes) {
    g.tokens.push_back(v.index_of(token_key(n)));
    g.node_origin.push_back(n.id);
    g.node_line.push_back(n.line);
  }
  for (std::int32_t i = 0; i < g.n_nodes; ++i) g.edges.emplace_back(i, i);
  for (const auto& n : nodes) {
    if (n.parent != lang::kNoNode) g.edges.emplace_back(n.parent, n.id);
  }
  return g;
}

BatchedGraph batch(std::span<const FeatureGraph> graphs) {
  if (graphs.empty()) throw std::invalid_argument("cannot batch an empty list of graphs");
  BatchedGraph b;
  b.vocab_size = graphs.front().vocab_size;
  b.n_graphs = static_cast<std::int32_t>(graphs.size());
  b.node_offset.push_back(0);
  for (std::size_t k = 0; k < graphs.size(); ++k) {
    const auto& g = graphs[k];
    if (g.vocab_size != b.vocab_size) throw std::invalid_argument("graphs in a batch must share a vocabulary");
    std::int32_t off = b.n_nodes;
    b.tokens.insert(b.tokens.end(), g.tokens.begin(), g.tokens.end());
    b.graph_id.insert(b.graph_id.end(), g.n_nodes, static_cast<std::int32_t>(k));
    for (auto [u, w] : g.edges) b.edges.emplace_back(u + off, w + off);
    b.n_nodes += g.n_nodes;
    b.node_offset.push_back(b.n_nodes);
  }

  std::vector<std::vector<std::int32_t>> incoming(b.n_nodes);
  for (auto [u, w] : b.edges) {
    incoming[w].push_back(u);
    if (u != w) incoming[u].push_back(w);
  }
  b.degree.resize(b.n_nodes);
  for (std::int32_t i = 0; i < b.n_nodes; ++i) {
    auto& in = incoming[i];
    std::sort(in.begin(), in.end());
    b.degree[i] = static_cast<std::int32_t>(in.size());
    for (auto j : in) {
      b.src.push_back(j);
      b.dst.push_back(i);
    }
  }
  return b;
}

BatchedGraph batch(const FeatureGraph& g) { return batch(std::span<const FeatureGraph>(&g, 1)); }

}  // namespace termgnn::graph
