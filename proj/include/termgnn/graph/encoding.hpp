#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "termgnn/lang/ast.hpp"

namespace termgnn::graph {

/// (node kind, lexeme), e.g. ("Var", "d") or ("While", "").
struct TokenKey {
  std::string kind;
  std::string lexeme;
  auto operator<=>(const TokenKey&) const = default;
};

inline const TokenKey kUnkKey{"<UNK>", ""};

class Vocabulary {
 public:
  Vocabulary() : keys_{kUnkKey} { index_[kUnkKey] = 0; }

  /// Every distinct token key of the programs, sorted, after UNK at index 0.
  static Vocabulary build(std::span<const lang::Program> programs);
  /// Rebuilds from keys in index order; keys[0] must be UNK.
  static Vocabulary from_keys(std::vector<TokenKey> keys);

  std::size_t size() const { return keys_.size(); }
  /// Index of a key, or 0 (UNK) if it is absent.
  std::int32_t index_of(const TokenKey& key) const;
  const std::vector<TokenKey>& keys() const { return keys_; }

  /// Stable hash of the key list, stored in model files to detect mismatches.
  std::uint64_t hash() const;

  /// JSON array of [kind, lexeme] pairs in index order.
  std::string to_json() const;
  static Vocabulary from_json(const std::string& text);

  bool operator==(const Vocabulary& other) const { return keys_ == other.keys_; }

 private:
  std::vector<TokenKey> keys_;
  std::map<TokenKey, std::int32_t> index_;
};

TokenKey token_key(const lang::AstNode& node);

/// One-hot feature graph of an AST. Features are stored as the hot index per
/// node; dense rows are available through feature_matrix().
struct FeatureGraph {
  std::int32_t n_nodes = 0;
  std::int32_t vocab_size = 0;
  std::vector<std::int32_t> tokens;
  /// Undirected edges stored once: (i, i) for every node, then (parent, child).
  std::vector<std::pair<std::int32_t, std::int32_t>> edges;
  std::vector<lang::NodeId> node_origin;
  std::vector<int> node_line;

  std::vector<std::vector<double>> feature_matrix() const;
};

FeatureGraph ast_to_graph(const lang::Program& p, const Vocabulary& v);

/// Block-diagonal union of feature graphs.
struct BatchedGraph {
  std::int32_t n_nodes = 0;
  std::int32_t n_graphs = 0;
  std::int32_t vocab_size = 0;
  std::vector<std::int32_t> tokens;
  std::vector<std::pair<std::int32_t, std::int32_t>> edges;
  std::vector<std::int32_t> graph_id;
  std::vector<std::int32_t> node_offset;  // n_graphs + 1 entries

  /// Directed message edges src -> dst: one per self-loop and two per tree
  /// edge, grouped by destination in ascending order.
  std::vector<std::int32_t> src;
  std::vector<std::int32_t> dst;
  /// Degree of each node counting its self-loop.
  std::vector<std::int32_t> degree;
};

/// Throws std::invalid_argument on an empty list or mixed vocabulary sizes.
BatchedGraph batch(std::span<const FeatureGraph> graphs);
BatchedGraph batch(const FeatureGraph& g);

}  // namespace termgnn::graph
