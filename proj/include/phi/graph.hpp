#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace phi {

enum class EdgeKind { Undirected, Directed, Arc };

struct Edge {
  std::size_t from = 0;  // tail for directed edges; smaller index otherwise
  std::size_t to = 0;
  EdgeKind kind = EdgeKind::Undirected;

  auto operator<=>(const Edge&) const = default;
};

using VertexSet = std::set<std::size_t>;

/// Graph with undirected (--), directed (->) and bidirected (<->) edges.
/// Several edge kinds may join the same pair. Without arcs it is a chain
/// graph.
class ChainMixedGraph {
 public:
  ChainMixedGraph() = default;

  /// Index of `label`, adding the vertex if it is new.
  std::size_t add_vertex(const std::string& label);
  void add_edge(std::size_t a, std::size_t b, EdgeKind kind);
  void add_edge(const std::string& a, const std::string& b, EdgeKind kind);

  std::size_t size() const { return labels_.size(); }
  const std::string& label(std::size_t v) const { return labels_.at(v); }
  const std::vector<std::string>& labels() const { return labels_; }
  /// Throws InvalidArgument for unknown labels.
  std::size_t index(std::string_view label) const;
  VertexSet indices(const std::vector<std::string>& labels) const;

  bool has_edge(std::size_t a, std::size_t b, EdgeKind kind) const;
  bool adjacent(std::size_t a, std::size_t b) const;
  std::vector<Edge> edges() const;
  std::size_t edge_count() const;
  bool has_arcs() const;

  const VertexSet& neighbours(std::size_t v) const { return undirected_.at(v); }
  const VertexSet& parents(std::size_t v) const { return parents_.at(v); }
  const VertexSet& children(std::size_t v) const { return children_.at(v); }
  const VertexSet& spouses(std::size_t v) const { return arcs_.at(v); }

  /// True when no cycle mixes undirected edges with aligned directed edges
  /// (at least one of them directed).
  bool acyclic() const;
  /// Throws InvalidArgument if the graph has a semi-directed cycle.
  void validate() const;

  /// Subgraph on `keep`, vertices in their original order.
  ChainMixedGraph induced(const VertexSet& keep) const;

  /// One edge per line; isolated vertices on their own line.
  std::string to_text() const;
  static ChainMixedGraph parse(std::string_view text);

  /// Same labels and the same labelled edges; vertex numbering is ignored.
  bool operator==(const ChainMixedGraph& other) const;

 private:
  std::vector<std::string> labels_;
  std::vector<VertexSet> undirected_, parents_, children_, arcs_;
};

using ChainGraph = ChainMixedGraph;

std::string_view to_string(EdgeKind kind);

/// Connected components of the undirected skeleton, ordered by smallest member.
std::vector<VertexSet> chain_components(const ChainGraph& g);

/// Undirected graph: all adjacencies plus edges between parents of a common
/// chain component.
ChainMixedGraph moralize(const ChainGraph& g);

/// Smallest superset of `a` closed under parents and neighbours.
VertexSet ancestral_closure(const ChainGraph& g, const VertexSet& a);

/// Global chain Markov separation of A and B by S.
bool cg_separates(const ChainGraph& g, const VertexSet& a, const VertexSet& b, const VertexSet& s);

/// Latent projection onto V \ M by the tripath/trislide edge rules.
ChainMixedGraph marginalize_cmg(const ChainMixedGraph& g, const VertexSet& m);

/// True when no c-connecting walk joins A and B given C.
bool c_separates(const ChainMixedGraph& g, const VertexSet& a, const VertexSet& b, const VertexSet& c);

}  // namespace phi
