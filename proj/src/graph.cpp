#include "phi/graph.hpp"

#include <algorithm>
#include <deque>
#include <sstream>
#include <tuple>

#include "phi/error.hpp"

namespace phi {

std::string_view to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::Undirected: return "--";
    case EdgeKind::Directed: return "->";
    case EdgeKind::Arc: return "<->";
  }
  return "?";
}

std::size_t ChainMixedGraph::add_vertex(const std::string& label) {
  if (label.empty()) throw InvalidArgument("vertex label must be non-empty");
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it != labels_.end()) return static_cast<std::size_t>(it - labels_.begin());
  labels_.push_back(label);
  undirected_.emplace_back();
  parents_.emplace_back();
  children_.emplace_back();
  arcs_.emplace_back();
  return labels_.size() - 1;
}

void ChainMixedGraph::add_edge(std::size_t a, std::size_t b, EdgeKind kind) {
  if (a >= size() || b >= size()) throw InvalidArgument("edge endpoint out of range");
  if (a == b) throw InvalidArgument("self loops are not allowed: " + labels_[a]);
  switch (kind) {
    case EdgeKind::Undirected:
      undirected_[a].insert(b);
      undirected_[b].insert(a);
      break;
    case EdgeKind::Directed:
      children_[a].insert(b);
      parents_[b].insert(a);
      break;
    case EdgeKind::Arc:
      arcs_[a].insert(b);
      arcs_[b].insert(a);
      break;
  }
}

void ChainMixedGraph::add_edge(const std::string& a, const std::string& b, EdgeKind kind) {
  const std::size_t ia = add_vertex(a);
  const std::size_t ib = add_vertex(b);
  add_edge(ia, ib, kind);
}

std::size_t ChainMixedGraph::index(std::string_view label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw InvalidArgument("unknown vertex: " + std::string(label));
  return static_cast<std::size_t>(it - labels_.begin());
}

VertexSet ChainMixedGraph::indices(const std::vector<std::string>& labels) const {
  VertexSet out;
  for (const auto& l : labels) out.insert(index(l));
  return out;
}

bool ChainMixedGraph::has_edge(std::size_t a, std::size_t b, EdgeKind kind) const {
  switch (kind) {
    case EdgeKind::Undirected: return undirected_.at(a).count(b) > 0;
    case EdgeKind::Directed: return children_.at(a).count(b) > 0;
    case EdgeKind::Arc: return arcs_.at(a).count(b) > 0;
  }
  return false;
}

bool ChainMixedGraph::adjacent(std::size_t a, std::size_t b) const {
  return has_edge(a, b, EdgeKind::Undirected) || has_edge(a, b, EdgeKind::Directed) ||
         has_edge(b, a, EdgeKind::Directed) || has_edge(a, b, EdgeKind::Arc);
}

std::vector<Edge> ChainMixedGraph::edges() const {
  std::vector<Edge> out;
  for (std::size_t a = 0; a < size(); ++a) {
    for (std::size_t b : undirected_[a])
      if (a < b) out.push_back({a, b, EdgeKind::Undirected});
    for (std::size_t b : children_[a]) out.push_back({a, b, EdgeKind::Directed});
    for (std::size_t b : arcs_[a])
      if (a < b) out.push_back({a, b, EdgeKind::Arc});
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t ChainMixedGraph::edge_count() const { return edges().size(); }

bool ChainMixedGraph::has_arcs() const {
  return std::any_of(arcs_.begin(), arcs_.end(), [](const VertexSet& s) { return !s.empty(); });
}

namespace {

/// Undirected components of the vertices in `keep`, using only edges inside it.
std::vector<VertexSet> components_within(const ChainMixedGraph& g, const VertexSet& keep) {
  std::vector<VertexSet> out;
  VertexSet seen;
  for (std::size_t s : keep) {
    if (seen.count(s)) continue;
    VertexSet comp;
    std::deque<std::size_t> queue{s};
    seen.insert(s);
    while (!queue.empty()) {
      const std::size_t v = queue.front();
      queue.pop_front();
      comp.insert(v);
      for (std::size_t u : g.neighbours(v))
        if (keep.count(u) && seen.insert(u).second) queue.push_back(u);
    }
    out.push_back(std::move(comp));
  }
  return out;
}

VertexSet all_vertices(const ChainMixedGraph& g) {
  VertexSet all;
  for (std::size_t v = 0; v < g.size(); ++v) all.insert(v);
  return all;
}

void require_chain_graph(const ChainMixedGraph& g) {
  if (g.has_arcs()) throw InvalidArgument("operation needs a chain graph without arcs");
}

void check_range(const ChainMixedGraph& g, const VertexSet& s) {
  for (std::size_t v : s)
    if (v >= g.size()) throw InvalidArgument("vertex index out of range");
}

void check_disjoint(const ChainMixedGraph& g, const VertexSet& a, const VertexSet& b, const VertexSet& c) {
  check_range(g, a);
  check_range(g, b);
  check_range(g, c);
  for (std::size_t v : a)
    if (b.count(v) || c.count(v)) throw InvalidArgument("separation query sets must be disjoint");
  for (std::size_t v : b)
    if (c.count(v)) throw InvalidArgument("separation query sets must be disjoint");
  if (a.empty() || b.empty()) throw InvalidArgument("separation query needs nonempty A and B");
}

/// Moral adjacency on the subgraph induced by `keep` (original indices).
std::vector<VertexSet> moral_adjacency(const ChainMixedGraph& g, const VertexSet& keep) {
  std::vector<VertexSet> adj(g.size());
  for (std::size_t v : keep) {
    for (std::size_t u : g.neighbours(v))
      if (keep.count(u)) adj[v].insert(u);
    for (std::size_t u : g.parents(v))
      if (keep.count(u)) {
        adj[v].insert(u);
        adj[u].insert(v);
      }
  }
  for (const VertexSet& comp : components_within(g, keep)) {
    VertexSet pa;
    for (std::size_t v : comp)
      for (std::size_t u : g.parents(v))
        if (keep.count(u)) pa.insert(u);
    for (std::size_t a : pa)
      for (std::size_t b : pa)
        if (a != b) adj[a].insert(b);
  }
  return adj;
}

}  // namespace

bool ChainMixedGraph::acyclic() const {
  const auto comps = components_within(*this, all_vertices(*this));
  std::vector<std::size_t> comp_of(size());
  for (std::size_t c = 0; c < comps.size(); ++c)
    for (std::size_t v : comps[c]) comp_of[v] = c;
  std::vector<std::set<std::size_t>> succ(comps.size());
  std::vector<std::size_t> indeg(comps.size(), 0);
  for (std::size_t a = 0; a < size(); ++a)
    for (std::size_t b : children_[a]) {
      if (comp_of[a] == comp_of[b]) return false;
      if (succ[comp_of[a]].insert(comp_of[b]).second) ++indeg[comp_of[b]];
    }
  std::deque<std::size_t> ready;
  for (std::size_t c = 0; c < comps.size(); ++c)
    if (indeg[c] == 0) ready.push_back(c);
  std::size_t done = 0;
  while (!ready.empty()) {
    const std::size_t c = ready.front();
    ready.pop_front();
    ++done;
    for (std::size_t d : succ[c])
      if (--indeg[d] == 0) ready.push_back(d);
  }
  return done == comps.size();
}

void ChainMixedGraph::validate() const {
  if (!acyclic()) throw InvalidArgument("graph contains a semi-directed cycle");
}

ChainMixedGraph ChainMixedGraph::induced(const VertexSet& keep) const {
  ChainMixedGraph out;
  for (std::size_t v = 0; v < size(); ++v)
    if (keep.count(v)) out.add_vertex(labels_[v]);
  for (const Edge& e : edges())
    if (keep.count(e.from) && keep.count(e.to)) out.add_edge(labels_[e.from], labels_[e.to], e.kind);
  return out;
}

std::string ChainMixedGraph::to_text() const {
  std::ostringstream os;
  for (std::size_t v = 0; v < size(); ++v)
    if (undirected_[v].empty() && parents_[v].empty() && children_[v].empty() && arcs_[v].empty())
      os << labels_[v] << '\n';
  for (const Edge& e : edges()) os << labels_[e.from] << ' ' << to_string(e.kind) << ' ' << labels_[e.to] << '\n';
  return os.str();
}

ChainMixedGraph ChainMixedGraph::parse(std::string_view text) {
  ChainMixedGraph g;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty() || tok.front().front() == '?') continue;
    const std::string where = "graph line " + std::to_string(line_no);
    if (tok.size() == 1) {
      g.add_vertex(tok[0]);
      continue;
    }
    if (tok.size() != 3) throw ParseError(where + ": expected `a -- b`, `a -> b` or `a <-> b`");
    EdgeKind kind;
    if (tok[1] == "--") kind = EdgeKind::Undirected;
    else if (tok[1] == "->") kind = EdgeKind::Directed;
    else if (tok[1] == "<->") kind = EdgeKind::Arc;
    else throw ParseError(where + ": unknown edge marker " + tok[1]);
    if (tok[0] == tok[2]) throw ParseError(where + ": self loop");
    g.add_edge(tok[0], tok[2], kind);
  }
  if (!g.acyclic()) throw ParseError("graph contains a semi-directed cycle");
  return g;
}

namespace {

// Edges keyed by labels so that equality ignores vertex numbering. Symmetric
// kinds are stored with their endpoints in label order.
std::set<std::tuple<std::string, std::string, EdgeKind>> labelled_edges(const ChainMixedGraph& g) {
  std::set<std::tuple<std::string, std::string, EdgeKind>> out;
  for (const Edge& e : g.edges()) {
    std::string a = g.label(e.from), b = g.label(e.to);
    if (e.kind != EdgeKind::Directed && b < a) std::swap(a, b);
    out.emplace(std::move(a), std::move(b), e.kind);
  }
  return out;
}

}  // namespace

bool ChainMixedGraph::operator==(const ChainMixedGraph& other) const {
  if (size() != other.size()) return false;
  const std::set<std::string> mine(labels_.begin(), labels_.end()), theirs(other.labels_.begin(), other.labels_.end());
  return mine == theirs && labelled_edges(*this) == labelled_edges(other);
}

std::vector<VertexSet> chain_components(const ChainGraph& g) { return components_within(g, all_vertices(g)); }

ChainMixedGraph moralize(const ChainGraph& g) {
  require_chain_graph(g);
  const auto adj = moral_adjacency(g, all_vertices(g));
  ChainMixedGraph out;
  for (const auto& l : g.labels()) out.add_vertex(l);
  for (std::size_t a = 0; a < g.size(); ++a)
    for (std::size_t b : adj[a])
      if (a < b) out.add_edge(a, b, EdgeKind::Undirected);
  return out;
}

VertexSet ancestral_closure(const ChainGraph& g, const VertexSet& a) {
  check_range(g, a);
  VertexSet out = a;
  std::deque<std::size_t> queue(a.begin(), a.end());
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    for (const VertexSet* s : {&g.parents(v), &g.neighbours(v)})
      for (std::size_t u : *s)
        if (out.insert(u).second) queue.push_back(u);
  }
  return out;
}

bool cg_separates(const ChainGraph& g, const VertexSet& a, const VertexSet& b, const VertexSet& s) {
  require_chain_graph(g);
  check_disjoint(g, a, b, s);
  VertexSet all = a;
  all.insert(b.begin(), b.end());
  all.insert(s.begin(), s.end());
  const VertexSet anc = ancestral_closure(g, all);
  const auto adj = moral_adjacency(g, anc);
  VertexSet seen = a;
  std::deque<std::size_t> queue(a.begin(), a.end());
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    if (b.count(v)) return false;
    for (std::size_t u : adj[v])
      if (!s.count(u) && seen.insert(u).second) queue.push_back(u);
  }
  return true;
}

ChainMixedGraph marginalize_cmg(const ChainMixedGraph& g, const VertexSet& m) {
  check_range(g, m);
  if (m.empty()) return g;
  ChainMixedGraph h = g;
  const std::size_t n = g.size();

  // Collider trislides m -> i -- ... -- k <- j  (or k <-> j), on the input graph.
  for (std::size_t mv : m)
    for (std::size_t i : g.children(mv)) {
      VertexSet section{i};
      std::deque<std::size_t> queue{i};
      while (!queue.empty()) {
        const std::size_t v = queue.front();
        queue.pop_front();
        for (std::size_t u : g.neighbours(v))
          if (section.insert(u).second) queue.push_back(u);
      }
      for (std::size_t k : section) {
        for (std::size_t j : g.parents(k))
          if (j != i) h.add_edge(j, i, EdgeKind::Directed);
        for (std::size_t j : g.spouses(k))
          if (j != i) h.add_edge(i, j, EdgeKind::Arc);
      }
    }

  // Tripaths i - m - j, repeated until nothing new appears.
  bool changed = true;
  auto add = [&](std::size_t a, std::size_t b, EdgeKind kind) {
    if (!h.has_edge(a, b, kind)) {
      h.add_edge(a, b, kind);
      changed = true;
    }
  };
  while (changed) {
    changed = false;
    for (std::size_t mv : m)
      for (std::size_t i = 0; i < n; ++i) {
        if (i == mv || !h.adjacent(i, mv)) continue;
        for (std::size_t j = 0; j < n; ++j) {
          if (j == mv || j == i || !h.adjacent(j, mv)) continue;
          const bool m_to_i = h.has_edge(mv, i, EdgeKind::Directed);
          const bool j_to_m = h.has_edge(j, mv, EdgeKind::Directed);
          const bool m_to_j = h.has_edge(mv, j, EdgeKind::Directed);
          const bool i_und = h.has_edge(i, mv, EdgeKind::Undirected);
          const bool j_und = h.has_edge(j, mv, EdgeKind::Undirected);
          const bool i_arc = h.has_edge(i, mv, EdgeKind::Arc);
          const bool j_arc = h.has_edge(j, mv, EdgeKind::Arc);
          if (m_to_i && j_to_m) add(j, i, EdgeKind::Directed);
          if (m_to_i && j_und) add(j, i, EdgeKind::Directed);
          if (i_arc && j_und) add(i, j, EdgeKind::Arc);
          if (m_to_i && m_to_j) add(i, j, EdgeKind::Arc);
          if (m_to_i && j_arc) add(i, j, EdgeKind::Arc);
          if (i_und && j_to_m) add(j, i, EdgeKind::Directed);
          if (i_und && j_und) add(i, j, EdgeKind::Undirected);
        }
      }
  }

  VertexSet keep;
  for (std::size_t v = 0; v < n; ++v)
    if (!m.count(v)) keep.insert(v);
  return h.induced(keep);
}

bool c_separates(const ChainMixedGraph& g, const VertexSet& a, const VertexSet& b, const VertexSet& c) {
  check_disjoint(g, a, b, c);
  // State: vertex, whether its section was entered through an arrowhead, and
  // whether the section met C so far.
  auto key = [](std::size_t v, bool head, bool hit) { return v * 4 + (head ? 2 : 0) + (hit ? 1 : 0); };
  std::vector<bool> seen(g.size() * 4, false);
  std::deque<std::size_t> queue;
  auto push = [&](std::size_t v, bool head, bool hit) {
    const std::size_t k = key(v, head, hit);
    if (!seen[k]) {
      seen[k] = true;
      queue.push_back(k);
    }
  };
  for (std::size_t v : a) push(v, false, false);
  while (!queue.empty()) {
    const std::size_t k = queue.front();
    queue.pop_front();
    const std::size_t v = k / 4;
    const bool head = (k & 2) != 0, hit = (k & 1) != 0;
    if (b.count(v) && !hit) return false;
    for (std::size_t u : g.neighbours(v)) push(u, head, hit || c.count(u) > 0);
    // Leaving the section through u: the section is a collider when both its
    // ends carry arrowheads.
    auto leave = [&](std::size_t u, bool head_at_v, bool head_at_u) {
      const bool collider = head && head_at_v;
      if (collider ? hit : !hit) push(u, head_at_u, c.count(u) > 0);
    };
    for (std::size_t u : g.children(v)) leave(u, false, true);
    for (std::size_t u : g.parents(v)) leave(u, true, false);
    for (std::size_t u : g.spouses(v)) leave(u, true, true);
  }
  return true;
}

}  // namespace phi
