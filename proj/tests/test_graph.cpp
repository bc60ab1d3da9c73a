#include <doctest.h>

#include "graph_support.hpp"
#include "phi/error.hpp"
#include "phi/graph.hpp"
#include "support.hpp"

using namespace phi;
using namespace phi::testing;

namespace {

ChainGraph si_graph() { return ChainGraph::parse("X1 -- X2\nX1 -> Y1\nX2 -> Y2\n"); }

VertexSet set(const ChainMixedGraph& g, std::initializer_list<const char*> labels) {
  VertexSet s;
  for (const char* l : labels) s.insert(g.index(l));
  return s;
}

}  // namespace

TEST_CASE("text format") {
  const auto g = ChainMixedGraph::parse("# comment\na -- b\nb -> c\nc <-> d\nlonely\n? csep a | d | b\n");
  CHECK(g.size() == 5);
  CHECK(g.has_edge(g.index("a"), g.index("b"), EdgeKind::Undirected));
  CHECK(g.has_edge(g.index("b"), g.index("c"), EdgeKind::Directed));
  CHECK_FALSE(g.has_edge(g.index("c"), g.index("b"), EdgeKind::Directed));
  CHECK(g.has_edge(g.index("d"), g.index("c"), EdgeKind::Arc));
  CHECK(ChainMixedGraph::parse(g.to_text()) == g);
  CHECK_THROWS_AS(ChainMixedGraph::parse("a => b\n"), ParseError);
  CHECK_THROWS_AS(ChainMixedGraph::parse("a -- a\n"), ParseError);
  CHECK_THROWS_AS(ChainMixedGraph::parse("a -> b\nb -- c\nc -- a\n"), ParseError);
  CHECK_THROWS_AS(g.index("zz"), InvalidArgument);
}

TEST_CASE("chain components") {
  const auto dag = ChainGraph::parse("a -> b\nb -> c\na -> c\n");
  CHECK(chain_components(dag).size() == 3);
  const auto cycle = ChainGraph::parse("a -- b\nb -- c\nc -- d\nd -- a\n");
  CHECK(chain_components(cycle).size() == 1);
  const auto comps = chain_components(si_graph());
  CHECK(comps.size() == 3);
}

TEST_CASE("moralize") {
  const auto collider = ChainGraph::parse("X1 -> Y1\nW -> Y1\n");
  const auto m = moralize(collider);
  CHECK(m.has_edge(m.index("X1"), m.index("W"), EdgeKind::Undirected));
  CHECK(m.edge_count() == 3);
  const auto chain = ChainGraph::parse("a -> b\nb -- c\n");
  const auto mc = moralize(chain);
  CHECK(mc.edge_count() == 2);
  CHECK(mc.has_edge(mc.index("a"), mc.index("b"), EdgeKind::Undirected));
  // Parents of one chain component are married even across its members.
  const auto comp = moralize(ChainGraph::parse("p -> a\nq -> b\na -- b\n"));
  CHECK(comp.has_edge(comp.index("p"), comp.index("q"), EdgeKind::Undirected));
  CHECK_THROWS_AS(moralize(ChainMixedGraph::parse("a <-> b\n")), InvalidArgument);
}

TEST_CASE("ancestral closure") {
  const auto g = si_graph();
  const VertexSet all{0, 1, 2, 3};
  CHECK(ancestral_closure(g, all) == all);
  const auto dag = ChainGraph::parse("a -> b\nb -> c\n");
  CHECK(ancestral_closure(dag, set(dag, {"a"})) == set(dag, {"a"}));
  CHECK(ancestral_closure(g, set(g, {"Y1"})) == set(g, {"Y1", "X1", "X2"}));
}

TEST_CASE("cg_separates") {
  const auto g = si_graph();
  CHECK(cg_separates(g, set(g, {"Y1"}), set(g, {"X2"}), set(g, {"X1"})));
  CHECK_FALSE(cg_separates(g, set(g, {"Y1"}), set(g, {"X2"}), {}));
  const auto two = ChainGraph::parse("a -- b\nc -> d\n");
  CHECK(cg_separates(two, set(two, {"a"}), set(two, {"d"}), {}));
  CHECK_THROWS_AS(cg_separates(g, set(g, {"Y1"}), set(g, {"Y1"}), {}), InvalidArgument);
}

TEST_CASE("marginalize_cmg") {
  SUBCASE("two-node integrated graph without W") {
    const auto g = cii_graph(2);
    const auto m = marginalize_cmg(g, set(g, {"W"}));
    CHECK(m == ChainMixedGraph::parse("X1 -- X2\nX1 -> Y1\nX2 -> Y2\nY1 <-> Y2\n"));
  }
  SUBCASE("three-node integrated graph without W") {
    const auto g = cii_graph(3);
    const auto m = marginalize_cmg(g, set(g, {"W"}));
    CHECK(m == ChainMixedGraph::parse(
                   "X1 -- X2\nX1 -- X3\nX2 -- X3\nX1 -> Y1\nX2 -> Y2\nX3 -> Y3\nY1 <-> Y2\nY1 <-> Y3\nY2 <-> Y3\n"));
  }
  SUBCASE("hidden directed path") {
    const auto g = ChainGraph::parse("X1 -> h1\nh1 -> h2\nh2 -> X2\nX1 -> Y1\nX2 -> Y2\n");
    const auto m = marginalize_cmg(g, set(g, {"h1", "h2"}));
    CHECK(m == ChainMixedGraph::parse("X1 -> X2\nX1 -> Y1\nX2 -> Y2\n"));
  }
  SUBCASE("empty hidden set is the identity") {
    const auto g = cii_graph(2);
    CHECK(marginalize_cmg(g, {}) == g);
  }
  SUBCASE("marginal keeps the integrated-model independences") {
    for (std::size_t n : {2, 3}) {
      const auto g = cii_graph(n);
      const auto m = marginalize_cmg(g, set(g, {"W"}));
      for (std::size_t i = 1; i <= n; ++i) {
        VertexSet others;
        for (std::size_t j = 1; j <= n; ++j)
          if (j != i) others.insert(m.index("X" + std::to_string(j)));
        CHECK(c_separates(m, {m.index("Y" + std::to_string(i))}, others, {m.index("X" + std::to_string(i))}));
      }
    }
  }
  SUBCASE("staged marginalization is reported") {
    Rng rng(151, 0);
    std::size_t agree = 0, total = 0;
    for (int t = 0; t < 50; ++t) {
      const auto g = random_chain_graph(2 + rng.below(7), rng);
      VertexSet m1, m2;
      for (std::size_t v = 0; v < g.size(); ++v) {
        const auto r = rng.below(4);
        if (r == 0) m1.insert(v);
        if (r == 1) m2.insert(v);
      }
      VertexSet both = m1;
      both.insert(m2.begin(), m2.end());
      const auto staged = marginalize_cmg(marginalize_cmg(g, m1), [&] {
        const auto inter = marginalize_cmg(g, m1);
        VertexSet s;
        for (std::size_t v : m2) s.insert(inter.index(g.label(v)));
        return s;
      }());
      ++total;
      if (staged == marginalize_cmg(g, both)) ++agree;
    }
    MESSAGE("staged marginalization agreed on " << agree << " of " << total << " random graphs");
    CHECK(total == 50);
  }
}

TEST_CASE("c_separates") {
  const auto g = ChainMixedGraph::parse("X1 -> Y1\nW -> Y1\n");
  CHECK(c_separates(g, set(g, {"X1"}), set(g, {"W"}), {}));
  CHECK_FALSE(c_separates(g, set(g, {"X1"}), set(g, {"W"}), set(g, {"Y1"})));
  CHECK_THROWS_AS(c_separates(g, set(g, {"X1"}), set(g, {"X1", "W"}), {}), InvalidArgument);

  Rng rng(157, 0);
  std::size_t checked = 0, mismatches = 0;
  for (int t = 0; t < 30; ++t) {
    const auto cg = random_chain_graph(2 + rng.below(5), rng);
    for_each_triple(cg.size(), [&](const VertexSet& a, const VertexSet& b, const VertexSet& c) {
      ++checked;
      if (c_separates(cg, a, b, c) != cg_separates(cg, a, b, c)) ++mismatches;
    });
  }
  CHECK(checked > 0);
  CHECK(mismatches == 0);
}

TEST_CASE("separation implies conditional independence for factorized distributions") {
  Rng rng(163, 0);
  std::size_t separated = 0;
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const auto g = random_chain_graph(3 + rng.below(3), rng);
    const auto p = random_chain_factorized(g, rng);
    for_each_triple(g.size(), [&](const VertexSet& a, const VertexSet& b, const VertexSet& c) {
      if (!cg_separates(g, a, b, c)) return;
      ++separated;
      worst = std::max(worst, conditional_mutual_information(p, as_axes(a), as_axes(b), as_axes(c)));
    });
  }
  CHECK(separated > 0);
  CHECK(worst < 1e-10);
}
