#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "phi/dist.hpp"
#include "phi/graph.hpp"
#include "phi/rng.hpp"

namespace phi::testing {

/// Random chain graph on k vertices v0..v(k-1): each pair is unlinked, joined
/// undirected, or directed along a random order; redrawn until acyclic.
inline ChainGraph random_chain_graph(std::size_t k, Rng& rng, bool allow_undirected = true) {
  for (;;) {
    std::vector<std::size_t> order(k);
    for (std::size_t i = 0; i < k; ++i) order[i] = i;
    for (std::size_t i = k; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    ChainGraph g;
    for (std::size_t i = 0; i < k; ++i) g.add_vertex("v" + std::to_string(i));
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = a + 1; b < k; ++b) {
        const auto r = rng.below(4);
        if (r == 1 && allow_undirected) g.add_edge(order[a], order[b], EdgeKind::Undirected);
        if (r == 2) g.add_edge(order[a], order[b], EdgeKind::Directed);
      }
    if (g.acyclic()) return g;
  }
}

/// Binary distribution factorizing along the chain graph: each chain
/// component τ gets P(x_τ | x_pa(τ)) ∝ ∏ pairwise and singleton potentials
/// on the moral graph of τ ∪ pa(τ).
inline Distribution random_chain_factorized(const ChainGraph& g, Rng& rng) {
  const std::size_t k = g.size();
  std::vector<Axis> axes;
  for (std::size_t v = 0; v < k; ++v) axes.push_back({g.label(v), Role::Latent, 2});
  const ProductSpace space(axes);
  const auto bit = [&](std::size_t z, std::size_t v) { return space.digit(z, v); };

  std::vector<double> single(k * 2);
  for (double& s : single) s = std::exp(rng.normal());
  std::vector<double> pair(k * k * 4);
  for (double& s : pair) s = std::exp(rng.normal());
  const auto pot = [&](std::size_t a, std::size_t b, std::size_t z) { return pair[(a * k + b) * 4 + bit(z, a) * 2 + bit(z, b)]; };

  std::vector<double> probs(space.size(), 1.0);
  for (const auto& tau : chain_components(g)) {
    VertexSet pa;
    for (std::size_t v : tau)
      for (std::size_t p : g.parents(v))
        if (!tau.count(p)) pa.insert(p);
    const auto weight = [&](std::size_t z) {
      double w = 1.0;
      for (std::size_t v : tau) {
        w *= single[v * 2 + bit(z, v)];
        for (std::size_t u : g.neighbours(v))
          if (u < v) w *= pot(u, v, z);
        for (std::size_t p : g.parents(v)) w *= pot(p, v, z);
      }
      return w;
    };
    for (std::size_t z = 0; z < space.size(); ++z) {
      // Normalizer over τ with everything else fixed at z.
      double norm = 0.0;
      for (std::size_t z2 = 0; z2 < space.size(); ++z2) {
        bool same = true;
        for (std::size_t v = 0; v < k && same; ++v)
          if (!tau.count(v) && bit(z2, v) != bit(z, v)) same = false;
        if (same) norm += weight(z2);
      }
      probs[z] *= weight(z) / norm;
    }
  }
  return Distribution::normalized(space, std::move(probs));
}

/// Calls f(A, B, C) for every disjoint triple with A and B nonempty.
inline void for_each_triple(std::size_t k, const std::function<void(const VertexSet&, const VertexSet&, const VertexSet&)>& f) {
  std::size_t total = 1;
  for (std::size_t i = 0; i < k; ++i) total *= 4;
  for (std::size_t code = 0; code < total; ++code) {
    VertexSet a, b, c;
    std::size_t rest = code;
    for (std::size_t v = 0; v < k; ++v, rest /= 4) {
      if (rest % 4 == 1) a.insert(v);
      if (rest % 4 == 2) b.insert(v);
      if (rest % 4 == 3) c.insert(v);
    }
    if (!a.empty() && !b.empty()) f(a, b, c);
  }
}

inline AxisSet as_axes(const VertexSet& s) { return AxisSet(s.begin(), s.end()); }

/// Integrated-model graph: complete undirected X, Xi -> Yi, W -> Yi.
inline ChainGraph cii_graph(std::size_t n) {
  ChainGraph g;
  for (std::size_t i = 1; i <= n; ++i) g.add_vertex("X" + std::to_string(i));
  for (std::size_t i = 1; i <= n; ++i) g.add_vertex("Y" + std::to_string(i));
  g.add_vertex("W");
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = i + 1; j <= n; ++j) g.add_edge("X" + std::to_string(i), "X" + std::to_string(j), EdgeKind::Undirected);
    g.add_edge("X" + std::to_string(i), "Y" + std::to_string(i), EdgeKind::Directed);
    g.add_edge("W", "Y" + std::to_string(i), EdgeKind::Directed);
  }
  return g;
}

}  // namespace phi::testing
