#include "phi/ips.hpp"

#include <algorithm>
#include <cmath>

#include "phi/error.hpp"

namespace phi {

CliqueSystem CliqueSystem::diagonally_split(std::size_t n) {
  if (n == 0) throw InvalidArgument("diagonally split family needs at least one node");
  CliqueSystem c;
  AxisSet xs, ys;
  for (std::size_t i = 0; i < n; ++i) {
    xs.push_back(i);
    ys.push_back(n + i);
  }
  c.cliques.push_back(xs);
  c.cliques.push_back(ys);
  for (std::size_t i = 0; i < n; ++i) c.cliques.push_back({i, n + i});
  return c;
}

IpsResult ips_project(const Distribution& p, const CliqueSystem& system, double tol, std::size_t max_cycles) {
  if (!(tol > 0.0)) throw InvalidArgument("ips tolerance must be positive");
  const ProductSpace& space = p.space();
  struct Clique {
    std::vector<std::size_t> map;
    std::vector<double> target;
    std::size_t size;
  };
  std::vector<Clique> cliques;
  for (const AxisSet& raw : system.cliques) {
    const AxisSet axes = normalize_axes(raw, space);
    if (axes.empty()) throw InvalidArgument("empty clique");
    Clique c;
    c.map = space.projection_map(axes);
    c.size = space.subspace(axes).size();
    c.target.assign(c.size, 0.0);
    for (std::size_t z = 0; z < p.size(); ++z) c.target[c.map[z]] += p[z];
    cliques.push_back(std::move(c));
  }

  std::vector<double> q(p.size(), 1.0 / static_cast<double>(p.size()));
  std::vector<double> marg;
  auto deviation = [&] {
    double dev = 0.0;
    for (const Clique& c : cliques) {
      marg.assign(c.size, 0.0);
      for (std::size_t z = 0; z < q.size(); ++z) marg[c.map[z]] += q[z];
      for (std::size_t s = 0; s < c.size; ++s) dev = std::max(dev, std::abs(marg[s] - c.target[s]));
    }
    return dev;
  };

  IpsResult r{Distribution::uniform(space), 0, deviation(), false, {}};
  while (r.max_deviation >= tol && r.cycles < max_cycles) {
    for (const Clique& c : cliques) {
      marg.assign(c.size, 0.0);
      for (std::size_t z = 0; z < q.size(); ++z) marg[c.map[z]] += q[z];
      for (std::size_t z = 0; z < q.size(); ++z) q[z] *= c.target[c.map[z]] / marg[c.map[z]];
    }
    ++r.cycles;
    r.kl_per_cycle.push_back(kl_divergence(p.probs(), q));
    r.max_deviation = deviation();
  }
  r.converged = r.max_deviation < tol;
  r.projection = Distribution::normalized(space, std::move(q));
  return r;
}

MeasureReport phi_G(const SystemJoint& p, double tol, std::size_t max_cycles) {
  IpsResult ips = ips_project(p.dist(), CliqueSystem::diagonally_split(p.n()), tol, max_cycles);
  MeasureReport r;
  r.name = "G";
  r.value = clamp_measure(kl_divergence(p.dist(), ips.projection));
  r.converged = ips.converged;
  r.diagnostics["cycles"] = static_cast<double>(ips.cycles);
  r.diagnostics["max_deviation"] = ips.max_deviation;
  r.projection = std::move(ips.projection);
  return r;
}

}  // namespace phi
