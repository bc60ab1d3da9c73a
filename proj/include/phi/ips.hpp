#pragma once

#include <vector>

#include "phi/dist.hpp"
#include "phi/measures.hpp"

namespace phi {

/// Hierarchical log-linear family given by its generating cliques.
struct CliqueSystem {
  std::vector<AxisSet> cliques;

  /// [X1..Xn], [Y1..Yn], then [Xi, Yi] for each node.
  static CliqueSystem diagonally_split(std::size_t n);
};

struct IpsResult {
  Distribution projection;
  std::size_t cycles = 0;
  /// Largest |P-marginal − Q-marginal| over all cliques and states.
  double max_deviation = 0.0;
  bool converged = false;
  /// D(P || Q_t) after each full cycle.
  std::vector<double> kl_per_cycle;
};

/// Iterative proportional scaling from the uniform distribution.
IpsResult ips_project(const Distribution& p, const CliqueSystem& cliques, double tol = 1e-9,
                      std::size_t max_cycles = 100000);

MeasureReport phi_G(const SystemJoint& p, double tol = 1e-9, std::size_t max_cycles = 100000);

}  // namespace phi
