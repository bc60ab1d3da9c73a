#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phi/dist.hpp"
#include "phi/measures.hpp"

namespace phi {

/// Weighted binary auto-logistic system. Node states are ordered (−1, +1).
struct IsingSystem {
  std::size_t n = 0;
  /// Row-major n×n, weights[i * n + j] = v_ij from Xi to Yj.
  std::vector<double> weights;
  double beta = 0.0;
  /// Optional exterior influence: a uniform binary W (states −1, +1) adding
  /// u_j · w to the field of Yj. Empty means no exterior influence.
  std::vector<double> exterior;

  IsingSystem() = default;
  IsingSystem(std::size_t n, std::vector<double> weights, double beta, std::vector<double> exterior = {});

  double v(std::size_t i, std::size_t j) const { return weights[i * n + j]; }
  bool has_exterior() const { return !exterior.empty(); }
  IsingSystem with_beta(double b) const { return IsingSystem(n, weights, b, exterior); }
};

/// Named weight matrices: "paper-n2", "paper-n3", "paper-n5".
std::vector<std::string> preset_names();
IsingSystem preset(const std::string& name, double beta = 1.0);

/// P(y | x) = ∏j 1 / (1 + exp(−2β Σi v_ij xi yj)); rows over x, columns over y.
/// With an exterior influence the kernel is the W-average of the per-w kernels.
ConditionalKernel transition_kernel(const IsingSystem& sys);

struct StationaryOptions {
  double tol = 1e-12;
  std::size_t max_iters = 1000000;
  std::uint64_t seed = 0;
  /// Power iterations tried before switching to direct elimination. Nearly
  /// deterministic kernels (large β) mix far too slowly for power iteration.
  std::size_t power_budget = 20000;
  bool direct_fallback = true;
};

struct StationaryResult {
  std::vector<double> probs;
  std::size_t iterations = 0;
  double residual = 0.0;  // ‖P K − P‖₁
  bool converged = false;
  bool used_direct = false;
};

StationaryResult stationary(const IsingSystem& sys, const StationaryOptions& options = {});

/// P̂(x) K(y | x); throws DomainError if the stationary solve fails.
SystemJoint stationary_joint(const IsingSystem& sys, const StationaryOptions& options = {});

/// P̂(x) P(w) ∏j P(yj | x, w) over X, Y and a trailing binary W; needs an
/// exterior influence. W is independent of X by construction.
Distribution stationary_extended(const IsingSystem& sys, const StationaryOptions& options = {});

}  // namespace phi
