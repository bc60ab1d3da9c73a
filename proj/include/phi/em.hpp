#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phi/dist.hpp"
#include "phi/measures.hpp"
#include "phi/rng.hpp"

namespace phi {

/// Split model with a latent common influence W:
///   Q(z, w) = Q(x) Q(w) ∏i Q(yi | parents_i(x), w)
/// where Q(x) is either free or a product of independent node marginals.
struct SplitFamily {
  std::size_t n = 0;
  /// Past-node indices each present node depends on (besides W).
  std::vector<std::vector<std::size_t>> parent_of;
  bool x_factorized = false;
  std::size_t latent_size = 1;

  /// Standard causal-information-integration family: Yi depends on Xi and W.
  static SplitFamily cii(std::size_t n, std::size_t m);
  /// Two-node variant with Y1 <- X1, W and Y2 <- W, independent X1, X2.
  static SplitFamily ncii(std::size_t m);

  SplitFamily with_latent_size(std::size_t m) const;
  bool is_standard() const;
  void validate(const SystemJoint& target) const;
};

struct EmConfig {
  double tolerance = 1e-10;
  std::size_t max_iterations = 10000;
  std::size_t restarts = 10;
  std::uint64_t seed = 0;
  bool include_independent_start = true;
  /// Start that reproduces P(x) P(y) via a latent copy of Y1..Y(n-1);
  /// only used by the standard family when |W| >= ∏_{i<n} |Yi|.
  bool include_mixture_start = true;
  /// Sum over W in a label-independent order. Slower; makes runs from
  /// relabelled starts agree bit for bit.
  bool canonical_latent_order = false;
};

struct EmTrace {
  /// Visible divergence D(P~ || Q_t) before the first and after every cycle.
  std::vector<double> divergences;
  std::vector<double> w_marginal;
  bool converged = false;
  std::size_t iterations_used = 0;
};

struct EmResult {
  double divergence = 0.0;
  Distribution minimizer;
  EmTrace trace;
};

/// P~(z) Q(w | z): the member of M_{W|Z} closest to q_ext in D(· || q_ext).
Distribution e_projection(const Distribution& q_ext, const SystemJoint& target);

/// Composes the family's factors from p_ext's own marginals and conditionals.
Distribution m_projection(const Distribution& p_ext, const SplitFamily& family);

/// Alternates e- and m-projections from `start` (first sanitized with
/// m_projection) until the divergence drops by less than the tolerance.
EmResult em_run(const SystemJoint& target, const SplitFamily& family, const Distribution& start,
                const EmConfig& config);

/// Factor-wise flat-simplex sample from the family.
Distribution random_start(const SystemJoint& target, const SplitFamily& family, Rng& rng);
/// m_projection of P~(z) · uniform(w); a fixed point of em_run.
Distribution independent_start(const SystemJoint& target, const SplitFamily& family);
std::optional<Distribution> mixture_start(const SystemJoint& target, const SplitFamily& family);

/// Adds one latent state carrying probability `epsilon`, split off the last
/// state with identical conditionals, so the visible marginal is unchanged.
Distribution lift_latent(const Distribution& minimizer, const SplitFamily& family, double epsilon = 1e-6);

/// Relabels latent states: new state k takes old state perm[k].
Distribution permute_latent(const Distribution& ext, std::span<const std::size_t> perm);

/// W-marginal of an extended joint as a system joint.
SystemJoint visible_marginal(const Distribution& ext);

struct StartOutcome {
  std::string kind;  // "random", "independent", "mixture", "warm"
  std::size_t index = 0;
  double divergence = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> w_marginal;
};

struct CiiResult {
  MeasureReport report;
  Distribution best_extended;
  EmTrace best_trace;
  std::vector<StartOutcome> starts;
};

/// Minimum em divergence over random restarts (stream (seed, r) for
/// restart r), the independent start, the mixture start and an optional
/// warm start.
CiiResult phi_CII(const SystemJoint& target, const SplitFamily& family, const EmConfig& config,
                  const Distribution* warm_start = nullptr);

/// phi_CII for increasing latent sizes, each warm-started from the lifted
/// minimizer of the previous size so values never increase along the list.
std::vector<CiiResult> phi_CII_sweep(const SystemJoint& target, const SplitFamily& family,
                                     std::span<const std::size_t> latent_sizes, const EmConfig& config,
                                     bool warm_starts = true);

}  // namespace phi
