#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "phi/measures.hpp"

namespace phi {

/// max over i, yi, x of |Q(yi | x) − Q(yi | xi)|.
double cis_residual(const SystemJoint& q);

enum class CisMethod {
  /// Feasible-start Newton on the conditionals with Q(x) = P(x). The problem
  /// is convex in that form, so the optimum is global.
  Newton,
  /// Softmax logits with an increasing quadratic penalty (optionally with
  /// multiplier updates), minimized by L-BFGS from several starts.
  Penalty,
};

struct CisConfig {
  CisMethod method = CisMethod::Newton;
  std::vector<double> penalty_schedule{10.0, 1e3, 1e5, 1e7};
  double inner_tolerance = 1e-10;
  std::size_t max_inner_iterations = 5000;
  std::size_t multi_starts = 20;
  std::uint64_t seed = 0;
  double residual_tolerance = 1e-7;
  bool use_multipliers = true;
  /// Extra multiplier rounds at the last penalty weight when still infeasible.
  std::size_t extra_rounds = 30;
  std::size_t newton_max_iterations = 200;

  void validate() const;
};

/// Penalized objective in logit coordinates θ over the full joint:
///   D(P || softmax θ) + Σc λc c(θ) + ρ/2 Σc c(θ)²
/// with bilinear constraints c = Q(yi, x) Q(xi) − Q(yi, xi) Q(x).
class CisPenaltyObjective {
 public:
  CisPenaltyObjective(const SystemJoint& target, double rho, std::vector<double> multipliers = {});

  std::size_t dimension() const { return p_.size(); }
  std::size_t constraint_count() const { return count_; }
  double rho() const { return rho_; }

  double value(std::span<const double> theta) const;
  double value_and_gradient(std::span<const double> theta, std::span<double> grad) const;
  std::vector<double> constraints(std::span<const double> theta) const;
  std::vector<double> probabilities(std::span<const double> theta) const;

 private:
  double evaluate(std::span<const double> theta, std::span<double>* grad) const;

  SystemJoint target_;
  std::vector<double> p_;
  double rho_;
  std::vector<double> multipliers_;
  std::size_t count_ = 0;
};

struct CisResult {
  MeasureReport report;
  /// Penalty route only: D(P || Q) and residual after each stage of the best start.
  std::vector<double> stage_kl;
  std::vector<double> stage_residual;
  std::size_t best_start = 0;
};

CisResult phi_CIS_detailed(const SystemJoint& p, const CisConfig& config = {});
MeasureReport phi_CIS(const SystemJoint& p, const CisConfig& config = {});

/// P(x1) P(x2) P(y1 | x1, y2) P(y2) on binary nodes with flat-simplex factors.
SystemJoint sample_NCIS(std::uint64_t seed);

}  // namespace phi
