#include "phi/cis.hpp"

#include <Eigen/Dense>
#include <ceres/ceres.h>

#include <algorithm>
#include <numeric>
#include <cmath>
#include <limits>

#include "phi/error.hpp"
#include "phi/rng.hpp"

namespace phi {

double cis_residual(const SystemJoint& q) {
  const std::size_t nx = q.x_size(), n = q.n();
  const auto probs = q.dist().probs();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = q.cards()[i];
    std::vector<double> joint_x(nx * c, 0.0), px(nx, 0.0), joint_xi(c * c, 0.0), pxi(c, 0.0);
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t y = 0; y < nx; ++y) {
        const double v = probs[x * nx + y];
        const std::size_t xi = q.node_digit(x, i), yi = q.node_digit(y, i);
        joint_x[x * c + yi] += v;
        px[x] += v;
        joint_xi[xi * c + yi] += v;
        pxi[xi] += v;
      }
    for (std::size_t x = 0; x < nx; ++x) {
      const std::size_t xi = q.node_digit(x, i);
      for (std::size_t yi = 0; yi < c; ++yi)
        worst = std::max(worst, std::abs(joint_x[x * c + yi] / px[x] - joint_xi[xi * c + yi] / pxi[xi]));
    }
  }
  return worst;
}

void CisConfig::validate() const {
  if (penalty_schedule.empty()) throw InvalidArgument("penalty schedule must be nonempty");
  for (std::size_t k = 0; k < penalty_schedule.size(); ++k) {
    if (!(penalty_schedule[k] > 0.0)) throw InvalidArgument("penalty weights must be positive");
    if (k > 0 && !(penalty_schedule[k] > penalty_schedule[k - 1]))
      throw InvalidArgument("penalty schedule must be strictly increasing");
  }
  if (penalty_schedule.back() < 1e6) throw InvalidArgument("final penalty weight must be at least 1e6");
  if (multi_starts < 1) throw InvalidArgument("need at least one start");
  if (!(residual_tolerance > 0.0) || !(inner_tolerance > 0.0)) throw InvalidArgument("tolerances must be positive");
}

// ---------------------------------------------------------------------------
// Penalty objective

CisPenaltyObjective::CisPenaltyObjective(const SystemJoint& target, double rho, std::vector<double> multipliers)
    : target_(target), p_(target.dist().probs().begin(), target.dist().probs().end()), rho_(rho),
      multipliers_(std::move(multipliers)) {
  for (std::size_t c : target_.cards()) count_ += target_.x_size() * c;
  if (multipliers_.empty()) multipliers_.assign(count_, 0.0);
  if (multipliers_.size() != count_) throw InvalidArgument("multiplier count mismatch");
}

std::vector<double> CisPenaltyObjective::probabilities(std::span<const double> theta) const {
  if (theta.size() != p_.size()) throw InvalidArgument("logit vector has the wrong dimension");
  const double top = *std::max_element(theta.begin(), theta.end());
  std::vector<double> q(theta.size());
  double total = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) total += (q[k] = std::exp(theta[k] - top));
  for (double& v : q) v /= total;
  return q;
}

double CisPenaltyObjective::value(std::span<const double> theta) const { return evaluate(theta, nullptr); }

double CisPenaltyObjective::value_and_gradient(std::span<const double> theta, std::span<double> grad) const {
  if (grad.size() != p_.size()) throw InvalidArgument("gradient buffer has the wrong dimension");
  return evaluate(theta, &grad);
}

std::vector<double> CisPenaltyObjective::constraints(std::span<const double> theta) const {
  const std::vector<double> q = probabilities(theta);
  const std::size_t nx = target_.x_size(), n = target_.n();
  std::vector<double> out;
  out.reserve(count_);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = target_.cards()[i];
    std::vector<double> a(nx * c, 0.0), d(nx, 0.0), b(c, 0.0), cc(c * c, 0.0);
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t y = 0; y < nx; ++y) {
        a[x * c + target_.node_digit(y, i)] += q[x * nx + y];
        d[x] += q[x * nx + y];
      }
    for (std::size_t x = 0; x < nx; ++x) {
      const std::size_t xi = target_.node_digit(x, i);
      b[xi] += d[x];
      for (std::size_t yi = 0; yi < c; ++yi) cc[xi * c + yi] += a[x * c + yi];
    }
    for (std::size_t x = 0; x < nx; ++x) {
      const std::size_t xi = target_.node_digit(x, i);
      for (std::size_t yi = 0; yi < c; ++yi) out.push_back(a[x * c + yi] * b[xi] - cc[xi * c + yi] * d[x]);
    }
  }
  return out;
}

double CisPenaltyObjective::evaluate(std::span<const double> theta, std::span<double>* grad) const {
  const std::vector<double> q = probabilities(theta);
  const std::size_t nx = target_.x_size(), n = target_.n(), nz = q.size();
  double kl = 0.0;
  for (std::size_t k = 0; k < nz; ++k)
    if (p_[k] > 0.0) kl += p_[k] * std::log(p_[k] / q[k]);

  // g: derivative of the penalty part with respect to q.
  std::vector<double> g(grad ? nz : 0, 0.0);
  double penalty = 0.0;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = target_.cards()[i];
    std::vector<double> a(nx * c, 0.0), d(nx, 0.0), b(c, 0.0), cc(c * c, 0.0);
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t y = 0; y < nx; ++y) {
        a[x * c + target_.node_digit(y, i)] += q[x * nx + y];
        d[x] += q[x * nx + y];
      }
    for (std::size_t x = 0; x < nx; ++x) {
      const std::size_t xi = target_.node_digit(x, i);
      b[xi] += d[x];
      for (std::size_t yi = 0; yi < c; ++yi) cc[xi * c + yi] += a[x * c + yi];
    }
    std::vector<double> g1(nx * c, 0.0), g2(c, 0.0), g3(c * c, 0.0), g4(nx, 0.0);
    for (std::size_t x = 0; x < nx; ++x) {
      const std::size_t xi = target_.node_digit(x, i);
      for (std::size_t yi = 0; yi < c; ++yi) {
        const double r = a[x * c + yi] * b[xi] - cc[xi * c + yi] * d[x];
        const double lambda = multipliers_[offset + x * c + yi];
        penalty += lambda * r + 0.5 * rho_ * r * r;
        const double u = lambda + rho_ * r;
        g1[x * c + yi] += u * b[xi];
        g2[xi] += u * a[x * c + yi];
        g3[xi * c + yi] -= u * d[x];
        g4[x] -= u * cc[xi * c + yi];
      }
    }
    offset += nx * c;
    if (grad)
      for (std::size_t x = 0; x < nx; ++x) {
        const std::size_t xi = target_.node_digit(x, i);
        for (std::size_t y = 0; y < nx; ++y) {
          const std::size_t yi = target_.node_digit(y, i);
          g[x * nx + y] += g1[x * c + yi] + g2[xi] + g3[xi * c + yi] + g4[x];
        }
      }
  }
  if (grad) {
    double mean = 0.0;
    for (std::size_t k = 0; k < nz; ++k) mean += q[k] * g[k];
    for (std::size_t k = 0; k < nz; ++k) (*grad)[k] = (q[k] - p_[k]) + q[k] * (g[k] - mean);
  }
  return kl + penalty;
}

namespace {

class CeresObjective final : public ceres::FirstOrderFunction {
 public:
  explicit CeresObjective(const CisPenaltyObjective& f) : f_(f) {}
  bool Evaluate(const double* parameters, double* cost, double* gradient) const override {
    const std::span<const double> theta(parameters, f_.dimension());
    if (gradient) {
      *cost = f_.value_and_gradient(theta, std::span<double>(gradient, f_.dimension()));
    } else {
      *cost = f_.value(theta);
    }
    return std::isfinite(*cost);
  }
  int NumParameters() const override { return static_cast<int>(f_.dimension()); }

 private:
  const CisPenaltyObjective& f_;
};

SystemJoint joint_from(const SystemJoint& like, std::vector<double> q) {
  return SystemJoint(Distribution::normalized(like.space(), std::move(q)));
}

struct PenaltyRun {
  std::vector<double> q;
  double kl = std::numeric_limits<double>::infinity();
  double residual = std::numeric_limits<double>::infinity();
  std::vector<double> stage_kl, stage_residual;
  std::size_t iterations = 0;
};

PenaltyRun run_penalty(const SystemJoint& p, std::vector<double> theta, const CisConfig& cfg) {
  PenaltyRun run;
  std::vector<double> multipliers;
  ceres::GradientProblemSolver::Options options;
  options.line_search_direction_type = ceres::LBFGS;
  options.max_num_iterations = static_cast<int>(cfg.max_inner_iterations);
  options.gradient_tolerance = cfg.inner_tolerance;
  options.function_tolerance = 1e-16;
  options.parameter_tolerance = 1e-16;
  options.logging_type = ceres::SILENT;

  auto stage = [&](double rho) {
    CisPenaltyObjective f(p, rho, multipliers);
    ceres::GradientProblem problem(new CeresObjective(f));
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(options, problem, theta.data(), &summary);
    run.iterations += static_cast<std::size_t>(summary.iterations.size());
    const std::vector<double> c = f.constraints(theta);
    if (cfg.use_multipliers) {
      if (multipliers.empty()) multipliers.assign(c.size(), 0.0);
      for (std::size_t k = 0; k < c.size(); ++k) multipliers[k] += rho * c[k];
    }
    run.q = f.probabilities(theta);
    const SystemJoint q = joint_from(p, run.q);
    run.kl = kl_divergence(p.dist(), q.dist());
    run.residual = cis_residual(q);
    run.stage_kl.push_back(run.kl);
    run.stage_residual.push_back(run.residual);
  };
  for (double rho : cfg.penalty_schedule) stage(rho);
  for (std::size_t r = 0; cfg.use_multipliers && r < cfg.extra_rounds && run.residual >= cfg.residual_tolerance; ++r)
    stage(cfg.penalty_schedule.back());
  return run;
}

CisResult solve_penalty(const SystemJoint& p, const CisConfig& cfg) {
  const std::size_t nz = p.dist().size();
  CisResult out;
  PenaltyRun best;
  bool best_feasible = false;
  for (std::size_t s = 0; s < cfg.multi_starts; ++s) {
    std::vector<double> theta(nz);
    if (s == 0) {
      const Distribution si = project_SI(p);
      for (std::size_t k = 0; k < nz; ++k) theta[k] = std::log(si[k]);
    } else if (s == 1) {
      for (std::size_t k = 0; k < nz; ++k) theta[k] = std::log(p.dist()[k]);
    } else {
      Rng rng(cfg.seed, s);
      for (double& t : theta) t = rng.normal();
    }
    PenaltyRun run = run_penalty(p, std::move(theta), cfg);
    const bool feasible = run.residual < cfg.residual_tolerance;
    const bool better = s == 0 || (feasible && !best_feasible) ||
                        (feasible == best_feasible && (feasible ? run.kl < best.kl : run.residual < best.residual));
    if (better) {
      best = std::move(run);
      best_feasible = feasible;
      out.best_start = s;
    }
  }
  MeasureReport& rep = out.report;
  rep.name = "CIS";
  rep.value = clamp_measure(best.kl);
  rep.converged = best_feasible;
  rep.diagnostics["residual"] = best.residual;
  rep.diagnostics["iterations"] = static_cast<double>(best.iterations);
  rep.diagnostics["best_start"] = static_cast<double>(out.best_start);
  rep.projection = Distribution::normalized(p.space(), best.q);
  out.stage_kl = std::move(best.stage_kl);
  out.stage_residual = std::move(best.stage_residual);
  return out;
}

// ---------------------------------------------------------------------------
// Newton on the conditionals R(y | x) with Q(x) = P(x).
//
// Membership only asks that each node marginal R(yi | x) depends on x through
// xi alone, which is linear in R and independent of Q(x). Fixing Q(x) = P(x)
// is optimal by the chain rule, leaving  min −Σ P(x,y) log R(y|x)  subject to
// linear equalities: a convex problem with a unique minimizer.

CisResult solve_newton(const SystemJoint& p, const CisConfig& cfg) {
  const std::size_t nx = p.x_size(), n = p.n(), nz = nx * nx;
  const auto probs = p.dist().probs();
  for (double v : probs)
    if (!(v > 0.0)) throw DomainError("phi_CIS needs a strictly positive joint");

  // Constraint rows: row sums, then equal node marginals within each xi class.
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  for (std::size_t x = 0; x < nx; ++x) {
    std::vector<std::pair<std::size_t, double>> row;
    for (std::size_t y = 0; y < nx; ++y) row.push_back({x * nx + y, 1.0});
    rows.push_back(std::move(row));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = p.cards()[i];
    for (std::size_t x = 0; x < nx; ++x) {
      const std::size_t rep = p.node_digit(x, i) * p.node_stride(i);
      if (rep == x) continue;
      for (std::size_t yi = 0; yi < c; ++yi) {
        std::vector<std::pair<std::size_t, double>> row;
        for (std::size_t y = 0; y < nx; ++y)
          if (p.node_digit(y, i) == yi) {
            row.push_back({x * nx + y, 1.0});
            row.push_back({rep * nx + y, -1.0});
          }
        rows.push_back(std::move(row));
      }
    }
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(nz));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (const auto& [k, v] : rows[r]) a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) += v;

  std::vector<double> px(nx, 0.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < nx; ++y) px[x] += probs[x * nx + y];
  // Feasible start: the conditionals of the SI projection.
  const Distribution si = project_SI(p);
  Eigen::VectorXd r(nz), sp(nz);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < nx; ++y) {
      r[x * nx + y] = si[x * nx + y] / px[x];
      sp[x * nx + y] = std::sqrt(probs[x * nx + y]);
    }

  // Steps live in a fixed orthonormal basis Z of ker A, so feasibility never
  // depends on how badly the Hessian diag(p / r²) is scaled.
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::Index rank = svd.rank();
  const Eigen::MatrixXd z = svd.matrixV().rightCols(static_cast<Eigen::Index>(nz) - rank);

  auto objective = [&](const Eigen::VectorXd& v) {
    double f = 0.0;
    for (std::size_t k = 0; k < nz; ++k) f -= probs[k] * std::log(v[k]);
    return f;
  };

  double f = objective(r);
  double decrement = std::numeric_limits<double>::infinity();
  std::size_t it = 0;
  std::vector<Eigen::Index> order(nz);
  for (; it < cfg.newton_max_iterations && z.cols() > 0; ++it) {
    // Newton step: du = argmin ‖S Z du − sqrt p‖ with S = diag(sqrt p / r).
    // Rows go heaviest first, which keeps Householder QR accurate under
    // extreme row scaling.
    const Eigen::VectorXd w = sp.cwiseQuotient(r);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return w[i] > w[j]; });
    Eigen::MatrixXd m(static_cast<Eigen::Index>(nz), z.cols());
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(nz));
    for (std::size_t k = 0; k < nz; ++k) {
      m.row(static_cast<Eigen::Index>(k)) = w[order[k]] * z.row(order[k]);
      rhs[static_cast<Eigen::Index>(k)] = sp[order[k]];
    }
    const Eigen::VectorXd du = m.colPivHouseholderQr().solve(rhs);
    const Eigen::VectorXd step = z * du;
    // −∇f · step, the predicted decrease.
    decrement = 0.0;
    for (std::size_t k = 0; k < nz; ++k) decrement += probs[k] / r[k] * step[k];
    if (!(decrement > 1e-20)) break;

    double alpha = 1.0;
    for (std::size_t k = 0; k < nz; ++k)
      if (step[k] < 0.0) alpha = std::min(alpha, 0.99 * r[k] / -step[k]);
    bool accepted = false;
    while (alpha > 1e-14) {
      const Eigen::VectorXd trial = r + alpha * step;
      if (trial.minCoeff() > 0.0) {
        const double ft = objective(trial);
        // Below ~1e-12 the predicted decrease is lost in the rounding of f.
        if (ft <= f - 1e-4 * alpha * decrement || (decrement < 1e-12 && ft <= f + 1e-15 * std::abs(f))) {
          r = trial;
          f = ft;
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
  }
  const double infeasibility = (a * r - [&] {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(a.rows());
    b.head(static_cast<Eigen::Index>(nx)).setOnes();
    return b;
  }()).cwiseAbs().maxCoeff();

  std::vector<double> q(nz);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < nx; ++y) q[x * nx + y] = px[x] * r[x * nx + y];
  const SystemJoint qj = joint_from(p, std::move(q));

  CisResult out;
  MeasureReport& rep = out.report;
  rep.name = "CIS";
  rep.value = clamp_measure(kl_divergence(p.dist(), qj.dist()));
  const double residual = cis_residual(qj);
  rep.converged = decrement < 1e-12 && infeasibility < 1e-10 && residual < cfg.residual_tolerance;
  rep.diagnostics["residual"] = residual;
  rep.diagnostics["iterations"] = static_cast<double>(it);
  rep.diagnostics["newton_decrement"] = decrement;
  rep.diagnostics["infeasibility"] = infeasibility;
  rep.projection = qj.dist();
  return out;
}

}  // namespace

CisResult phi_CIS_detailed(const SystemJoint& p, const CisConfig& config) {
  config.validate();
  return config.method == CisMethod::Newton ? solve_newton(p, config) : solve_penalty(p, config);
}

MeasureReport phi_CIS(const SystemJoint& p, const CisConfig& config) { return phi_CIS_detailed(p, config).report; }

SystemJoint sample_NCIS(std::uint64_t seed) {
  Rng rng(seed, 0);
  double px1[2], px2[2], py2[2], py1[2][2][2];  // py1[x1][y2][y1]
  rng.simplex(px1);
  rng.simplex(px2);
  rng.simplex(py2);
  for (auto& by_x1 : py1)
    for (auto& row : by_x1) rng.simplex(row);
  std::vector<double> z(16);
  for (std::size_t x1 = 0; x1 < 2; ++x1)
    for (std::size_t x2 = 0; x2 < 2; ++x2)
      for (std::size_t y1 = 0; y1 < 2; ++y1)
        for (std::size_t y2 = 0; y2 < 2; ++y2)
          z[(x1 * 2 + x2) * 4 + y1 * 2 + y2] = px1[x1] * px2[x2] * py1[x1][y2][y1] * py2[y2];
  return SystemJoint(Distribution::normalized(ProductSpace::binary_system(2), std::move(z)));
}

}  // namespace phi
