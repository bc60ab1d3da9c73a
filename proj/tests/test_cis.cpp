#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "phi/cis.hpp"
#include "phi/em.hpp"
#include "phi/error.hpp"
#include "support.hpp"

using namespace phi;
using namespace phi::testing;

namespace {

// P(x) [(1 − t) R_a(y | x) + t R_b(y | x)]; stays in M_CIS when both
// conditionals do, because the membership constraints are linear in R.
Distribution blend(const SystemJoint& p, const Distribution& a, const Distribution& b, double t) {
  const std::size_t nx = p.x_size();
  std::vector<double> probs(nx * nx);
  for (std::size_t x = 0; x < nx; ++x) {
    double pa = 0.0, pb = 0.0, px = 0.0;
    for (std::size_t y = 0; y < nx; ++y) {
      pa += a[x * nx + y];
      pb += b[x * nx + y];
      px += p.dist()[x * nx + y];
    }
    for (std::size_t y = 0; y < nx; ++y)
      probs[x * nx + y] = px * ((1 - t) * a[x * nx + y] / pa + t * b[x * nx + y] / pb);
  }
  return Distribution::normalized(p.space(), std::move(probs));
}

std::vector<double> random_theta(std::size_t d, Rng& rng) {
  std::vector<double> theta(d);
  for (double& v : theta) v = rng.normal();
  return theta;
}

}  // namespace

TEST_CASE("cis_residual") {
  Rng rng(103, 0);
  for (int t = 0; t < 10; ++t) {
    CHECK(cis_residual(random_SI(2, rng)) < 1e-13);
    CHECK(cis_residual(random_SI(3, rng)) < 1e-13);
    CHECK(cis_residual(visible_marginal(random_E(2, 3, rng))) < 1e-12);
    CHECK(cis_residual(random_system(2, rng)) > 1e-4);
  }
  CHECK(cis_residual(SystemJoint(Distribution::uniform(ProductSpace::binary_system(2)))) < 1e-15);
}

TEST_CASE("phi_CIS on members of the model") {
  Rng rng(107, 0);
  for (int t = 0; t < 20; ++t) {
    CHECK(phi_CIS(random_SI(2, rng)).value < 1e-6);
    CHECK(phi_CIS(visible_marginal(random_E(2, 1 + t % 4, rng))).value < 1e-6);
    const auto s = sample_NCIS(static_cast<std::uint64_t>(t));
    CHECK(cis_residual(s) < 1e-12);
    CHECK(phi_CIS(s).value < 1e-6);
  }
  CHECK(phi_CIS(random_system(1, rng)).value < 1e-12);
}

TEST_CASE("phi_CIS minimizer is feasible and optimal along feasible directions") {
  Rng rng(109, 0);
  for (int t = 0; t < 20; ++t) {
    const auto p = random_system(2, rng);
    const auto rep = phi_CIS(p);
    CHECK(rep.converged);
    REQUIRE(rep.projection.has_value());
    const SystemJoint q(*rep.projection);
    CHECK(cis_residual(q) < 1e-7);
    CHECK(std::abs(kl_divergence(p.dist(), *rep.projection) - rep.value) < 1e-12);
    for (int c = 0; c < 50; ++c) {
      const auto other = c % 2 ? random_SI(2, rng).dist() : visible_marginal(random_E(2, 2 + c % 5, rng)).dist();
      for (double step : {1e-3, 1e-2, 0.1, 1.0})
        CHECK(kl_divergence(p.dist(), blend(p, *rep.projection, other, step)) >= rep.value - 1e-12);
    }
  }
}

TEST_CASE("sandwich between split and integrated models") {
  Rng rng(113, 0);
  for (int t = 0; t < 10; ++t) {
    const auto p = random_system(2, rng);
    const double cis = phi_CIS(p).value;
    CHECK(cis <= phi_SI(p).value + 1e-10);
    CHECK(cis <= phi_I(p).value + 1e-6);
    EmConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(t);
    const std::vector<std::size_t> sizes{2, 4, 16};
    for (const auto& r : phi_CII_sweep(p, SplitFamily::cii(2, 2), sizes, cfg)) CHECK(cis <= r.report.value + 1e-6);
  }
}

TEST_CASE("non-binary nodes") {
  Rng rng(127, 0);
  const auto space = ProductSpace::system(std::vector<std::size_t>{3, 2});
  for (int t = 0; t < 5; ++t) {
    const SystemJoint p(random_positive(space, rng));
    const auto rep = phi_CIS(p);
    CHECK(rep.converged);
    CHECK(rep.value <= phi_SI(p).value + 1e-10);
    CHECK(cis_residual(SystemJoint(*rep.projection)) < 1e-7);
  }
}

TEST_CASE("penalty route") {
  Rng rng(131, 0);
  SUBCASE("agrees with Newton on random two-node joints") {
    CisConfig cfg;
    cfg.method = CisMethod::Penalty;
    cfg.multi_starts = 4;
    for (int t = 0; t < 5; ++t) {
      const auto p = random_system(2, rng);
      const auto pen = phi_CIS(p, cfg);
      const auto newton = phi_CIS(p);
      CHECK(pen.converged);
      CHECK(std::abs(pen.value - newton.value) < 1e-6);
    }
  }
  SUBCASE("pure penalty path rises towards the constrained optimum") {
    CisConfig cfg;
    cfg.method = CisMethod::Penalty;
    cfg.multi_starts = 1;
    cfg.use_multipliers = false;
    for (int t = 0; t < 5; ++t) {
      const auto res = phi_CIS_detailed(random_system(2, rng), cfg);
      REQUIRE(res.stage_kl.size() == cfg.penalty_schedule.size());
      for (std::size_t s = 1; s < res.stage_kl.size(); ++s) {
        CHECK(res.stage_kl[s] >= res.stage_kl[s - 1] - 1e-8);
        CHECK(res.stage_residual[s] <= res.stage_residual[s - 1] + 1e-8);
      }
    }
  }
  SUBCASE("analytic gradient matches central differences") {
    for (int t = 0; t < 20; ++t) {
      const auto p = random_system(2, rng);
      const double rho = t % 2 ? 10.0 : 1e3;
      std::vector<double> lambda;
      if (t % 3 == 0)
        for (std::size_t c = 0; c < CisPenaltyObjective(p, rho).constraint_count(); ++c) lambda.push_back(rng.normal());
      const CisPenaltyObjective f(p, rho, lambda);
      auto theta = random_theta(f.dimension(), rng);
      std::vector<double> grad(f.dimension());
      f.value_and_gradient(theta, grad);
      double worst = 0.0;
      for (std::size_t k = 0; k < theta.size(); ++k) {
        const double keep = theta[k];
        theta[k] = keep + 1e-6;
        const double up = f.value(theta);
        theta[k] = keep - 1e-6;
        const double down = f.value(theta);
        theta[k] = keep;
        const double fd = (up - down) / 2e-6;
        worst = std::max(worst, std::abs(fd - grad[k]) / std::max(1.0, std::abs(grad[k])));
      }
      CHECK(worst < 1e-4);
    }
  }
}

TEST_CASE("configuration validation") {
  CisConfig cfg;
  cfg.residual_tolerance = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  Rng rng(137, 0);
  CHECK_THROWS_AS(phi_CIS(random_system(2, rng), cfg), InvalidArgument);
}
