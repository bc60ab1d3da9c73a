#include <doctest.h>

#include <cmath>
#include <numeric>

#include "phi/cis.hpp"
#include "phi/em.hpp"
#include "phi/error.hpp"
#include "phi/ips.hpp"
#include "phi/ising.hpp"
#include "support.hpp"

using namespace phi;
using namespace phi::testing;

TEST_CASE("system validation") {
  CHECK_THROWS_AS(IsingSystem(0, {}, 1.0), InvalidArgument);
  CHECK_THROWS_AS(IsingSystem(2, {1.0, 2.0, 3.0}, 1.0), InvalidArgument);
  CHECK_THROWS_AS(IsingSystem(1, {1.0}, -1.0), InvalidArgument);
  CHECK_THROWS_AS(IsingSystem(2, {1, 0, 0, 1}, 1.0, {1.0}), InvalidArgument);
  CHECK_THROWS_AS(preset("paper-n4"), InvalidArgument);
  CHECK(preset_names().size() == 3);
  CHECK(preset("paper-n5", 2.0).n == 5);
}

TEST_CASE("transition kernel") {
  SUBCASE("beta zero is uniform") {
    const auto k = transition_kernel(preset("paper-n3", 0.0));
    for (double v : k.table) CHECK(v == doctest::Approx(1.0 / 8).epsilon(1e-15));
  }
  SUBCASE("single node by hand") {
    const auto k = transition_kernel(IsingSystem(1, {1.0}, 0.5));
    // State 1 is +1.
    CHECK(k(1, 1) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-15));
    CHECK(k(1, 1) == doctest::Approx(0.731059).epsilon(1e-6));
    CHECK(k(0, 1) == doctest::Approx(1.0 / (1.0 + std::exp(1.0))).epsilon(1e-15));
  }
  SUBCASE("rows sum to one") {
    for (const auto& name : preset_names())
      for (double beta : {0.0, 0.7, 5.0, 30.0}) {
        const auto k = transition_kernel(preset(name, beta));
        for (std::size_t g = 0; g < k.given_size; ++g) {
          const auto row = k.row(g);
          CHECK(std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0) < 1e-14);
        }
      }
  }
  SUBCASE("exterior influence averages over W") {
    const IsingSystem ext(2, {0.3, 0.1, 0.2, 0.4}, 1.5, {0.9, -0.5});
    const auto k = transition_kernel(ext);
    for (std::size_t x = 0; x < 4; ++x)
      for (std::size_t y = 0; y < 4; ++y) {
        double expected = 0.0;
        for (double w : {-1.0, 1.0}) {
          double v = 0.5;
          for (std::size_t j = 0; j < 2; ++j) {
            const double yj = ((y >> (1 - j)) & 1) ? 1.0 : -1.0;
            double field = ext.exterior[j] * w;
            for (std::size_t i = 0; i < 2; ++i) field += ext.v(i, j) * (((x >> (1 - i)) & 1) ? 1.0 : -1.0);
            v *= 1.0 / (1.0 + std::exp(-2.0 * ext.beta * field * yj));
          }
          expected += v;
        }
        CHECK(k(x, y) == doctest::Approx(expected).epsilon(1e-14));
      }
  }
}

TEST_CASE("stationary distribution") {
  SUBCASE("single node and beta zero are uniform") {
    for (double v : {-2.0, 0.3, 4.0}) {
      const auto st = stationary(IsingSystem(1, {v}, 1.7));
      CHECK(st.probs[0] == doctest::Approx(0.5).epsilon(1e-12));
    }
    const auto st = stationary(preset("paper-n5", 0.0));
    for (double p : st.probs) CHECK(p == doctest::Approx(1.0 / 32).epsilon(1e-12));
  }
  SUBCASE("residual, uniqueness and sign symmetry") {
    for (const auto& name : preset_names())
      for (double beta : {0.5, 1.0, 2.0}) {
        StationaryOptions a, b;
        a.seed = 1;
        b.seed = 2;
        const auto sa = stationary(preset(name, beta), a), sb = stationary(preset(name, beta), b);
        CHECK(sa.converged);
        CHECK(sa.residual < 1e-12);
        const std::size_t nx = sa.probs.size();
        for (std::size_t x = 0; x < nx; ++x) {
          CHECK(std::abs(sa.probs[x] - sb.probs[x]) < 1e-11);
          CHECK(std::abs(sa.probs[x] - sa.probs[nx - 1 - x]) < 1e-12);
        }
      }
  }
  SUBCASE("nearly deterministic kernels fall back to elimination") {
    const auto st = stationary(preset("paper-n2", 30.0));
    CHECK(st.converged);
    CHECK(st.used_direct);
    CHECK(st.residual < 1e-12);
    StationaryOptions opt;
    opt.direct_fallback = false;
    opt.max_iters = 50;
    opt.power_budget = 50;
    CHECK_FALSE(stationary(preset("paper-n2", 30.0), opt).converged);
    CHECK_THROWS_AS(stationary_joint(preset("paper-n2", 30.0), opt), DomainError);
  }
}

TEST_CASE("stationary joint") {
  SUBCASE("beta zero: uniform joint and every measure vanishes") {
    const auto p = stationary_joint(preset("paper-n2", 0.0));
    for (double v : p.dist().probs()) CHECK(v == doctest::Approx(1.0 / 16).epsilon(1e-12));
    CHECK(phi_I(p).value < 1e-8);
    CHECK(phi_SI(p).value < 1e-8);
    CHECK(phi_G(p).value < 1e-8);
    CHECK(phi_CIS(p).value < 1e-8);
    CHECK(phi_CII(p, SplitFamily::cii(2, 2), EmConfig{}).report.value < 1e-8);
  }
  SUBCASE("past and present marginals coincide") {
    for (double beta : {0.3, 1.0, 4.0, 12.0, 25.0}) {
      const auto p = stationary_joint(preset("paper-n2", beta));
      const auto mx = marginalize(p.dist(), p.past()), my = marginalize(p.dist(), p.present());
      for (std::size_t x = 0; x < 4; ++x) CHECK(std::abs(mx[x] - my[x]) < 1e-10);
    }
  }
  SUBCASE("no cross weights: only phi_I survives") {
    const IsingSystem diag(2, {0.8, 0.0, 0.0, -0.6}, 1.0);
    for (double beta : {0.5, 2.0}) {
      const auto p = stationary_joint(diag.with_beta(beta));
      CHECK(phi_SI(p).value < 1e-6);
      CHECK(phi_CIS(p).value < 1e-6);
      CHECK(phi_CII(p, SplitFamily::cii(2, 2), EmConfig{}).report.value < 1e-6);
      CHECK(phi_I(p).value > 1e-3);
    }
  }
}

TEST_CASE("extended stationary joint") {
  const IsingSystem ext(2, {0.3, 0.6, 0.2, 0.4}, 1.5, {0.9, 0.9});
  CHECK_THROWS_AS(stationary_extended(preset("paper-n2", 1.0)), InvalidArgument);
  const auto pe = stationary_extended(ext);
  const auto visible = visible_marginal(pe);
  const auto direct = stationary_joint(ext);
  for (std::size_t z = 0; z < 16; ++z) CHECK(std::abs(visible.dist()[z] - direct.dist()[z]) < 1e-12);
  CHECK(std::abs(mutual_information(pe, {0, 1}, {4})) < 1e-12);
  const auto w = marginalize(pe, {4});
  CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(phi_T(pe).value > 0.0);
}
