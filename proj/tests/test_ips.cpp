#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "phi/ips.hpp"
#include "phi/ising.hpp"
#include "support.hpp"

using namespace phi;
using namespace phi::testing;

TEST_CASE("diagonally split cliques") {
  const auto c = CliqueSystem::diagonally_split(3);
  REQUIRE(c.cliques.size() == 5);
  CHECK(c.cliques[0] == AxisSet{0, 1, 2});
  CHECK(c.cliques[1] == AxisSet{3, 4, 5});
  CHECK(c.cliques[2] == AxisSet{0, 3});
  CHECK(c.cliques[4] == AxisSet{2, 5});
}

TEST_CASE("ips_project") {
  Rng rng(97, 0);
  const auto cliques = CliqueSystem::diagonally_split(2);
  SUBCASE("members of the family are reproduced") {
    for (int t = 0; t < 10; ++t) {
      const auto p = random_MG(2, rng);
      const auto res = ips_project(p, cliques);
      CHECK(res.converged);
      CHECK(kl_divergence(p, res.projection) < 1e-9);
    }
  }
  SUBCASE("uniform is reached in one cycle") {
    const auto u = Distribution::uniform(ProductSpace::binary_system(2));
    const auto res = ips_project(u, cliques);
    CHECK(res.cycles <= 1);
    for (std::size_t z = 0; z < 16; ++z) CHECK(res.projection[z] == doctest::Approx(1.0 / 16).epsilon(1e-15));
  }
  SUBCASE("marginals fitted, positive, monotone") {
    for (int t = 0; t < 10; ++t) {
      const auto p = random_system(3, rng).dist();
      const auto res = ips_project(p, CliqueSystem::diagonally_split(3), 1e-9);
      CHECK(res.converged);
      CHECK(res.max_deviation < 1e-9);
      for (double v : res.projection.probs()) CHECK(v > 0.0);
      for (std::size_t i = 1; i < res.kl_per_cycle.size(); ++i)
        CHECK(res.kl_per_cycle[i] <= res.kl_per_cycle[i - 1] + 1e-12);
    }
  }
  SUBCASE("clique order does not matter") {
    for (int t = 0; t < 5; ++t) {
      const auto p = random_system(2, rng).dist();
      auto reversed = cliques;
      std::reverse(reversed.cliques.begin(), reversed.cliques.end());
      const auto a = ips_project(p, cliques, 1e-12), b = ips_project(p, reversed, 1e-12);
      for (std::size_t z = 0; z < 16; ++z) CHECK(std::abs(a.projection[z] - b.projection[z]) < 1e-8);
    }
  }
  SUBCASE("beats random family candidates") {
    const auto p = random_system(2, rng).dist();
    const double best = kl_divergence(p, ips_project(p, cliques, 1e-12).projection);
    double margin = 1.0;
    for (int c = 0; c < 2000; ++c) margin = std::min(margin, kl_divergence(p, random_MG(2, rng)) - best);
    CHECK(margin >= -1e-12);
  }
  SUBCASE("cycle budget exhausted") {
    const auto p = random_system(2, rng).dist();
    const auto res = ips_project(p, cliques, 1e-15, 1);
    CHECK_FALSE(res.converged);
    CHECK(res.cycles == 1);
  }
}

TEST_CASE("phi_G") {
  Rng rng(101, 0);
  SUBCASE("zero on product distributions") {
    const auto px = simplex(rng, 4), py = simplex(rng, 4);
    std::vector<double> probs;
    for (double a : px)
      for (double b : py) probs.push_back(a * b);
    CHECK(phi_G(SystemJoint(Distribution::normalized(ProductSpace::binary_system(2), probs))).value < 1e-9);
  }
  SUBCASE("bounded by phi_I on the two-node system") {
    for (double beta = 0.0; beta <= 30.0; beta += 2.5) {
      const auto p = stationary_joint(preset("paper-n2", beta));
      CHECK(phi_G(p).value <= phi_I(p).value + 1e-6);
    }
  }
  SUBCASE("three-node system: phi_G peaks before phi_I") {
    double best_g = -1.0, best_i = -1.0, beta_g = 0.0, beta_i = 0.0;
    for (int k = 0; k <= 40; ++k) {
      const double beta = 0.1 * k;
      const auto p = stationary_joint(preset("paper-n3", beta));
      const double g = phi_G(p).value, i = phi_I(p).value;
      if (g > best_g) best_g = g, beta_g = beta;
      if (i > best_i) best_i = i, beta_i = beta;
    }
    MESSAGE("phi_G max at beta " << beta_g << ", phi_I max at beta " << beta_i);
    CHECK(beta_g < beta_i);
  }
}
