#pragma once

// Helpers shared by the unit and acceptance tests. The oracles here are
// deliberately naive and do not call into the library's own algorithms.

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "phi/dist.hpp"
#include "phi/measures.hpp"
#include "phi/rng.hpp"

namespace phi::testing {

inline std::vector<double> simplex(Rng& rng, std::size_t k) {
  std::vector<double> v(k);
  rng.simplex(v);
  return v;
}

inline Distribution random_positive(const ProductSpace& space, Rng& rng) {
  return Distribution::normalized(space, simplex(rng, space.size()));
}

inline SystemJoint random_system(std::size_t n, Rng& rng) {
  return SystemJoint(random_positive(ProductSpace::binary_system(n), rng));
}

/// P(x) ∏ P(yi | xi) with flat-simplex factors, binary nodes.
inline SystemJoint random_SI(std::size_t n, Rng& rng) {
  const std::size_t nx = std::size_t{1} << n;
  const auto px = simplex(rng, nx);
  std::vector<std::vector<double>> k(n);  // k[i][xi * 2 + yi]
  for (auto& row : k) {
    const auto a = simplex(rng, 2), b = simplex(rng, 2);
    row = {a[0], a[1], b[0], b[1]};
  }
  std::vector<double> probs(nx * nx);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < nx; ++y) {
      double v = px[x];
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t shift = n - 1 - i;
        v *= k[i][((x >> shift) & 1) * 2 + ((y >> shift) & 1)];
      }
      probs[x * nx + y] = v;
    }
  return SystemJoint(Distribution::normalized(ProductSpace::binary_system(n), std::move(probs)));
}

/// Q(x) Q(w) ∏ Q(yi | xi, w) over binary nodes with W last.
inline Distribution random_E(std::size_t n, std::size_t m, Rng& rng) {
  const std::size_t nx = std::size_t{1} << n;
  const auto qx = simplex(rng, nx);
  const auto qw = simplex(rng, m);
  std::vector<std::vector<double>> k(n, std::vector<double>(2 * m * 2));  // [(xi*m + w)*2 + yi]
  for (auto& row : k)
    for (std::size_t r = 0; r < 2 * m; ++r) {
      const auto s = simplex(rng, 2);
      row[r * 2] = s[0];
      row[r * 2 + 1] = s[1];
    }
  std::vector<double> probs(nx * nx * m);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < nx; ++y)
      for (std::size_t w = 0; w < m; ++w) {
        double v = qx[x] * qw[w];
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t shift = n - 1 - i;
          v *= k[i][(((x >> shift) & 1) * m + w) * 2 + ((y >> shift) & 1)];
        }
        probs[(x * nx + y) * m + w] = v;
      }
  return Distribution::normalized(ProductSpace::binary_system(n).with_latent(m), std::move(probs));
}

/// Sum of p over each projected state, keyed by the digit tuple.
inline std::map<std::vector<std::size_t>, double> brute_marginal(const Distribution& p, const AxisSet& axes) {
  std::map<std::vector<std::size_t>, double> out;
  for (std::size_t z = 0; z < p.size(); ++z) {
    std::vector<std::size_t> key;
    for (std::size_t a : axes) key.push_back(p.space().digit(z, a));
    out[key] += p[z];
  }
  return out;
}

inline std::vector<std::size_t> digits(const Distribution& p, std::size_t z, const AxisSet& axes) {
  std::vector<std::size_t> key;
  for (std::size_t a : axes) key.push_back(p.space().digit(z, a));
  return key;
}

/// I(A;B|C) by an explicit sum over every joint state.
inline double brute_cmi(const Distribution& p, const AxisSet& a, const AxisSet& b, const AxisSet& c) {
  AxisSet ac = a, bc = b, abc = a;
  ac.insert(ac.end(), c.begin(), c.end());
  bc.insert(bc.end(), c.begin(), c.end());
  abc.insert(abc.end(), b.begin(), b.end());
  abc.insert(abc.end(), c.begin(), c.end());
  const auto m_abc = brute_marginal(p, abc), m_ac = brute_marginal(p, ac), m_bc = brute_marginal(p, bc),
             m_c = brute_marginal(p, c);
  double total = 0.0;
  for (const auto& [key, v] : m_abc) {
    if (v <= 0.0) continue;
    const std::vector<std::size_t> ka(key.begin(), key.begin() + static_cast<long>(a.size()));
    const std::vector<std::size_t> kb(key.begin() + static_cast<long>(a.size()),
                                      key.begin() + static_cast<long>(a.size() + b.size()));
    const std::vector<std::size_t> kc(key.begin() + static_cast<long>(a.size() + b.size()), key.end());
    std::vector<std::size_t> kac = ka, kbc = kb;
    kac.insert(kac.end(), kc.begin(), kc.end());
    kbc.insert(kbc.end(), kc.begin(), kc.end());
    total += v * std::log(v * m_c.at(kc) / (m_ac.at(kac) * m_bc.at(kbc)));
  }
  return total;
}

inline double brute_kl(const Distribution& p, const Distribution& q) {
  double total = 0.0;
  for (std::size_t z = 0; z < p.size(); ++z)
    if (p[z] > 0.0) total += p[z] * std::log(p[z] / q[z]);
  return total;
}

/// Normalized product of log-normal clique factors, binary nodes.
inline Distribution random_MG(std::size_t n, Rng& rng) {
  const std::size_t nx = std::size_t{1} << n;
  std::vector<double> fx(nx), fy(nx), fd(n * 4);
  for (double& v : fx) v = std::exp(rng.normal());
  for (double& v : fy) v = std::exp(rng.normal());
  for (double& v : fd) v = std::exp(rng.normal());
  std::vector<double> probs(nx * nx);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < nx; ++y) {
      double v = fx[x] * fy[y];
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t s = n - 1 - i;
        v *= fd[i * 4 + ((x >> s) & 1) * 2 + ((y >> s) & 1)];
      }
      probs[x * nx + y] = v;
    }
  return Distribution::normalized(ProductSpace::binary_system(n), std::move(probs));
}

/// Q(x, y) Q(w | x, y) with a flat random conditional for W.
inline Distribution random_data_manifold_point(const SystemJoint& target, std::size_t m, Rng& rng) {
  std::vector<double> probs;
  for (std::size_t z = 0; z < target.dist().size(); ++z)
    for (double r : simplex(rng, m)) probs.push_back(target.dist()[z] * r);
  return Distribution::normalized(target.space().with_latent(m), std::move(probs));
}

}  // namespace phi::testing
