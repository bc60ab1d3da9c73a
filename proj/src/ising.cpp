#include "phi/ising.hpp"

#include <cmath>
#include <map>

#include "phi/error.hpp"
#include "phi/rng.hpp"

namespace phi {

IsingSystem::IsingSystem(std::size_t n_, std::vector<double> w, double b, std::vector<double> ext)
    : n(n_), weights(std::move(w)), beta(b), exterior(std::move(ext)) {
  if (n == 0) throw InvalidArgument("Ising system needs at least one node");
  if (weights.size() != n * n) throw InvalidArgument("weight matrix must be n x n");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidArgument("beta must be finite and non-negative");
  for (double v : weights)
    if (!std::isfinite(v)) throw InvalidArgument("weights must be finite");
  if (!exterior.empty() && exterior.size() != n) throw InvalidArgument("exterior weights need one entry per node");
  for (double v : exterior)
    if (!std::isfinite(v)) throw InvalidArgument("exterior weights must be finite");
}

namespace {

const std::map<std::string, std::pair<std::size_t, std::vector<double>>>& presets() {
  static const std::map<std::string, std::pair<std::size_t, std::vector<double>>> table = {
      {"paper-n2", {2, {0.0084181, -0.2401545, 0.39270161, 0.37198751}}},
      {"paper-n3",
       {3,
        {-0.43478388, 0.47448218, 0.36808313, 0.52117467, 0.00672578, -0.7387737, -0.56114795, -0.96941243,
         -0.76408711}}},
      {"paper-n5",
       {5, {-0.35615839, -0.09775903, 0.89743801,  -0.00604247, -0.03897772, -0.2260056,  0.47769717,
            -0.4302256,  0.18692707,  0.25140741,  -0.86081159, -0.18348132, -0.71528754, -0.08100602,
            -0.64364176, -0.13967234, -0.03233011, -0.81057654, -0.33327558, -0.57447322, 0.18920264,
            -0.99054716, 0.32088358,  0.69100397,  -0.69206604}}},
  };
  return table;
}

int spin(std::size_t state, std::size_t node, std::size_t n) {
  return ((state >> (n - 1 - node)) & 1U) ? 1 : -1;
}

// Grassmann-Taksar-Heyman elimination: stationary vector of a stochastic
// matrix without subtractions, so tiny transition probabilities survive.
std::vector<double> gth(std::vector<double> a, std::size_t size) {
  for (std::size_t k = size; k-- > 1;) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += a[k * size + j];
    for (std::size_t i = 0; i < k; ++i) a[i * size + k] /= s;
    for (std::size_t i = 0; i < k; ++i) {
      const double aik = a[i * size + k];
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < k; ++j) a[i * size + j] += aik * a[k * size + j];
    }
  }
  std::vector<double> pi(size, 0.0);
  pi[0] = 1.0;
  for (std::size_t k = 1; k < size; ++k) {
    double v = 0.0;
    for (std::size_t i = 0; i < k; ++i) v += pi[i] * a[i * size + k];
    pi[k] = v;
  }
  double t = 0.0;
  for (double v : pi) t += v;
  for (double& v : pi) v /= t;
  return pi;
}

void step(const std::vector<double>& p, const std::vector<double>& k, std::vector<double>& out) {
  const std::size_t size = p.size();
  out.assign(size, 0.0);
  for (std::size_t x = 0; x < size; ++x) {
    const double px = p[x];
    const double* row = k.data() + x * size;
    for (std::size_t y = 0; y < size; ++y) out[y] += px * row[y];
  }
}

double l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [k, _] : presets()) names.push_back(k);
  return names;
}

IsingSystem preset(const std::string& name, double beta) {
  const auto it = presets().find(name);
  if (it == presets().end()) throw InvalidArgument("unknown preset: " + name);
  return IsingSystem(it->second.first, it->second.second, beta);
}

namespace {

/// Row-major P(y | x, w) for a fixed exterior state (0 when there is none).
std::vector<double> kernel_table(const IsingSystem& sys, int w) {
  const std::size_t n = sys.n, size = std::size_t{1} << n;
  std::vector<double> table(size * size);
  std::vector<double> field(n);
  for (std::size_t x = 0; x < size; ++x) {
    for (std::size_t j = 0; j < n; ++j) {
      double h = sys.has_exterior() ? sys.exterior[j] * w : 0.0;
      for (std::size_t i = 0; i < n; ++i) h += sys.v(i, j) * spin(x, i, n);
      field[j] = h;
    }
    for (std::size_t y = 0; y < size; ++y) {
      double v = 1.0;
      for (std::size_t j = 0; j < n; ++j) v *= 1.0 / (1.0 + std::exp(-2.0 * sys.beta * field[j] * spin(y, j, n)));
      table[x * size + y] = v;
    }
  }
  return table;
}

}  // namespace

ConditionalKernel transition_kernel(const IsingSystem& sys) {
  const std::size_t n = sys.n, size = std::size_t{1} << n;
  ConditionalKernel k;
  k.source = ProductSpace::binary_system(n);
  for (std::size_t i = 0; i < n; ++i) {
    k.given_axes.push_back(i);
    k.target_axes.push_back(n + i);
  }
  k.given_size = size;
  k.target_size = size;
  if (!sys.has_exterior()) {
    k.table = kernel_table(sys, 0);
  } else {
    const auto lo = kernel_table(sys, -1), hi = kernel_table(sys, 1);
    k.table.resize(lo.size());
    for (std::size_t t = 0; t < lo.size(); ++t) k.table[t] = 0.5 * (lo[t] + hi[t]);
  }
  return k;
}

StationaryResult stationary(const IsingSystem& sys, const StationaryOptions& opt) {
  if (!(opt.tol > 0.0)) throw InvalidArgument("stationary tolerance must be positive");
  const ConditionalKernel k = transition_kernel(sys);
  const std::size_t size = k.given_size;
  StationaryResult r;
  Rng rng(opt.seed, 0);
  r.probs.resize(size);
  rng.simplex(r.probs);

  std::vector<double> next;
  const std::size_t power_limit = opt.direct_fallback ? std::min(opt.power_budget, opt.max_iters) : opt.max_iters;
  while (r.iterations < power_limit) {
    step(r.probs, k.table, next);
    ++r.iterations;
    const double change = l1(next, r.probs);
    r.probs.swap(next);
    if (change < opt.tol) {
      r.converged = true;
      break;
    }
  }
  if (!r.converged && opt.direct_fallback) {
    r.probs = gth(k.table, size);
    r.used_direct = true;
  }
  step(r.probs, k.table, next);
  r.residual = l1(next, r.probs);
  r.converged = r.residual < opt.tol;
  return r;
}

SystemJoint stationary_joint(const IsingSystem& sys, const StationaryOptions& options) {
  const StationaryResult st = stationary(sys, options);
  if (!st.converged) throw DomainError("stationary distribution did not converge");
  const ConditionalKernel k = transition_kernel(sys);
  const std::size_t size = k.given_size;
  std::vector<double> joint(size * size);
  for (std::size_t x = 0; x < size; ++x)
    for (std::size_t y = 0; y < size; ++y) joint[x * size + y] = st.probs[x] * k.table[x * size + y];
  return SystemJoint(Distribution::normalized(k.source, std::move(joint)));
}

Distribution stationary_extended(const IsingSystem& sys, const StationaryOptions& options) {
  if (!sys.has_exterior()) throw InvalidArgument("stationary_extended needs exterior weights");
  const StationaryResult st = stationary(sys, options);
  if (!st.converged) throw DomainError("stationary distribution did not converge");
  const std::size_t size = std::size_t{1} << sys.n;
  const auto lo = kernel_table(sys, -1), hi = kernel_table(sys, 1);
  std::vector<double> ext(size * size * 2);
  for (std::size_t x = 0; x < size; ++x)
    for (std::size_t y = 0; y < size; ++y) {
      ext[(x * size + y) * 2 + 0] = st.probs[x] * 0.5 * lo[x * size + y];
      ext[(x * size + y) * 2 + 1] = st.probs[x] * 0.5 * hi[x * size + y];
    }
  return Distribution::normalized(ProductSpace::binary_system(sys.n).with_latent(2), std::move(ext));
}

}  // namespace phi
