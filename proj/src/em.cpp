#include "phi/em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "phi/error.hpp"

namespace phi {

SplitFamily SplitFamily::cii(std::size_t n, std::size_t m) {
  SplitFamily f;
  f.n = n;
  f.latent_size = m;
  for (std::size_t i = 0; i < n; ++i) f.parent_of.push_back({i});
  return f;
}

SplitFamily SplitFamily::ncii(std::size_t m) {
  SplitFamily f;
  f.n = 2;
  f.latent_size = m;
  f.parent_of = {{0}, {}};
  f.x_factorized = true;
  return f;
}

SplitFamily SplitFamily::with_latent_size(std::size_t m) const {
  SplitFamily f = *this;
  f.latent_size = m;
  return f;
}

bool SplitFamily::is_standard() const {
  if (x_factorized || parent_of.size() != n) return false;
  for (std::size_t i = 0; i < n; ++i)
    if (parent_of[i] != std::vector<std::size_t>{i}) return false;
  return true;
}

void SplitFamily::validate(const SystemJoint& target) const {
  if (n != target.n()) throw InvalidArgument("split family node count does not match the target");
  if (parent_of.size() != n) throw InvalidArgument("split family needs one parent set per present node");
  if (latent_size < 1) throw InvalidArgument("latent size must be positive");
  for (const auto& pa : parent_of) {
    for (std::size_t j : pa)
      if (j >= n) throw InvalidArgument("parent index out of range");
    if (!std::is_sorted(pa.begin(), pa.end()) || std::adjacent_find(pa.begin(), pa.end()) != pa.end())
      throw InvalidArgument("parent sets must be sorted and duplicate-free");
  }
}

namespace {

constexpr double kLatentFloor = 1e-14;

/// Index tables shared by every projection for one (target layout, family).
struct Layout {
  std::size_t n = 0, nx = 0, nz = 0, m = 0;
  std::vector<std::size_t> cards;
  std::vector<std::size_t> pa_count;
  std::vector<std::vector<std::uint32_t>> pa_of_x;  // [i][x]
  std::vector<std::vector<std::uint32_t>> digit;    // [i][x or y]
  bool x_factorized = false;
  bool canonical_latent_order = false;

  Layout(const SystemJoint& sys, const SplitFamily& family) {
    family.validate(sys);
    n = sys.n();
    nx = sys.x_size();
    nz = nx * nx;
    m = family.latent_size;
    cards = sys.cards();
    x_factorized = family.x_factorized;
    digit.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      digit[i].resize(nx);
      for (std::size_t x = 0; x < nx; ++x) digit[i][x] = static_cast<std::uint32_t>(sys.node_digit(x, i));
    }
    pa_of_x.resize(n);
    pa_count.assign(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j : family.parent_of[i]) pa_count[i] *= cards[j];
      pa_of_x[i].resize(nx);
      for (std::size_t x = 0; x < nx; ++x) {
        std::size_t s = 0;
        for (std::size_t j : family.parent_of[i]) s = s * cards[j] + digit[j][x];
        pa_of_x[i][x] = static_cast<std::uint32_t>(s);
      }
    }
  }

  std::size_t kernel_index(std::size_t i, std::size_t x, std::size_t w, std::size_t y) const {
    return (pa_of_x[i][x] * m + w) * cards[i] + digit[i][y];
  }
};

struct Factors {
  std::vector<double> qx;
  std::vector<double> qw;
  std::vector<std::vector<double>> kernel;
};

// In canonical order the latent states are summed in ascending order, so
// relabelling W cannot change a single bit of any em iterate.
double latent_sum(const double* v, std::size_t m, std::vector<double>& scratch, bool canonical) {
  if (!canonical) {
    double t = 0.0;
    for (std::size_t w = 0; w < m; ++w) t += v[w];
    return t;
  }
  scratch.assign(v, v + m);
  std::sort(scratch.begin(), scratch.end());
  double t = 0.0;
  for (double x : scratch) t += x;
  return t;
}

void normalize_rows(std::vector<double>& table, std::size_t width) {
  for (std::size_t r = 0; r * width < table.size(); ++r) {
    double t = 0.0;
    for (std::size_t k = 0; k < width; ++k) t += table[r * width + k];
    if (t > 0.0) {
      for (std::size_t k = 0; k < width; ++k) table[r * width + k] /= t;
    } else {
      for (std::size_t k = 0; k < width; ++k) table[r * width + k] = 1.0 / static_cast<double>(width);
    }
  }
}

void normalize_latent(std::vector<double>& qw, bool canonical) {
  std::vector<double> scratch;
  double t = latent_sum(qw.data(), qw.size(), scratch, canonical);
  for (double& v : qw) v /= t;
  bool floored = false;
  for (double& v : qw)
    if (v < kLatentFloor) {
      v = kLatentFloor;
      floored = true;
    }
  if (floored) {
    t = latent_sum(qw.data(), qw.size(), scratch, canonical);
    for (double& v : qw) v /= t;
  }
}

/// Visible X-factor from an X-marginal: either as is or as the product of
/// its node marginals.
std::vector<double> x_factor(const Layout& L, const std::vector<double>& px) {
  if (!L.x_factorized) return px;
  std::vector<std::vector<double>> node(L.n);
  for (std::size_t i = 0; i < L.n; ++i) node[i].assign(L.cards[i], 0.0);
  for (std::size_t x = 0; x < L.nx; ++x)
    for (std::size_t i = 0; i < L.n; ++i) node[i][L.digit[i][x]] += px[x];
  std::vector<double> out(L.nx);
  for (std::size_t x = 0; x < L.nx; ++x) {
    double v = 1.0;
    for (std::size_t i = 0; i < L.n; ++i) v *= node[i][L.digit[i][x]];
    out[x] = v;
  }
  return out;
}

/// m-projection statistics from an extended weight table p[z * m + w].
Factors project_factors(const Layout& L, std::span<const double> p) {
  Factors f;
  std::vector<double> px(L.nx, 0.0);
  f.qw.assign(L.m, 0.0);
  f.kernel.resize(L.n);
  for (std::size_t i = 0; i < L.n; ++i) f.kernel[i].assign(L.pa_count[i] * L.m * L.cards[i], 0.0);
  std::vector<double> scratch;
  for (std::size_t x = 0; x < L.nx; ++x)
    for (std::size_t y = 0; y < L.nx; ++y) {
      const double* row = p.data() + (x * L.nx + y) * L.m;
      px[x] += latent_sum(row, L.m, scratch, L.canonical_latent_order);
      for (std::size_t w = 0; w < L.m; ++w) {
        const double v = row[w];
        f.qw[w] += v;
        for (std::size_t i = 0; i < L.n; ++i) f.kernel[i][L.kernel_index(i, x, w, y)] += v;
      }
    }
  const double total = std::accumulate(px.begin(), px.end(), 0.0);
  for (double& v : px) v /= total;
  f.qx = x_factor(L, px);
  normalize_latent(f.qw, L.canonical_latent_order);
  for (std::size_t i = 0; i < L.n; ++i) normalize_rows(f.kernel[i], L.cards[i]);
  return f;
}

void compose(const Layout& L, const Factors& f, std::vector<double>& joint, std::vector<double>& visible) {
  joint.resize(L.nz * L.m);
  visible.assign(L.nz, 0.0);
  std::vector<double> scratch;
  for (std::size_t x = 0; x < L.nx; ++x)
    for (std::size_t y = 0; y < L.nx; ++y) {
      const std::size_t z = x * L.nx + y;
      double* row = joint.data() + z * L.m;
      for (std::size_t w = 0; w < L.m; ++w) {
        double v = f.qx[x] * f.qw[w];
        for (std::size_t i = 0; i < L.n; ++i) v *= f.kernel[i][L.kernel_index(i, x, w, y)];
        row[w] = v;
      }
      visible[z] = latent_sum(row, L.m, scratch, L.canonical_latent_order);
    }
}

void check_extended(const Distribution& ext, const Layout& L) {
  if (ext.size() != L.nz * L.m) throw InvalidArgument("extended distribution does not match target and latent size");
}

ProductSpace extended_space(const SystemJoint& target, std::size_t m) { return target.space().with_latent(m); }

}  // namespace

SystemJoint visible_marginal(const Distribution& ext) {
  const auto latent = ext.space().latent_axis();
  if (!latent || *latent != ext.space().rank() - 1) throw InvalidArgument("extended joint needs a trailing latent axis");
  AxisSet visible(ext.space().rank() - 1);
  std::iota(visible.begin(), visible.end(), 0);
  return SystemJoint(marginalize(ext, visible));
}

Distribution e_projection(const Distribution& q_ext, const SystemJoint& target) {
  const auto latent = q_ext.space().latent_axis();
  if (!latent || *latent != q_ext.space().rank() - 1) throw InvalidArgument("e_projection: missing trailing latent axis");
  const std::size_t m = q_ext.space().card(*latent);
  if (!(q_ext.space() == target.space().with_latent(m, q_ext.space().axis(*latent).label)))
    throw InvalidArgument("e_projection: spaces are incompatible");
  const std::size_t nz = target.dist().size();
  std::vector<double> out(q_ext.size());
  for (std::size_t z = 0; z < nz; ++z) {
    double qz = 0.0;
    for (std::size_t w = 0; w < m; ++w) qz += q_ext[z * m + w];
    for (std::size_t w = 0; w < m; ++w) out[z * m + w] = target.dist()[z] * q_ext[z * m + w] / qz;
  }
  return Distribution::normalized(q_ext.space(), std::move(out));
}

Distribution m_projection(const Distribution& p_ext, const SplitFamily& family) {
  const SystemJoint visible = visible_marginal(p_ext);
  const Layout L(visible, family);
  check_extended(p_ext, L);
  const Factors f = project_factors(L, p_ext.probs());
  std::vector<double> joint, vis;
  compose(L, f, joint, vis);
  return Distribution::normalized(p_ext.space(), std::move(joint));
}

EmResult em_run(const SystemJoint& target, const SplitFamily& family, const Distribution& start,
                const EmConfig& config) {
  if (!(config.tolerance > 0.0)) throw InvalidArgument("em tolerance must be positive");
  Layout L(target, family);
  L.canonical_latent_order = config.canonical_latent_order;
  check_extended(start, L);
  const auto ptilde = target.dist().probs();

  Factors f = project_factors(L, start.probs());
  std::vector<double> joint, visible;
  compose(L, f, joint, visible);

  EmResult result{0.0, Distribution::uniform(start.space()), {}};
  EmTrace& trace = result.trace;
  double current = kl_divergence(ptilde, visible);
  trace.divergences.push_back(current);

  std::vector<double> stats(joint.size());
  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    // e-projection: P~(z) Q(w | z)
    for (std::size_t z = 0; z < L.nz; ++z) {
      const double scale = ptilde[z] / visible[z];
      for (std::size_t w = 0; w < L.m; ++w) stats[z * L.m + w] = joint[z * L.m + w] * scale;
    }
    // m-projection onto the family
    f = project_factors(L, stats);
    compose(L, f, joint, visible);
    const double next = kl_divergence(ptilde, visible);
    trace.divergences.push_back(next);
    trace.iterations_used = it;
    const double decrease = current - next;
    current = next;
    if (decrease < config.tolerance) {
      trace.converged = true;
      break;
    }
  }
  trace.w_marginal = f.qw;
  result.minimizer = Distribution::normalized(start.space(), std::move(joint));
  result.divergence = kl_divergence(ptilde, visible);
  return result;
}

Distribution random_start(const SystemJoint& target, const SplitFamily& family, Rng& rng) {
  const Layout L(target, family);
  Factors f;
  if (L.x_factorized) {
    std::vector<std::vector<double>> node(L.n);
    for (std::size_t i = 0; i < L.n; ++i) {
      node[i].resize(L.cards[i]);
      rng.simplex(node[i]);
    }
    f.qx.assign(L.nx, 1.0);
    for (std::size_t x = 0; x < L.nx; ++x)
      for (std::size_t i = 0; i < L.n; ++i) f.qx[x] *= node[i][L.digit[i][x]];
  } else {
    f.qx.resize(L.nx);
    rng.simplex(f.qx);
  }
  f.qw.resize(L.m);
  rng.simplex(f.qw);
  normalize_latent(f.qw, false);
  f.kernel.resize(L.n);
  for (std::size_t i = 0; i < L.n; ++i) {
    const std::size_t c = L.cards[i];
    f.kernel[i].resize(L.pa_count[i] * L.m * c);
    for (std::size_t r = 0; r < L.pa_count[i] * L.m; ++r)
      rng.simplex(std::span<double>(f.kernel[i]).subspan(r * c, c));
  }
  std::vector<double> joint, vis;
  compose(L, f, joint, vis);
  return Distribution::normalized(extended_space(target, L.m), std::move(joint));
}

Distribution independent_start(const SystemJoint& target, const SplitFamily& family) {
  const std::size_t m = family.latent_size;
  std::vector<double> p(target.dist().size() * m);
  for (std::size_t z = 0; z < target.dist().size(); ++z)
    for (std::size_t w = 0; w < m; ++w) p[z * m + w] = target.dist()[z] / static_cast<double>(m);
  return m_projection(Distribution::normalized(extended_space(target, m), std::move(p)), family);
}

std::optional<Distribution> mixture_start(const SystemJoint& target, const SplitFamily& family) {
  if (!family.is_standard()) return std::nullopt;
  const Layout L(target, family);
  const std::size_t last = L.n - 1;
  const std::size_t lead = L.nx / L.cards[last];  // states of Y1..Y(n-1)
  if (L.m < lead) return std::nullopt;
  constexpr double eps = 1e-9;

  const auto pt = target.dist().probs();
  std::vector<double> px(L.nx, 0.0), py(L.nx, 0.0);
  for (std::size_t x = 0; x < L.nx; ++x)
    for (std::size_t y = 0; y < L.nx; ++y) {
      px[x] += pt[x * L.nx + y];
      py[y] += pt[x * L.nx + y];
    }
  Factors f;
  f.qx = px;
  f.qw.assign(L.m, eps);
  for (std::size_t y = 0; y < L.nx; ++y) f.qw[y / L.cards[last]] += py[y];
  normalize_latent(f.qw, false);
  f.kernel.resize(L.n);
  // y = lead_index * |Yn| + yn, and lead_index enumerates (y1..y(n-1)) row-major,
  // so node i < n-1 of latent state w has digit L.digit[i][w * |Yn|].
  for (std::size_t i = 0; i < L.n; ++i) {
    const std::size_t c = L.cards[i];
    f.kernel[i].assign(L.pa_count[i] * L.m * c, 0.0);
    for (std::size_t xi = 0; xi < L.pa_count[i]; ++xi)
      for (std::size_t w = 0; w < L.m; ++w) {
        double* row = f.kernel[i].data() + (xi * L.m + w) * c;
        if (w >= lead) {
          for (std::size_t k = 0; k < c; ++k) row[k] = 1.0 / static_cast<double>(c);
        } else if (i < last) {
          const std::size_t target_digit = L.digit[i][w * L.cards[last]];
          for (std::size_t k = 0; k < c; ++k) row[k] = eps / static_cast<double>(c) + (k == target_digit ? 1.0 - eps : 0.0);
        } else {
          for (std::size_t k = 0; k < c; ++k) row[k] = py[w * c + k] + eps;
        }
      }
    normalize_rows(f.kernel[i], c);
  }
  std::vector<double> joint, vis;
  compose(L, f, joint, vis);
  return Distribution::normalized(extended_space(target, L.m), std::move(joint));
}

Distribution lift_latent(const Distribution& minimizer, const SplitFamily& family, double epsilon) {
  const auto latent = minimizer.space().latent_axis();
  if (!latent || *latent != minimizer.space().rank() - 1) throw InvalidArgument("lift_latent: missing trailing latent axis");
  const std::size_t m = minimizer.space().card(*latent);
  if (family.latent_size != m + 1) throw InvalidArgument("lift_latent: family must have one more latent state");
  const std::size_t nz = minimizer.size() / m;
  double last_mass = 0.0;
  for (std::size_t z = 0; z < nz; ++z) last_mass += minimizer[z * m + m - 1];
  const double moved = std::min(epsilon, last_mass / 2.0);
  const double keep = 1.0 - moved / last_mass;

  std::vector<Axis> axes(minimizer.space().axes().begin(), minimizer.space().axes().end());
  axes.back().card = m + 1;
  const ProductSpace lifted(std::move(axes));
  std::vector<double> p(nz * (m + 1));
  for (std::size_t z = 0; z < nz; ++z) {
    for (std::size_t w = 0; w + 1 < m; ++w) p[z * (m + 1) + w] = minimizer[z * m + w];
    const double v = minimizer[z * m + m - 1];
    p[z * (m + 1) + m - 1] = v * keep;
    p[z * (m + 1) + m] = v - v * keep;
  }
  return m_projection(Distribution::normalized(lifted, std::move(p)), family);
}

Distribution permute_latent(const Distribution& ext, std::span<const std::size_t> perm) {
  const auto latent = ext.space().latent_axis();
  if (!latent || *latent != ext.space().rank() - 1) throw InvalidArgument("permute_latent: missing trailing latent axis");
  const std::size_t m = ext.space().card(*latent);
  if (perm.size() != m) throw InvalidArgument("permute_latent: permutation size mismatch");
  std::vector<bool> seen(m, false);
  for (std::size_t k : perm) {
    if (k >= m || seen[k]) throw InvalidArgument("permute_latent: not a permutation");
    seen[k] = true;
  }
  std::vector<std::size_t> source(ext.size());
  for (std::size_t z = 0; z < ext.size() / m; ++z)
    for (std::size_t w = 0; w < m; ++w) source[z * m + w] = z * m + perm[w];
  return Distribution::reordered(ext, source);
}

CiiResult phi_CII(const SystemJoint& target, const SplitFamily& family, const EmConfig& config,
                  const Distribution* warm_start) {
  family.validate(target);
  if (config.restarts < 1) throw InvalidArgument("phi_CII needs at least one restart");

  CiiResult out{{}, Distribution::uniform(extended_space(target, family.latent_size)), {}, {}};
  double best = std::numeric_limits<double>::infinity();
  bool best_converged = false;

  auto consider = [&](const std::string& kind, std::size_t index, const Distribution& start) {
    EmResult r = em_run(target, family, start, config);
    out.starts.push_back({kind, index, r.divergence, r.trace.iterations_used, r.trace.converged, r.trace.w_marginal});
    if (r.divergence < best) {
      best = r.divergence;
      best_converged = r.trace.converged;
      out.best_extended = std::move(r.minimizer);
      out.best_trace = std::move(r.trace);
    }
  };

  for (std::size_t r = 0; r < config.restarts; ++r) {
    Rng rng(config.seed, r);
    consider("random", r, random_start(target, family, rng));
  }
  if (config.include_independent_start) consider("independent", 0, independent_start(target, family));
  if (config.include_mixture_start)
    if (auto s = mixture_start(target, family)) consider("mixture", 0, *s);
  if (warm_start != nullptr) consider("warm", 0, *warm_start);

  MeasureReport& rep = out.report;
  rep.name = "CII_w" + std::to_string(family.latent_size);
  rep.value = clamp_measure(best);
  rep.projection = visible_marginal(out.best_extended).dist();
  rep.converged = best_converged;
  double worst = 0.0;
  for (const auto& s : out.starts) worst = std::max(worst, s.divergence);
  rep.diagnostics["starts"] = static_cast<double>(out.starts.size());
  rep.diagnostics["latent_size"] = static_cast<double>(family.latent_size);
  rep.diagnostics["best_iterations"] = static_cast<double>(out.best_trace.iterations_used);
  rep.diagnostics["worst_divergence"] = worst;
  return out;
}

std::vector<CiiResult> phi_CII_sweep(const SystemJoint& target, const SplitFamily& family,
                                     std::span<const std::size_t> latent_sizes, const EmConfig& config,
                                     bool warm_starts) {
  std::vector<CiiResult> results;
  for (std::size_t k = 0; k < latent_sizes.size(); ++k) {
    const SplitFamily fam = family.with_latent_size(latent_sizes[k]);
    std::optional<Distribution> warm;
    if (warm_starts && k > 0 && latent_sizes[k] > latent_sizes[k - 1]) {
      Distribution lifted = results.back().best_extended;
      for (std::size_t m = latent_sizes[k - 1]; m < latent_sizes[k]; ++m)
        lifted = lift_latent(lifted, family.with_latent_size(m + 1));
      warm = std::move(lifted);
    }
    results.push_back(phi_CII(target, fam, config, warm ? &*warm : nullptr));
  }
  return results;
}

}  // namespace phi
