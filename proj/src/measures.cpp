#include "phi/measures.hpp"

#include <cmath>

#include "phi/error.hpp"

namespace phi {

SystemJoint::SystemJoint(Distribution dist) : dist_(std::move(dist)) {
  const ProductSpace& s = dist_.space();
  if (s.rank() < 2 || s.rank() % 2 != 0) throw InvalidArgument("system joint needs axes X1..Xn, Y1..Yn");
  const std::size_t n = s.rank() / 2;
  for (std::size_t i = 0; i < n; ++i) {
    if (s.axis(i).role != Role::Past || s.axis(n + i).role != Role::Present)
      throw InvalidArgument("system joint axes must be n past axes followed by n present axes");
    if (s.card(i) != s.card(n + i)) throw InvalidArgument("|Xi| must equal |Yi| for every node");
    cards_.push_back(s.card(i));
  }
  node_stride_.assign(n, 1);
  for (std::size_t i = n; i-- > 0;) {
    node_stride_[i] = x_size_;
    x_size_ *= cards_[i];
  }
}

AxisSet SystemJoint::past() const { return space().with_role(Role::Past); }
AxisSet SystemJoint::present() const { return space().with_role(Role::Present); }

double clamp_measure(double value) {
  if (value < 0.0 && value > -1e-12) return 0.0;
  return value;
}

MeasureReport phi_I(const SystemJoint& p) {
  MeasureReport r;
  r.name = "I";
  Distribution proj = product_of_marginals(p.dist(), p.past(), p.present());
  r.value = clamp_measure(kl_divergence(p.dist(), proj));
  r.projection = std::move(proj);
  return r;
}

Distribution project_SI(const SystemJoint& p) {
  const std::size_t nx = p.x_size(), n = p.n();
  const auto probs = p.dist().probs();
  std::vector<double> px(nx, 0.0);
  // pair[i][xi * card + yi] = P(xi, yi)
  std::vector<std::vector<double>> pair(n);
  for (std::size_t i = 0; i < n; ++i) pair[i].assign(p.cards()[i] * p.cards()[i], 0.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < nx; ++y) {
      const double v = probs[x * nx + y];
      px[x] += v;
      for (std::size_t i = 0; i < n; ++i)
        pair[i][p.node_digit(x, i) * p.cards()[i] + p.node_digit(y, i)] += v;
    }
  std::vector<std::vector<double>> cond(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = p.cards()[i];
    cond[i] = pair[i];
    for (std::size_t xi = 0; xi < c; ++xi) {
      double t = 0.0;
      for (std::size_t yi = 0; yi < c; ++yi) t += pair[i][xi * c + yi];
      for (std::size_t yi = 0; yi < c; ++yi) cond[i][xi * c + yi] /= t;
    }
  }
  std::vector<double> q(nx * nx);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < nx; ++y) {
      double v = px[x];
      for (std::size_t i = 0; i < n; ++i)
        v *= cond[i][p.node_digit(x, i) * p.cards()[i] + p.node_digit(y, i)];
      q[x * nx + y] = v;
    }
  return Distribution::normalized(p.space(), std::move(q));
}

MeasureReport phi_SI(const SystemJoint& p) {
  MeasureReport r;
  r.name = "SI";
  const AxisSet past = p.past(), present = p.present();
  double value = -conditional_entropy(p.dist(), present, past);
  for (std::size_t i = 0; i < p.n(); ++i) value += conditional_entropy(p.dist(), {p.n() + i}, {i});
  r.value = clamp_measure(value);
  r.projection = project_SI(p);
  return r;
}

double split_conditional_information(const SystemJoint& p) {
  const std::size_t n = p.n();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    AxisSet others;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) others.push_back(j);
    if (others.empty()) continue;
    total += conditional_mutual_information(p.dist(), {n + i}, others, {i});
  }
  return total;
}

MeasureReport phi_T(const Distribution& p_ext) {
  const ProductSpace& s = p_ext.space();
  const auto latent = s.latent_axis();
  if (!latent || *latent != s.rank() - 1)
    throw InvalidArgument("phi_T: extended joint needs a latent axis in last position");
  // Validates the visible part as a system layout.
  AxisSet visible;
  for (std::size_t a = 0; a + 1 < s.rank(); ++a) visible.push_back(a);
  const SystemJoint sys(marginalize(p_ext, visible));
  const std::size_t n = sys.n(), w = *latent;

  MeasureReport r;
  r.name = "T";
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    AxisSet others;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) others.push_back(j);
    if (others.empty()) continue;
    total += conditional_mutual_information(p_ext, {n + i}, others, {i, w});
  }
  r.value = clamp_measure(total);

  // Projection onto the split family: P(x) ∏ P(yi | xi, w) P(w).
  const std::size_t nx = sys.x_size(), m = s.card(w);
  const auto probs = p_ext.probs();
  std::vector<double> px(nx, 0.0), pw(m, 0.0);
  std::vector<std::vector<double>> kern(n);
  for (std::size_t i = 0; i < n; ++i) kern[i].assign(sys.cards()[i] * m * sys.cards()[i], 0.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < nx; ++y)
      for (std::size_t k = 0; k < m; ++k) {
        const double v = probs[(x * nx + y) * m + k];
        px[x] += v;
        pw[k] += v;
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t c = sys.cards()[i];
          kern[i][(sys.node_digit(x, i) * m + k) * c + sys.node_digit(y, i)] += v;
        }
      }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = sys.cards()[i];
    for (std::size_t row = 0; row < c * m; ++row) {
      double t = 0.0;
      for (std::size_t yi = 0; yi < c; ++yi) t += kern[i][row * c + yi];
      for (std::size_t yi = 0; yi < c; ++yi) kern[i][row * c + yi] /= t;
    }
  }
  std::vector<double> q(p_ext.size());
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < nx; ++y)
      for (std::size_t k = 0; k < m; ++k) {
        double v = px[x] * pw[k];
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t c = sys.cards()[i];
          v *= kern[i][(sys.node_digit(x, i) * m + k) * c + sys.node_digit(y, i)];
        }
        q[(x * nx + y) * m + k] = v;
      }
  r.projection = Distribution::normalized(s, std::move(q));
  return r;
}

}  // namespace phi
