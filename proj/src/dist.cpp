#include "phi/dist.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "phi/error.hpp"

namespace phi {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::Past: return "past";
    case Role::Present: return "present";
    case Role::Latent: return "latent";
  }
  return "latent";
}

Role role_from_string(std::string_view text) {
  if (text == "past") return Role::Past;
  if (text == "present") return Role::Present;
  if (text == "latent") return Role::Latent;
  throw ParseError("unknown axis role '" + std::string(text) + "'");
}

ProductSpace::ProductSpace(std::vector<Axis> axes) : axes_(std::move(axes)) {
  std::set<std::string> labels;
  std::size_t past = 0, present = 0;
  for (const Axis& a : axes_) {
    if (a.label.empty()) throw InvalidArgument("axis label must be nonempty");
    if (!labels.insert(a.label).second) throw InvalidArgument("duplicate axis label '" + a.label + "'");
    if (a.role == Role::Latent) {
      if (a.card < 1) throw InvalidArgument("latent axis '" + a.label + "' needs cardinality >= 1");
    } else if (a.card < 2) {
      throw InvalidArgument("axis '" + a.label + "' needs cardinality >= 2");
    }
    if (a.role == Role::Past) ++past;
    if (a.role == Role::Present) ++present;
  }
  if (past != present) throw InvalidArgument("number of past axes must equal number of present axes");

  strides_.assign(axes_.size(), 1);
  size_ = 1;
  for (std::size_t i = axes_.size(); i-- > 0;) {
    strides_[i] = size_;
    if (size_ > std::numeric_limits<std::size_t>::max() / axes_[i].card)
      throw InvalidArgument("product space too large to index");
    size_ *= axes_[i].card;
  }
}

ProductSpace ProductSpace::system(std::span<const std::size_t> cards) {
  if (cards.empty()) throw InvalidArgument("system needs at least one node");
  std::vector<Axis> axes;
  for (std::size_t i = 0; i < cards.size(); ++i)
    axes.push_back({"X" + std::to_string(i + 1), Role::Past, cards[i]});
  for (std::size_t i = 0; i < cards.size(); ++i)
    axes.push_back({"Y" + std::to_string(i + 1), Role::Present, cards[i]});
  return ProductSpace(std::move(axes));
}

ProductSpace ProductSpace::binary_system(std::size_t n) {
  std::vector<std::size_t> cards(n, 2);
  return system(cards);
}

ProductSpace ProductSpace::with_latent(std::size_t card, std::string label) const {
  std::vector<Axis> axes = axes_;
  axes.push_back({std::move(label), Role::Latent, card});
  return ProductSpace(std::move(axes));
}

AxisSet ProductSpace::with_role(Role role) const {
  AxisSet out;
  for (std::size_t i = 0; i < axes_.size(); ++i)
    if (axes_[i].role == role) out.push_back(i);
  return out;
}

std::optional<std::size_t> ProductSpace::latent_axis() const {
  for (std::size_t i = 0; i < axes_.size(); ++i)
    if (axes_[i].role == Role::Latent) return i;
  return std::nullopt;
}

std::size_t ProductSpace::find(std::string_view label) const {
  for (std::size_t i = 0; i < axes_.size(); ++i)
    if (axes_[i].label == label) return i;
  throw InvalidArgument("no axis labelled '" + std::string(label) + "'");
}

AxisSet ProductSpace::find_all(std::span<const std::string> labels) const {
  AxisSet out;
  for (const auto& l : labels) out.push_back(find(l));
  return normalize_axes(std::move(out), *this);
}

std::size_t ProductSpace::project(std::size_t index, const AxisSet& axes) const {
  std::size_t sub = 0;
  for (std::size_t a : axes) sub = sub * axes_[a].card + digit(index, a);
  return sub;
}

std::vector<std::size_t> ProductSpace::projection_map(const AxisSet& axes) const {
  std::vector<std::size_t> sub_stride(axes.size(), 1);
  for (std::size_t k = axes.size(); k-- > 1;) sub_stride[k - 1] = sub_stride[k] * axes_[axes[k]].card;
  std::vector<std::size_t> map(size_, 0);
  // Odometer over the joint index keeps this linear in the space size.
  std::vector<std::size_t> digits(axes_.size(), 0);
  std::vector<std::ptrdiff_t> weight(axes_.size(), 0);
  for (std::size_t k = 0; k < axes.size(); ++k) weight[axes[k]] = static_cast<std::ptrdiff_t>(sub_stride[k]);
  std::size_t current = 0;
  for (std::size_t idx = 0; idx < size_; ++idx) {
    map[idx] = current;
    for (std::size_t a = axes_.size(); a-- > 0;) {
      if (++digits[a] < axes_[a].card) {
        current += weight[a];
        break;
      }
      current -= weight[a] * static_cast<std::ptrdiff_t>(axes_[a].card - 1);
      digits[a] = 0;
    }
  }
  return map;
}

ProductSpace ProductSpace::subspace(const AxisSet& axes) const {
  std::vector<Axis> sub;
  for (std::size_t a : axes) sub.push_back(axes_.at(a));
  // A marginal may drop one side of the past/present pairing, so roles of a
  // generic sub-space are kept only when still balanced.
  std::size_t past = 0, present = 0;
  for (const Axis& a : sub) {
    past += a.role == Role::Past;
    present += a.role == Role::Present;
  }
  if (past != present)
    for (Axis& a : sub) a.role = Role::Latent;
  return ProductSpace(std::move(sub));
}

AxisSet normalize_axes(AxisSet axes, const ProductSpace& space) {
  std::sort(axes.begin(), axes.end());
  axes.erase(std::unique(axes.begin(), axes.end()), axes.end());
  for (std::size_t a : axes)
    if (a >= space.rank()) throw InvalidArgument("axis index out of range");
  return axes;
}

namespace {

bool disjoint(const AxisSet& a, const AxisSet& b) {
  AxisSet both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  return both.empty();
}

AxisSet unite(const AxisSet& a, const AxisSet& b) {
  AxisSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

double plogp_ratio(double p, double q) {
  if (p <= 0.0) return 0.0;
  if (q <= 0.0) return std::numeric_limits<double>::infinity();
  return p * std::log(p / q);
}

std::vector<double> marginal_vector(const Distribution& p, const AxisSet& keep) {
  const ProductSpace& s = p.space();
  std::size_t sub_size = 1;
  for (std::size_t a : keep) sub_size *= s.card(a);
  std::vector<double> out(sub_size, 0.0);
  if (keep.size() == s.rank()) {
    std::copy(p.probs().begin(), p.probs().end(), out.begin());
    return out;
  }
  const auto map = s.projection_map(keep);
  for (std::size_t i = 0; i < p.size(); ++i) out[map[i]] += p[i];
  return out;
}

}  // namespace

Distribution::Distribution(ProductSpace space, std::vector<double> probs, Floor floor)
    : space_(std::move(space)), probs_(std::move(probs)) {
  if (probs_.size() != space_.size())
    throw InvalidArgument("probability vector has " + std::to_string(probs_.size()) +
                          " entries, space has " + std::to_string(space_.size()));
  for (double v : probs_)
    if (!std::isfinite(v)) throw InvalidArgument("probabilities must be finite");
  if (floor == Floor::On) {
    for (double& v : probs_) v = std::max(v, kFloor);
    const double total = std::accumulate(probs_.begin(), probs_.end(), 0.0);
    for (double& v : probs_) v /= total;
    return;
  }
  for (double v : probs_)
    if (!(v > 0.0)) throw InvalidArgument("distribution must be strictly positive");
  const double total = std::accumulate(probs_.begin(), probs_.end(), 0.0);
  if (std::abs(total - 1.0) > kSumTolerance) throw InvalidArgument("probabilities must sum to 1");
}

Distribution Distribution::uniform(ProductSpace space) {
  const std::size_t n = space.size();
  return Distribution(std::move(space), std::vector<double>(n, 1.0 / static_cast<double>(n)), Unchecked{});
}

Distribution Distribution::normalized(ProductSpace space, std::vector<double> weights) {
  if (weights.size() != space.size()) throw InvalidArgument("weight vector does not match space");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("weights must be finite and non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw InvalidArgument("weights must not all vanish");
  for (double& w : weights) w /= total;
  return Distribution(std::move(space), std::move(weights), Unchecked{});
}

Distribution Distribution::reordered(const Distribution& p, std::span<const std::size_t> source) {
  if (source.size() != p.size()) throw InvalidArgument("reordered: index size mismatch");
  std::vector<bool> seen(p.size(), false);
  std::vector<double> probs(p.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (source[i] >= p.size() || seen[source[i]]) throw InvalidArgument("reordered: not a permutation");
    seen[source[i]] = true;
    probs[i] = p[source[i]];
  }
  return Distribution(p.space(), std::move(probs), Unchecked{});
}

Distribution marginalize(const Distribution& p, AxisSet keep) {
  if (keep.empty()) throw InvalidArgument("marginalize: keep set must be nonempty");
  keep = normalize_axes(std::move(keep), p.space());
  auto probs = marginal_vector(p, keep);
  return Distribution::normalized(p.space().subspace(keep), std::move(probs));
}

ConditionalKernel condition(const Distribution& p, AxisSet target, AxisSet given) {
  const ProductSpace& s = p.space();
  target = normalize_axes(std::move(target), s);
  given = normalize_axes(std::move(given), s);
  if (target.empty()) throw InvalidArgument("condition: target set must be nonempty");
  if (!disjoint(target, given)) throw InvalidArgument("condition: target and given overlap");

  ConditionalKernel k;
  k.source = s;
  k.given_axes = given;
  k.target_axes = target;
  for (std::size_t a : given) k.given_size *= s.card(a);
  for (std::size_t a : target) k.target_size *= s.card(a);
  k.table.assign(k.given_size * k.target_size, 0.0);

  const auto gmap = s.projection_map(given);
  const auto tmap = s.projection_map(target);
  std::vector<double> gmarg(k.given_size, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    k.table[gmap[i] * k.target_size + tmap[i]] += p[i];
    gmarg[gmap[i]] += p[i];
  }
  for (std::size_t g = 0; g < k.given_size; ++g) {
    if (!(gmarg[g] > 0.0)) throw DomainError("condition: zero marginal at a given state");
    for (std::size_t t = 0; t < k.target_size; ++t) k.table[g * k.target_size + t] /= gmarg[g];
  }
  return k;
}

Distribution recompose(const ConditionalKernel& kernel, const Distribution& given_marginal) {
  const AxisSet all = unite(kernel.given_axes, kernel.target_axes);
  const ProductSpace joint = kernel.source.subspace(all);
  if (kernel.given_axes.empty()) {
    if (given_marginal.size() != 1) throw InvalidArgument("recompose: expected trivial given marginal");
  } else if (given_marginal.size() != kernel.given_size) {
    throw InvalidArgument("recompose: given marginal does not match kernel");
  }
  AxisSet given_local, target_local;
  for (std::size_t k = 0; k < all.size(); ++k) {
    if (std::binary_search(kernel.given_axes.begin(), kernel.given_axes.end(), all[k]))
      given_local.push_back(k);
    else
      target_local.push_back(k);
  }
  std::vector<double> probs(joint.size());
  for (std::size_t i = 0; i < joint.size(); ++i) {
    const std::size_t g = joint.project(i, given_local);
    const std::size_t t = joint.project(i, target_local);
    const double pg = kernel.given_axes.empty() ? 1.0 : given_marginal[g];
    probs[i] = pg * kernel(g, t);
  }
  return Distribution::normalized(joint, std::move(probs));
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InvalidArgument("kl_divergence: size mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += plogp_ratio(p[i], q[i]);
  return std::max(d, 0.0);
}

double kl_divergence(const Distribution& p, const Distribution& q) {
  if (!(p.space() == q.space())) throw InvalidArgument("kl_divergence: spaces differ");
  return kl_divergence(p.probs(), q.probs());
}

double entropy(const Distribution& p) {
  double h = 0.0;
  for (double v : p.probs())
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

double entropy(const Distribution& p, AxisSet axes) {
  axes = normalize_axes(std::move(axes), p.space());
  if (axes.empty()) return 0.0;
  double h = 0.0;
  for (double v : marginal_vector(p, axes))
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

double conditional_entropy(const Distribution& p, AxisSet target, AxisSet given) {
  target = normalize_axes(std::move(target), p.space());
  given = normalize_axes(std::move(given), p.space());
  if (!disjoint(target, given)) throw InvalidArgument("conditional_entropy: target and given overlap");
  const AxisSet all = unite(target, given);
  if (all.empty()) return 0.0;
  // -Σ P(t,g) log P(t|g), summed directly rather than as a difference of entropies.
  const auto joint = marginal_vector(p, all);
  const ProductSpace js = p.space().subspace(all);
  AxisSet given_local;
  for (std::size_t k = 0; k < all.size(); ++k)
    if (std::binary_search(given.begin(), given.end(), all[k])) given_local.push_back(k);
  std::size_t gsize = 1;
  for (std::size_t a : given) gsize *= p.space().card(a);
  const auto gmap = js.projection_map(given_local);
  std::vector<double> gmarg(gsize, 0.0);
  for (std::size_t i = 0; i < joint.size(); ++i) gmarg[gmap[i]] += joint[i];
  double h = 0.0;
  for (std::size_t i = 0; i < joint.size(); ++i)
    if (joint[i] > 0.0) h -= joint[i] * std::log(joint[i] / gmarg[gmap[i]]);
  return std::max(h, 0.0);
}

Distribution product_of_marginals(const Distribution& p, AxisSet a, AxisSet b) {
  a = normalize_axes(std::move(a), p.space());
  b = normalize_axes(std::move(b), p.space());
  if (a.empty() || b.empty()) throw InvalidArgument("product_of_marginals: empty axis set");
  if (!disjoint(a, b)) throw InvalidArgument("product_of_marginals: axis sets overlap");
  const AxisSet all = unite(a, b);
  const ProductSpace js = p.space().subspace(all);
  const auto pa = marginal_vector(p, a);
  const auto pb = marginal_vector(p, b);
  AxisSet a_local, b_local;
  for (std::size_t k = 0; k < all.size(); ++k)
    (std::binary_search(a.begin(), a.end(), all[k]) ? a_local : b_local).push_back(k);
  const auto amap = js.projection_map(a_local);
  const auto bmap = js.projection_map(b_local);
  std::vector<double> probs(js.size());
  for (std::size_t i = 0; i < js.size(); ++i) probs[i] = pa[amap[i]] * pb[bmap[i]];
  return Distribution::normalized(js, std::move(probs));
}

double mutual_information(const Distribution& p, AxisSet a, AxisSet b) {
  a = normalize_axes(std::move(a), p.space());
  b = normalize_axes(std::move(b), p.space());
  if (!disjoint(a, b)) throw InvalidArgument("mutual_information: axis sets overlap");
  if (a.empty() || b.empty()) return 0.0;
  const AxisSet all = unite(a, b);
  const Distribution joint = all.size() == p.space().rank() ? p : marginalize(p, all);
  return kl_divergence(joint, product_of_marginals(p, a, b));
}

double conditional_mutual_information(const Distribution& p, AxisSet a, AxisSet b, AxisSet c) {
  const ProductSpace& s = p.space();
  a = normalize_axes(std::move(a), s);
  b = normalize_axes(std::move(b), s);
  c = normalize_axes(std::move(c), s);
  if (!disjoint(a, b) || !disjoint(a, c) || !disjoint(b, c))
    throw InvalidArgument("conditional_mutual_information: axis sets must be pairwise disjoint");
  if (a.empty() || b.empty()) return 0.0;
  if (c.empty()) return mutual_information(p, a, b);

  const AxisSet abc = unite(unite(a, b), c);
  const ProductSpace js = s.subspace(abc);
  const auto joint = marginal_vector(p, abc);
  auto local = [&](const AxisSet& set) {
    AxisSet out;
    for (std::size_t k = 0; k < abc.size(); ++k)
      if (std::binary_search(set.begin(), set.end(), abc[k])) out.push_back(k);
    return out;
  };
  const AxisSet ac = local(unite(a, c)), bc = local(unite(b, c)), cl = local(c);
  const auto acmap = js.projection_map(ac);
  const auto bcmap = js.projection_map(bc);
  const auto cmap = js.projection_map(cl);
  std::size_t acn = 0, bcn = 0, cn = 0;
  for (std::size_t i = 0; i < js.size(); ++i) {
    acn = std::max(acn, acmap[i] + 1);
    bcn = std::max(bcn, bcmap[i] + 1);
    cn = std::max(cn, cmap[i] + 1);
  }
  std::vector<double> pac(acn, 0.0), pbc(bcn, 0.0), pc(cn, 0.0);
  for (std::size_t i = 0; i < js.size(); ++i) {
    pac[acmap[i]] += joint[i];
    pbc[bcmap[i]] += joint[i];
    pc[cmap[i]] += joint[i];
  }
  double total = 0.0;
  for (std::size_t i = 0; i < js.size(); ++i) {
    const double v = joint[i];
    if (v <= 0.0) continue;
    total += v * std::log(v * pc[cmap[i]] / (pac[acmap[i]] * pbc[bcmap[i]]));
  }
  return std::max(total, 0.0);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view text) {
  const std::string owned(trim(text));
  char* end = nullptr;
  const double v = std::strtod(owned.c_str(), &end);
  if (owned.empty() || end != owned.c_str() + owned.size())
    throw ParseError("invalid number '" + owned + "'");
  return v;
}

}  // namespace

Distribution parse_distribution(std::string_view text, bool renormalize) {
  std::vector<Axis> axes;
  std::vector<double> probs;
  bool header = false;
  std::size_t line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    if (!header) {
      if (line.substr(0, 5) != "axes:") throw ParseError("expected 'axes:' header on line " + std::to_string(line_no));
      for (std::string_view item : split(line.substr(5), ',')) {
        const auto parts = split(item, ':');
        if (parts.size() != 3) throw ParseError("axis spec must be label:role:cardinality, got '" + std::string(item) + "'");
        std::size_t card = 0;
        const auto res = std::from_chars(parts[2].data(), parts[2].data() + parts[2].size(), card);
        if (res.ec != std::errc() || res.ptr != parts[2].data() + parts[2].size())
          throw ParseError("invalid cardinality '" + std::string(parts[2]) + "'");
        axes.push_back({std::string(parts[0]), role_from_string(parts[1]), card});
      }
      header = true;
      continue;
    }
    probs.push_back(parse_double(line));
  }
  if (!header) throw ParseError("missing 'axes:' header");
  ProductSpace space = [&] {
    try {
      return ProductSpace(std::move(axes));
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what());
    }
  }();
  if (probs.size() != space.size())
    throw ParseError("expected " + std::to_string(space.size()) + " probabilities, got " + std::to_string(probs.size()));
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (renormalize) return Distribution(std::move(space), std::move(probs), Distribution::Floor::On);
  if (std::abs(total - 1.0) > 1e-9) throw ParseError("probabilities sum to " + format_number(total) + ", not 1");
  for (double v : probs)
    if (!(v > 0.0)) throw ParseError("probabilities must be strictly positive (use renormalize to floor)");
  for (double& v : probs) v /= total;
  return Distribution(std::move(space), std::move(probs));
}

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string format_distribution(const Distribution& p) {
  std::string out = "axes: ";
  const auto axes = p.space().axes();
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (i) out += ',';
    out += axes[i].label;
    out += ':';
    out += to_string(axes[i].role);
    out += ':';
    out += std::to_string(axes[i].card);
  }
  out += '\n';
  for (double v : p.probs()) {
    out += format_number(v);
    out += '\n';
  }
  return out;
}

}  // namespace phi
