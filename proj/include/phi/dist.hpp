#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace phi {

enum class Role { Past, Present, Latent };

std::string_view to_string(Role role);
Role role_from_string(std::string_view text);

struct Axis {
  std::string label;
  Role role;
  std::size_t card;

  bool operator==(const Axis&) const = default;
};

/// Sorted list of axis positions within a ProductSpace.
using AxisSet = std::vector<std::size_t>;

/// Ordered list of labelled finite axes. States are enumerated row-major:
/// the last axis varies fastest.
class ProductSpace {
 public:
  ProductSpace() = default;
  explicit ProductSpace(std::vector<Axis> axes);

  /// X1..Xn, Y1..Yn with |Xi| = |Yi| = cards[i].
  static ProductSpace system(std::span<const std::size_t> cards);
  static ProductSpace binary_system(std::size_t n);

  /// Appends a latent axis (last position).
  ProductSpace with_latent(std::size_t card, std::string label = "W") const;

  std::size_t rank() const { return axes_.size(); }
  std::size_t size() const { return size_; }
  const Axis& axis(std::size_t i) const { return axes_.at(i); }
  std::span<const Axis> axes() const { return axes_; }
  std::size_t stride(std::size_t i) const { return strides_.at(i); }
  std::size_t card(std::size_t i) const { return axes_.at(i).card; }

  AxisSet with_role(Role role) const;
  std::optional<std::size_t> latent_axis() const;

  /// Position of the axis with this label; throws InvalidArgument if absent.
  std::size_t find(std::string_view label) const;
  AxisSet find_all(std::span<const std::string> labels) const;

  std::size_t digit(std::size_t index, std::size_t axis) const {
    return (index / strides_[axis]) % axes_[axis].card;
  }

  /// Row-major index of `index` projected onto the sorted axis subset.
  std::size_t project(std::size_t index, const AxisSet& axes) const;

  /// Map from every joint index to its index in the sub-space over `axes`.
  std::vector<std::size_t> projection_map(const AxisSet& axes) const;

  ProductSpace subspace(const AxisSet& axes) const;

  bool operator==(const ProductSpace& other) const { return axes_ == other.axes_; }

 private:
  std::vector<Axis> axes_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 1;
};

/// Sorts, deduplicates and range-checks an axis list.
AxisSet normalize_axes(AxisSet axes, const ProductSpace& space);

/// Probability vector over a ProductSpace. Immutable after construction.
class Distribution {
 public:
  /// Replaces entries below `kFloor` and renormalizes instead of rejecting.
  enum class Floor { Off, On };
  static constexpr double kFloor = 1e-12;
  static constexpr double kSumTolerance = 1e-12;

  /// Strict constructor: entries must be positive and sum to 1 within
  /// kSumTolerance (unless the floor mode is on).
  Distribution(ProductSpace space, std::vector<double> probs, Floor floor = Floor::Off);

  static Distribution uniform(ProductSpace space);

  /// Scales non-negative weights to sum to one. Zeros are kept.
  static Distribution normalized(ProductSpace space, std::vector<double> weights);

  /// Entry i of the result is entry `source[i]` of `p`. `source` must be a
  /// permutation; no renormalization, so the values are copied exactly.
  static Distribution reordered(const Distribution& p, std::span<const std::size_t> source);

  const ProductSpace& space() const { return space_; }
  std::span<const double> probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }

 private:
  struct Unchecked {};
  Distribution(ProductSpace space, std::vector<double> probs, Unchecked)
      : space_(std::move(space)), probs_(std::move(probs)) {}

  ProductSpace space_;
  std::vector<double> probs_;
};

/// Conditional distribution of target axes given given-axes, as a dense
/// table with one row per given state (row-major over the given sub-space).
struct ConditionalKernel {
  ProductSpace source;
  AxisSet given_axes;
  AxisSet target_axes;
  std::size_t given_size = 1;
  std::size_t target_size = 1;
  std::vector<double> table;

  double operator()(std::size_t given, std::size_t target) const {
    return table[given * target_size + target];
  }
  std::span<const double> row(std::size_t given) const {
    return std::span<const double>(table).subspan(given * target_size, target_size);
  }
};

Distribution marginalize(const Distribution& p, AxisSet keep);

ConditionalKernel condition(const Distribution& p, AxisSet target, AxisSet given);

/// Joint over given ∪ target (in source axis order) from a kernel and the
/// marginal over the given axes.
Distribution recompose(const ConditionalKernel& kernel, const Distribution& given_marginal);

/// D(P || Q) in nats. Returns +inf when Q vanishes where P does not.
double kl_divergence(const Distribution& p, const Distribution& q);
double kl_divergence(std::span<const double> p, std::span<const double> q);

double entropy(const Distribution& p);
double entropy(const Distribution& p, AxisSet axes);
double conditional_entropy(const Distribution& p, AxisSet target, AxisSet given);
double mutual_information(const Distribution& p, AxisSet a, AxisSet b);
double conditional_mutual_information(const Distribution& p, AxisSet a, AxisSet b, AxisSet c);

/// Product P(A) ⊗ P(B) over A ∪ B in source axis order.
Distribution product_of_marginals(const Distribution& p, AxisSet a, AxisSet b);

/// Text format: `axes: label:role:card,...` then one probability per line.
/// Input off normalization by more than 1e-9 is rejected unless
/// `renormalize` is set, which also floors non-positive entries.
Distribution parse_distribution(std::string_view text, bool renormalize = false);
std::string format_distribution(const Distribution& p);

/// 17 significant digits, the format used for every emitted number.
std::string format_number(double value);

}  // namespace phi
