#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "phi/dist.hpp"

namespace phi {

/// Joint over X1..Xn, Y1..Yn (that axis order, |Xi| = |Yi|). The joint index
/// factors as x * |Y| + y, with x and y row-major over their nodes.
class SystemJoint {
 public:
  explicit SystemJoint(Distribution dist);

  const Distribution& dist() const { return dist_; }
  const ProductSpace& space() const { return dist_.space(); }
  std::size_t n() const { return cards_.size(); }
  const std::vector<std::size_t>& cards() const { return cards_; }
  std::size_t x_size() const { return x_size_; }
  std::size_t y_size() const { return x_size_; }
  AxisSet past() const;
  AxisSet present() const;
  /// Digit of node i within a row-major x (or y) index.
  std::size_t node_digit(std::size_t xy_index, std::size_t node) const {
    return (xy_index / node_stride_[node]) % cards_[node];
  }
  std::size_t node_stride(std::size_t node) const { return node_stride_[node]; }

 private:
  Distribution dist_;
  std::vector<std::size_t> cards_;
  std::vector<std::size_t> node_stride_;
  std::size_t x_size_ = 1;
};

struct MeasureReport {
  std::string name;
  double value = 0.0;
  std::optional<Distribution> projection;
  std::map<std::string, double> diagnostics;
  bool converged = true;
};

/// Values in (-1e-12, 0) are cancellation noise and report as 0.
double clamp_measure(double value);

MeasureReport phi_I(const SystemJoint& p);

/// P(x) ∏ P(yi | xi).
Distribution project_SI(const SystemJoint& p);

/// Σ H(Yi|Xi) − H(Y|X).
MeasureReport phi_SI(const SystemJoint& p);

/// Σi I(Yi ; X_{-i} | Xi, W) on an extended joint over X, Y, W (W last).
/// The attached projection is P(x) ∏ P(yi | xi, w) P(w).
MeasureReport phi_T(const Distribution& p_ext);

/// Σi I(Yi ; X_{-i} | Xi) on a system joint.
double split_conditional_information(const SystemJoint& p);

}  // namespace phi
