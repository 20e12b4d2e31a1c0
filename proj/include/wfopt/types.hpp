#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "wfopt/errors.hpp"

namespace wfopt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Interval {
  double lower = 0.0;
  double upper = 1.0;
  double span() const { return upper - lower; }
};

// Box bounds plus an optional membership predicate carving an irregular
// region out of the box. `violation` optionally quantifies how far outside
// the region a point lies (0 when feasible); the penalty wrapper uses it.
struct DesignSpace {
  std::vector<Interval> bounds;
  std::function<bool(const VectorXd&)> feasible;           // empty => whole box
  std::function<double(const VectorXd&)> violation;        // empty => 0/1 indicator

  std::size_t dim() const { return bounds.size(); }

  bool is_feasible(const VectorXd& x) const {
    return feasible ? feasible(x) : true;
  }

  double violation_of(const VectorXd& x) const {
    if (violation) return violation(x);
    return is_feasible(x) ? 0.0 : 1.0;
  }

  VectorXd clip(VectorXd x) const {
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const auto& b = bounds[static_cast<std::size_t>(k)];
      x[k] = std::min(std::max(x[k], b.lower), b.upper);
    }
    return x;
  }

  void validate() const {
    if (bounds.empty()) throw InvalidArgument("design space has no dimensions");
    for (const auto& b : bounds)
      if (!(b.lower < b.upper)) throw InvalidArgument("design space requires lower < upper in every dimension");
  }
};

inline DesignSpace box_space(std::vector<Interval> bounds) {
  DesignSpace s;
  s.bounds = std::move(bounds);
  return s;
}

inline DesignSpace box_space(std::size_t dim, double lower, double upper) {
  return box_space(std::vector<Interval>(dim, Interval{lower, upper}));
}

enum class Provenance { InitialLhs, ExpandedLhs, Infill };

struct SampleBatch {
  MatrixXd points;  // n x d
  Provenance provenance = Provenance::InitialLhs;

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
};

// Evaluated samples backing the surrogate.
struct Dataset {
  MatrixXd X;  // n x d
  VectorXd y;  // n

  std::size_t size() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(X.cols()); }

  void append(const VectorXd& x, double value) {
    if (X.rows() == 0) {
      X.resize(1, x.size());
      X.row(0) = x.transpose();
      y.resize(1);
      y[0] = value;
      return;
    }
    if (x.size() != X.cols()) throw DimensionMismatch("dataset append: dimension mismatch");
    X.conservativeResize(X.rows() + 1, Eigen::NoChange);
    X.row(X.rows() - 1) = x.transpose();
    y.conservativeResize(y.size() + 1);
    y[y.size() - 1] = value;
  }
};

}  // namespace wfopt
