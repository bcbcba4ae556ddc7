#pragma once

// Dirichlet-reduced unknowns shared by the profile and pair solvers.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "normcrit/radial_grid.hpp"

namespace normcrit::detail {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

// Unknowns are nodes 1..N-2. Node 0 is rebuilt from nodes 1..3 and the
// outer node is pinned to zero.
struct FreeSpace {
  GridPtr grid;
  Vec w;
  SpMat K;  // grad_sq(u) = u^T K u

  explicit FreeSpace(GridPtr g);

  Eigen::Index size() const noexcept { return w.size(); }
  Vec restrict(const RadialField& u) const;
  RadialField extend(const Vec& x) const;

  double dot_w(const Vec& a, const Vec& b) const { return (w.array() * a.array() * b.array()).sum(); }
  double mass_sq(const Vec& a) const { return dot_w(a, a); }
  double grad_sq(const Vec& a) const { return a.dot(K * a); }
  double lq(const Vec& a, double q) const { return (w.array() * a.array().abs().pow(q)).sum(); }
  // sqrt(sum r_i^2 / w_i): the L2 size of a residual given in weak form
  double dual_norm(const Vec& r) const { return std::sqrt((r.array().square() / w.array()).sum()); }
};

// |x|^{q-2} x with the magnitude clamped away from zero.
double signed_pow(double x, double q);
// |x|^{q-2}, clamped the same way.
double abs_pow(double x, double q);

}  // namespace normcrit::detail
