#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace normcrit {

// Node placement. Nodes sit at r = map(i/(N-1)):
//   uniform    r = R xi
//   graded     r = R xi^2
//   stretched  r = l sinh(k xi), k = asinh(R/l); fine near the origin on
//              the inner scale l, geometric in the tail.
enum class Mapping { uniform, graded, stretched };

std::string_view to_string(Mapping m) noexcept;
Mapping mapping_from_string(std::string_view name);

inline constexpr double kSphereArea = 19.739208802178716;  // 2 pi^2

// Radial discretization of the ball of radius R in R^4.
//
// The quadratic form sum_f c_f (D u)_f^2 approximates the Dirichlet energy
// with a fourth-order staggered difference in the mapped coordinate. The
// value at the origin is not an unknown: it is rebuilt from nodes 1..3 by
// an even (in r) extrapolation, which keeps u'(0) = 0 built in.
class RadialGrid {
 public:
  RadialGrid(double r_max, std::size_t n, Mapping mapping = Mapping::uniform,
             double inner_scale = 1.0);

  std::size_t size() const noexcept { return r_.size(); }
  double r_max() const noexcept { return r_max_; }
  Mapping mapping() const noexcept { return mapping_; }
  double inner_scale() const noexcept { return inner_; }

  std::span<const double> r() const noexcept { return r_; }
  std::span<const double> weights() const noexcept { return w_; }

  // One difference stencil after the origin and ghost nodes are folded in.
  struct Face {
    std::array<std::size_t, 4> node{};
    std::array<double, 4> coef{};
    double weight = 0.0;
  };
  std::span<const Face> faces() const noexcept { return faces_; }

  // Extrapolation coefficients for u(0) from u[1..3].
  std::array<double, 3> origin_coefficients() const noexcept { return origin_; }

  double grad_sq(std::span<const double> u) const;
  // out[i] = d/du_i of grad_sq(u)/2 for i = 1..N-1; out[0] = 0.
  void apply_stiffness(std::span<const double> u, std::span<double> out) const;
  double origin_value(std::span<const double> u) const;
  // u''(0) from the even fit a + b r^2 + c r^4 through nodes 1..3.
  double origin_curvature(std::span<const double> u) const;

  // Same mapping on [0, factor R]; inner scale scales along.
  RadialGrid scaled(double factor) const;

  bool same_as(const RadialGrid& other) const noexcept;

 private:
  double r_max_;
  Mapping mapping_;
  double inner_;
  std::vector<double> r_;
  std::vector<double> w_;
  std::vector<Face> faces_;
  std::array<double, 3> origin_{};
};

using GridPtr = std::shared_ptr<const RadialGrid>;

GridPtr build_grid(double r_max, std::size_t n, Mapping mapping = Mapping::uniform,
                   double inner_scale = 1.0);

struct RadialField {
  GridPtr grid;
  std::vector<double> values;

  RadialField() = default;
  explicit RadialField(GridPtr g);
  RadialField(GridPtr g, std::vector<double> v);

  static RadialField sample(GridPtr g, const std::function<double(double)>& f);

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  std::span<const double> span() const noexcept { return values; }

  RadialField& operator*=(double c);
  RadialField& operator+=(const RadialField& o);
  RadialField& operator-=(const RadialField& o);
};

RadialField operator*(double c, RadialField u);
RadialField operator+(RadialField a, const RadialField& b);
RadialField operator-(RadialField a, const RadialField& b);

// Throws a contract error unless both fields live on the same grid.
void require_same_grid(const RadialField& a, const RadialField& b);

double mass_sq(const RadialField& u);
double grad_sq(const RadialField& u);
// sum_i w_i |u_i|^q
double lq(const RadialField& u, double q);
// int u^2 v^2
double cross(const RadialField& u, const RadialField& v);
// Weighted L2 inner product.
double inner(const RadialField& u, const RadialField& v);
// Gradient bilinear form.
double grad_inner(const RadialField& u, const RadialField& v);

struct NormReport {
  double mass_sq = 0.0;
  double grad_sq = 0.0;
  std::vector<std::pair<double, double>> lq;  // (q, ||u||_q^q)
  std::optional<double> cross;

  double lq_at(double q) const;
};

NormReport norms(const RadialField& u, const RadialField* v, std::span<const double> qs);

RadialField radial_laplacian(const RadialField& u);

// Monotone cubic interpolant of a field in r; even reflection across the
// origin and zero beyond R.
class FieldInterpolant {
 public:
  explicit FieldInterpolant(const RadialField& u);
  ~FieldInterpolant();
  FieldInterpolant(FieldInterpolant&&) noexcept;
  FieldInterpolant& operator=(FieldInterpolant&&) noexcept;

  double operator()(double r) const;
  double r_max() const noexcept { return r_max_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  double r_max_ = 0.0;
};

// s*u(r) = e^{2s} u(e^s r) on the same grid.
RadialField dilate(const RadialField& u, double s);

// amplitude * u(stretch * r) sampled on target.
RadialField resample(const RadialField& u, GridPtr target, double amplitude = 1.0,
                     double stretch = 1.0);

}  // namespace normcrit
