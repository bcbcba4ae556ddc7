#include "normcrit/radial_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include <math.h>  // boost pchip calls isnan unqualified
#include <boost/math/interpolators/pchip.hpp>
#include <fmt/format.h>

#include "normcrit/errors.hpp"

namespace normcrit {

using std::numbers::pi;

std::string_view to_string(Mapping m) noexcept {
  switch (m) {
    case Mapping::uniform: return "uniform";
    case Mapping::graded: return "graded";
    case Mapping::stretched: return "stretched";
  }
  return "uniform";
}

Mapping mapping_from_string(std::string_view name) {
  if (name == "uniform") return Mapping::uniform;
  if (name == "graded") return Mapping::graded;
  if (name == "stretched") return Mapping::stretched;
  throw Error(ErrorKind::construction, fmt::format("unknown grid mapping '{}'", name));
}

namespace {

struct MapFn {
  Mapping kind;
  double R, ell, kappa;

  double operator()(double x) const {
    switch (kind) {
      case Mapping::uniform: return R * x;
      case Mapping::graded: return R * x * x;
      case Mapping::stretched: return ell * std::sinh(kappa * x);
    }
    return 0.0;
  }
  double deriv(double x) const {
    switch (kind) {
      case Mapping::uniform: return R;
      case Mapping::graded: return 2.0 * R * x;
      case Mapping::stretched: return ell * kappa * std::cosh(kappa * x);
    }
    return 0.0;
  }
};

}  // namespace

RadialGrid::RadialGrid(double r_max, std::size_t n, Mapping mapping, double inner_scale)
    : r_max_(r_max), mapping_(mapping), inner_(inner_scale) {
  if (!(r_max > 0.0) || !std::isfinite(r_max))
    throw Error(ErrorKind::construction, fmt::format("grid radius must be positive, got {}", r_max));
  if (n < 16)
    throw Error(ErrorKind::construction, fmt::format("grid needs at least 16 nodes, got {}", n));
  if (mapping == Mapping::stretched && !(inner_scale > 0.0 && std::isfinite(inner_scale)))
    throw Error(ErrorKind::construction, "stretched grid needs a positive inner scale");

  const MapFn map{mapping, r_max, inner_scale,
                  mapping == Mapping::stretched ? std::asinh(r_max / inner_scale) : 0.0};
  const double d = 1.0 / static_cast<double>(n - 1);

  r_.resize(n);
  w_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) * d;
    r_[i] = map(x);
    w_[i] = d * kSphereArea * std::pow(r_[i], 3) * map.deriv(x);
  }
  r_.front() = 0.0;
  r_.back() = r_max;
  w_.front() = 0.0;
  w_[n - 1] *= 3.0 / 8.0;
  w_[n - 2] *= 7.0 / 6.0;
  w_[n - 3] *= 23.0 / 24.0;
  double total = 0.0;
  for (double x : w_) total += x;
  const double volume = pi * pi * std::pow(r_max, 4) / 2.0;
  for (double& x : w_) x *= volume / total;

  // u(0) = sum_j e_j u_j, Lagrange in t = r^2 through nodes 1..3 at t = 0.
  const double t1 = r_[1] * r_[1], t2 = r_[2] * r_[2], t3 = r_[3] * r_[3];
  origin_ = {t2 * t3 / ((t2 - t1) * (t3 - t1)), t1 * t3 / ((t1 - t2) * (t3 - t2)),
             t1 * t2 / ((t1 - t3) * (t2 - t3))};

  static constexpr std::array<int, 4> offset{-1, 0, 1, 2};
  static constexpr std::array<double, 4> stencil{1.0 / 24, -27.0 / 24, 27.0 / 24, -1.0 / 24};
  static constexpr std::array<double, 4> ghost{4.0, -6.0, 4.0, -1.0};
  const long last = static_cast<long>(n) - 1;

  faces_.resize(n - 1);
  for (std::size_t f = 0; f + 1 < n; ++f) {
    std::vector<std::pair<std::size_t, double>> acc;
    auto add = [&acc](std::size_t node, double c) {
      for (auto& [k, v] : acc)
        if (k == node) {
          v += c;
          return;
        }
      acc.emplace_back(node, c);
    };
    for (std::size_t k = 0; k < 4; ++k) {
      const long j = static_cast<long>(f) + offset[k];
      const double c = stencil[k] / d;
      if (j < 0) {
        add(static_cast<std::size_t>(-j), c);
      } else if (j == 0) {
        for (std::size_t m = 0; m < 3; ++m) add(m + 1, c * origin_[m]);
      } else if (j > last) {
        for (std::size_t m = 0; m < 4; ++m) add(static_cast<std::size_t>(last) - m, c * ghost[m]);
      } else {
        add(static_cast<std::size_t>(j), c);
      }
    }
    Face& face = faces_[f];
    face.node.fill(1);
    face.coef.fill(0.0);
    for (std::size_t k = 0; k < acc.size(); ++k) {
      face.node[k] = acc[k].first;
      face.coef[k] = acc[k].second;
    }
    const double xf = (static_cast<double>(f) + 0.5) * d;
    face.weight = d * kSphereArea * std::pow(map(xf), 3) / map.deriv(xf);
  }
}

double RadialGrid::grad_sq(std::span<const double> u) const {
  double s = 0.0;
  for (const Face& f : faces_) {
    const double du = f.coef[0] * u[f.node[0]] + f.coef[1] * u[f.node[1]] +
                      f.coef[2] * u[f.node[2]] + f.coef[3] * u[f.node[3]];
    s += f.weight * du * du;
  }
  return s;
}

void RadialGrid::apply_stiffness(std::span<const double> u, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (const Face& f : faces_) {
    const double du = f.coef[0] * u[f.node[0]] + f.coef[1] * u[f.node[1]] +
                      f.coef[2] * u[f.node[2]] + f.coef[3] * u[f.node[3]];
    const double flux = f.weight * du;
    for (std::size_t k = 0; k < 4; ++k) out[f.node[k]] += flux * f.coef[k];
  }
}

double RadialGrid::origin_value(std::span<const double> u) const {
  return origin_[0] * u[1] + origin_[1] * u[2] + origin_[2] * u[3];
}

double RadialGrid::origin_curvature(std::span<const double> u) const {
  const std::array<double, 3> t{r_[1] * r_[1], r_[2] * r_[2], r_[3] * r_[3]};
  double b = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    const std::size_t k = (j + 1) % 3, m = (j + 2) % 3;
    b += u[j + 1] * (-t[k] - t[m]) / ((t[j] - t[k]) * (t[j] - t[m]));
  }
  return 2.0 * b;
}

RadialGrid RadialGrid::scaled(double factor) const {
  return RadialGrid(r_max_ * factor, size(), mapping_, inner_ * factor);
}

bool RadialGrid::same_as(const RadialGrid& o) const noexcept {
  return this == &o || (size() == o.size() && mapping_ == o.mapping_ && r_max_ == o.r_max_ &&
                        (mapping_ != Mapping::stretched || inner_ == o.inner_));
}

GridPtr build_grid(double r_max, std::size_t n, Mapping mapping, double inner_scale) {
  return std::make_shared<const RadialGrid>(r_max, n, mapping, inner_scale);
}

RadialField::RadialField(GridPtr g) : grid(std::move(g)) {
  if (!grid) throw Error(ErrorKind::contract, "field without grid");
  values.assign(grid->size(), 0.0);
}

RadialField::RadialField(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
  if (!grid) throw Error(ErrorKind::contract, "field without grid");
  if (values.size() != grid->size())
    throw Error(ErrorKind::contract,
                fmt::format("field has {} values for a {}-node grid", values.size(), grid->size()));
}

RadialField RadialField::sample(GridPtr g, const std::function<double(double)>& f) {
  RadialField out(std::move(g));
  const auto r = out.grid->r();
  for (std::size_t i = 0; i < r.size(); ++i) out.values[i] = f(r[i]);
  return out;
}

RadialField& RadialField::operator*=(double c) {
  for (double& x : values) x *= c;
  return *this;
}

RadialField& RadialField::operator+=(const RadialField& o) {
  require_same_grid(*this, o);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
  return *this;
}

RadialField& RadialField::operator-=(const RadialField& o) {
  require_same_grid(*this, o);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
  return *this;
}

RadialField operator*(double c, RadialField u) { return u *= c; }
RadialField operator+(RadialField a, const RadialField& b) { return a += b; }
RadialField operator-(RadialField a, const RadialField& b) { return a -= b; }

void require_same_grid(const RadialField& a, const RadialField& b) {
  if (!a.grid || !b.grid || !a.grid->same_as(*b.grid))
    throw Error(ErrorKind::contract, "fields live on different grids");
}

double mass_sq(const RadialField& u) { return inner(u, u); }

double grad_sq(const RadialField& u) { return u.grid->grad_sq(u.values); }

double lq(const RadialField& u, double q) {
  const auto w = u.grid->weights();
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * std::pow(std::abs(u.values[i]), q);
  return s;
}

double cross(const RadialField& u, const RadialField& v) {
  require_same_grid(u, v);
  const auto w = u.grid->weights();
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double uv = u.values[i] * v.values[i];
    s += w[i] * uv * uv;
  }
  return s;
}

double inner(const RadialField& u, const RadialField& v) {
  require_same_grid(u, v);
  const auto w = u.grid->weights();
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * u.values[i] * v.values[i];
  return s;
}

double grad_inner(const RadialField& u, const RadialField& v) {
  require_same_grid(u, v);
  std::vector<double> ku(u.size());
  u.grid->apply_stiffness(u.values, ku);
  double s = 0.0;
  for (std::size_t i = 0; i < ku.size(); ++i) s += ku[i] * v.values[i];
  return s;
}

double NormReport::lq_at(double q) const {
  for (const auto& [qq, val] : lq)
    if (qq == q) return val;
  throw Error(ErrorKind::contract, fmt::format("norm for q = {} was not requested", q));
}

NormReport norms(const RadialField& u, const RadialField* v, std::span<const double> qs) {
  NormReport rep;
  rep.mass_sq = mass_sq(u);
  rep.grad_sq = grad_sq(u);
  for (double q : qs) rep.lq.emplace_back(q, lq(u, q));
  if (v) rep.cross = cross(u, *v);
  return rep;
}

RadialField radial_laplacian(const RadialField& u) {
  const RadialGrid& g = *u.grid;
  const std::size_t n = g.size();
  const auto w = g.weights();
  const auto r = g.r();
  RadialField out(u.grid);
  std::vector<double> ku(n);
  g.apply_stiffness(u.values, ku);
  for (std::size_t i = 1; i + 1 < n; ++i) out.values[i] = -ku[i] / w[i];
  out.values[0] = 4.0 * g.origin_curvature(u.values);

  // One-sided cubic fit in r at the outer node: u'' + 3u'/r.
  const std::size_t m = n - 1;
  const std::array<double, 4> x{r[m], r[m - 1], r[m - 2], r[m - 3]};
  const std::array<double, 4> y{u.values[m], u.values[m - 1], u.values[m - 2], u.values[m - 3]};
  double d1 = 0.0, d2 = 0.0;
  for (std::size_t j = 0; j < 4; ++j) {
    double denom = 1.0;
    for (std::size_t k = 0; k < 4; ++k)
      if (k != j) denom *= x[j] - x[k];
    // derivatives of prod_{k != j} (X - x_k) at X = x[0]
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t a = 0; a < 4; ++a) {
      if (a == j) continue;
      double pa = 1.0;
      for (std::size_t k = 0; k < 4; ++k)
        if (k != j && k != a) pa *= x[0] - x[k];
      s1 += pa;
      for (std::size_t b = 0; b < 4; ++b) {
        if (b == j || b == a) continue;
        double pb = 1.0;
        for (std::size_t k = 0; k < 4; ++k)
          if (k != j && k != a && k != b) pb *= x[0] - x[k];
        s2 += pb;
      }
    }
    d1 += y[j] * s1 / denom;
    d2 += y[j] * s2 / denom;
  }
  out.values[m] = d2 + 3.0 * d1 / x[0];
  return out;
}

struct FieldInterpolant::Impl {
  boost::math::interpolators::pchip<std::vector<double>> spline;
};

FieldInterpolant::FieldInterpolant(const RadialField& u) {
  const auto r = u.grid->r();
  const std::size_t n = r.size();
  std::vector<double> x, y;
  x.reserve(n + 2);
  y.reserve(n + 2);
  x.push_back(-r[2]);
  y.push_back(u.values[2]);
  x.push_back(-r[1]);
  y.push_back(u.values[1]);
  for (std::size_t i = 0; i < n; ++i) {
    x.push_back(r[i]);
    y.push_back(u.values[i]);
  }
  r_max_ = r[n - 1];
  impl_ = std::make_unique<Impl>(Impl{{std::move(x), std::move(y)}});
}

FieldInterpolant::~FieldInterpolant() = default;
FieldInterpolant::FieldInterpolant(FieldInterpolant&&) noexcept = default;
FieldInterpolant& FieldInterpolant::operator=(FieldInterpolant&&) noexcept = default;

double FieldInterpolant::operator()(double r) const {
  r = std::abs(r);
  if (r > r_max_) return 0.0;
  return impl_->spline(r);
}

RadialField dilate(const RadialField& u, double s) {
  if (s == 0.0) return u;
  return resample(u, u.grid, std::exp(2.0 * s), std::exp(s));
}

RadialField resample(const RadialField& u, GridPtr target, double amplitude, double stretch) {
  if (!(stretch > 0.0) || !std::isfinite(stretch) || !std::isfinite(amplitude))
    throw Error(ErrorKind::contract, "resample needs a positive finite stretch");
  const auto r = target->r();
  const double reach = u.grid->r_max() / stretch;
  const auto inside = static_cast<std::size_t>(
      std::upper_bound(r.begin(), r.end(), reach) - r.begin());
  if (inside < 4)
    throw Error(ErrorKind::resolution,
                fmt::format("dilated support r <= {:.3g} covers only {} nodes", reach, inside));
  const FieldInterpolant f(u);
  RadialField out(std::move(target));
  for (std::size_t i = 0; i < r.size(); ++i) out.values[i] = amplitude * f(stretch * r[i]);
  return out;
}

}  // namespace normcrit
