#include "discrete.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace normcrit::detail {

namespace {
constexpr double kClamp = 1e-300;
}

double signed_pow(double x, double q) {
  const double a = std::max(std::abs(x), kClamp);
  return std::copysign(std::pow(a, q - 1.0), x);
}

double abs_pow(double x, double q) { return std::pow(std::max(std::abs(x), kClamp), q - 2.0); }

FreeSpace::FreeSpace(GridPtr g) : grid(std::move(g)) {
  const auto n = static_cast<Eigen::Index>(grid->size()) - 2;
  const auto weights = grid->weights();
  w.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) w[i] = weights[static_cast<std::size_t>(i) + 1];

  const std::size_t outer = grid->size() - 1;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(grid->faces().size() * 16);
  for (const auto& f : grid->faces()) {
    for (std::size_t a = 0; a < 4; ++a) {
      if (f.coef[a] == 0.0 || f.node[a] == outer) continue;
      for (std::size_t b = 0; b < 4; ++b) {
        if (f.coef[b] == 0.0 || f.node[b] == outer) continue;
        trip.emplace_back(static_cast<Eigen::Index>(f.node[a]) - 1, static_cast<Eigen::Index>(f.node[b]) - 1,
                          f.weight * f.coef[a] * f.coef[b]);
      }
    }
  }
  K.resize(n, n);
  K.setFromTriplets(trip.begin(), trip.end());
  K.makeCompressed();
}

Vec FreeSpace::restrict(const RadialField& u) const {
  Vec x(size());
  for (Eigen::Index i = 0; i < size(); ++i) x[i] = u.values[static_cast<std::size_t>(i) + 1];
  return x;
}

RadialField FreeSpace::extend(const Vec& x) const {
  RadialField u(grid);
  for (Eigen::Index i = 0; i < size(); ++i) u.values[static_cast<std::size_t>(i) + 1] = x[i];
  u.values[0] = grid->origin_value(u.values);
  u.values.back() = 0.0;
  return u;
}

}  // namespace normcrit::detail
