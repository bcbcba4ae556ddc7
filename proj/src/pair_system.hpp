#pragma once

// Discrete constrained problem shared by the solvers. An iterate lives on a
// reference grid scaled by sigma: weights sigma^4 w, stiffness sigma^2 K,
// so dilations are exact bookkeeping on (x, sigma).

#include <array>
#include <memory>
#include <optional>

#include "discrete.hpp"
#include "normcrit/functionals.hpp"

namespace normcrit::detail {

struct Model {
  int components = 2;
  double p = 2.5;
  std::array<double, 2> mu{1.0, 1.0};
  std::array<double, 2> alpha{1.0, 1.0};
  std::array<double, 2> a{0.1, 0.1};
  double beta = 0.0;

  double gamma() const { return 2.0 * (p - 2.0) / p; }
  ModelParams params() const;
};

Model pair_model(const ModelParams& prm);
Model scalar_model(double p, double mu, double alpha, double a);

struct Iterate {
  std::shared_ptr<const FreeSpace> space;
  double sigma = 1.0;
  std::array<Vec, 2> x;

  Eigen::Index size() const { return space->size(); }
  double r_max() const { return sigma * space->grid->r_max(); }
};

struct Norms {
  std::array<double, 2> grad{}, mass{}, l4{}, lp{};
  double cross = 0.0;
};

// Everything the flows need at one iterate.
struct Eval {
  Norms n;
  Aggregates A;
  double energy = 0.0;
  double pohozaev = 0.0;
  std::array<double, 2> lambda{};
  std::array<Vec, 2> force;     // f_c(x)
  std::array<Vec, 2> residual;  // sigma^2 K x - sigma^4 w (f - lambda x)
  double res = 0.0;             // weighted L2 of the residual
  double rel = 0.0;             // res over the size of its terms
};

Norms norms_of(const Model& m, const Iterate& it);
Aggregates aggregates_of(const Model& m, const Norms& n);
Eval evaluate(const Model& m, const Iterate& it);

void normalize(const Model& m, Iterate& it);

// Dilate by t: x *= e^{2t}, sigma *= e^{-t}.
void dilate_by(const Model& m, Iterate& it, double t);

// Local stiffness of the force, d f_c / d x_c.
Vec stiffness(const Model& m, const Iterate& it, int c);

Iterate from_pair(const Model& m, const PairState& pair);
PairState to_pair(const Model& m, const Iterate& it);

// Move to a stretched grid of radius R with inner scale ell.
Iterate regrid(const Model& m, const Iterate& it, double R, double ell, std::size_t nodes);

// Radius where the first component drops to half its center value.
double half_max_radius(const Iterate& it);

// Bordered Newton on (x, lambda) with the mass constraints.
struct NewtonInfo {
  int iterations = 0;
  double rel = 0.0;
  bool ok = false;
};

NewtonInfo newton_polish(const Model& m, Iterate& it, int max_iter = 30);

}  // namespace normcrit::detail
