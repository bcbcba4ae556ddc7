#include "pair_system.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/SparseLU>

#include "normcrit/errors.hpp"

namespace normcrit::detail {

ModelParams Model::params() const {
  ModelParams prm;
  prm.p = p;
  prm.mu1 = mu[0];
  prm.mu2 = mu[1];
  prm.alpha1 = alpha[0];
  prm.alpha2 = alpha[1];
  prm.beta = beta;
  prm.a1 = a[0];
  prm.a2 = components == 2 ? a[1] : 0.0;
  return prm;
}

Model pair_model(const ModelParams& prm) {
  Model m;
  m.components = 2;
  m.p = prm.p;
  m.mu = {prm.mu1, prm.mu2};
  m.alpha = {prm.alpha1, prm.alpha2};
  m.a = {prm.a1, prm.a2};
  m.beta = prm.beta;
  return m;
}

Model scalar_model(double p, double mu, double alpha, double a) {
  Model m;
  m.components = 1;
  m.p = p;
  m.mu = {mu, 0.0};
  m.alpha = {alpha, 0.0};
  m.a = {a, 0.0};
  m.beta = 0.0;
  return m;
}

Norms norms_of(const Model& m, const Iterate& it) {
  const FreeSpace& fs = *it.space;
  const double s2 = it.sigma * it.sigma, s4 = s2 * s2;
  Norms n;
  for (int c = 0; c < m.components; ++c) {
    const auto& x = it.x[c];
    const auto sq = x.array().square();
    n.grad[c] = s2 * fs.grad_sq(x);
    n.mass[c] = s4 * (fs.w.array() * sq).sum();
    n.l4[c] = s4 * (fs.w.array() * sq.square()).sum();
    n.lp[c] = s4 * (fs.w.array() * x.array().abs().pow(m.p)).sum();
  }
  if (m.components == 2)
    n.cross = s4 * (fs.w.array() * it.x[0].array().square() * it.x[1].array().square()).sum();
  return n;
}

Aggregates aggregates_of(const Model& m, const Norms& n) {
  return {n.grad[0] + n.grad[1], 0.25 * (m.mu[0] * n.l4[0] + m.mu[1] * n.l4[1] + 2.0 * m.beta * n.cross),
          m.alpha[0] / m.p * n.lp[0], m.alpha[1] / m.p * n.lp[1]};
}

Eval evaluate(const Model& m, const Iterate& it) {
  const FreeSpace& fs = *it.space;
  const double s2 = it.sigma * it.sigma, s4 = s2 * s2;
  Eval e;
  e.n = norms_of(m, it);
  e.A = aggregates_of(m, e.n);
  e.energy = 0.5 * e.A.A1 - e.A.A2 - e.A.A3 - e.A.A4;
  e.pohozaev = e.A.A1 - 4.0 * e.A.A2 - m.p * m.gamma() * (e.A.A3 + e.A.A4);
  double res2 = 0.0, scale_k = 0.0, scale_f = 0.0;
  const Vec W = s4 * fs.w;
  for (int c = 0; c < m.components; ++c) {
    const int o = 1 - c;
    const auto& x = it.x[c];
    Vec f = m.mu[c] * x.array().cube() + m.alpha[c] * x.array().abs().pow(m.p - 2.0) * x.array();
    if (m.components == 2) f.array() += m.beta * it.x[o].array().square() * x.array();
    e.lambda[c] = (m.mu[c] * e.n.l4[c] + m.alpha[c] * e.n.lp[c] + m.beta * e.n.cross - e.n.grad[c]) /
                  (m.a[c] * m.a[c]);
    const Vec Kx = s2 * (fs.K * x);
    e.residual[c] = Kx - (W.array() * (f.array() - e.lambda[c] * x.array())).matrix();
    res2 += (e.residual[c].array().square() / W.array()).sum();
    scale_k += (Kx.array().square() / W.array()).sum();
    scale_f += (W.array() * f.array().square()).sum();
    e.force[c] = std::move(f);
  }
  e.res = std::sqrt(res2);
  e.rel = e.res / std::max(std::sqrt(scale_k) + std::sqrt(scale_f), 1e-300);
  return e;
}

void normalize(const Model& m, Iterate& it) {
  const double s4 = std::pow(it.sigma, 4);
  for (int c = 0; c < m.components; ++c) {
    const double ms = s4 * it.space->mass_sq(it.x[c]);
    if (!(ms > 0.0)) throw Error(ErrorKind::solver, "component collapsed to zero");
    it.x[c] *= m.a[c] / std::sqrt(ms);
  }
}

void dilate_by(const Model& m, Iterate& it, double t) {
  const double amp = std::exp(2.0 * t);
  for (int c = 0; c < m.components; ++c) it.x[c] *= amp;
  it.sigma *= std::exp(-t);
}

Vec stiffness(const Model& m, const Iterate& it, int c) {
  const auto& x = it.x[c];
  Vec g = 3.0 * m.mu[c] * x.array().square() +
          (m.p - 1.0) * m.alpha[c] * x.array().abs().max(1e-300).pow(m.p - 2.0);
  if (m.components == 2) g.array() += m.beta * it.x[1 - c].array().square();
  return g;
}

Iterate from_pair(const Model& m, const PairState& pair) {
  Iterate it;
  it.space = std::make_shared<const FreeSpace>(pair.u.grid);
  it.x[0] = it.space->restrict(pair.u);
  it.x[1] = m.components == 2 ? it.space->restrict(pair.v) : Vec::Zero(it.size());
  normalize(m, it);
  return it;
}

PairState to_pair(const Model& m, const Iterate& it) {
  auto g = std::make_shared<const RadialGrid>(it.space->grid->scaled(it.sigma));
  RadialField u(g, it.space->extend(it.x[0]).values);
  RadialField v(g, m.components == 2 ? it.space->extend(it.x[1]).values : std::vector<double>(g->size(), 0.0));
  return {std::move(u), std::move(v), m.a[0], m.components == 2 ? m.a[1] : 0.0};
}

double half_max_radius(const Iterate& it) {
  const RadialField u = it.space->extend(it.x[0]);
  const double top = u.values[0];
  const auto r = it.space->grid->r();
  for (std::size_t i = 1; i < u.size(); ++i)
    if (u.values[i] < 0.5 * top) return it.sigma * r[i];
  return it.r_max();
}

Iterate regrid(const Model& m, const Iterate& it, double R, double ell, std::size_t nodes) {
  const PairState pair = to_pair(m, it);
  ell = std::clamp(ell, 1e-8 * R, 0.1 * R);
  auto g = build_grid(R, nodes, Mapping::stretched, ell);
  Iterate out;
  out.space = std::make_shared<const FreeSpace>(g);
  out.x[0] = out.space->restrict(resample(pair.u, g));
  out.x[1] = m.components == 2 ? out.space->restrict(resample(pair.v, g)) : Vec::Zero(out.size());
  normalize(m, out);
  return out;
}

namespace {

struct Residual {
  Vec F;
  double norm = 0.0;
};

Residual newton_residual(const Model& m, const Iterate& it, const std::array<double, 2>& lam) {
  const FreeSpace& fs = *it.space;
  const Eigen::Index n = fs.size();
  const int nc = m.components;
  const double s2 = it.sigma * it.sigma, s4 = s2 * s2;
  const Vec W = s4 * fs.w;
  Residual r;
  r.F.resize(nc * n + nc);
  double x2 = 0.0, scale = 0.0;
  for (int c = 0; c < nc; ++c) {
    const auto& x = it.x[c];
    Vec f = m.mu[c] * x.array().cube() + m.alpha[c] * x.array().abs().pow(m.p - 2.0) * x.array();
    if (nc == 2) f.array() += m.beta * it.x[1 - c].array().square() * x.array();
    const Vec Kx = s2 * (fs.K * x);
    const Vec Fc = Kx + (W.array() * (lam[c] * x.array() - f.array())).matrix();
    r.F.segment(c * n, n) = Fc;
    r.F[nc * n + c] = 0.5 * ((W.array() * x.array().square()).sum() - m.a[c] * m.a[c]);
    x2 += (Fc.array().square() / W.array()).sum();
    scale += std::sqrt((Kx.array().square() / W.array()).sum());
  }
  r.norm = std::sqrt(x2) / std::max(scale, 1e-300);
  for (int c = 0; c < nc; ++c) r.norm += std::abs(r.F[nc * n + c]) / (m.a[c] * m.a[c]);
  return r;
}

}  // namespace

NewtonInfo newton_polish(const Model& m, Iterate& it, int max_iter) {
  const FreeSpace& fs = *it.space;
  const Eigen::Index n = fs.size();
  const int nc = m.components;
  const Eigen::Index dim = nc * n + nc;
  Eval e = evaluate(m, it);
  std::array<double, 2> lam = e.lambda;
  Residual cur = newton_residual(m, it, lam);
  NewtonInfo info;
  Eigen::SparseLU<SpMat> lu;
  bool analyzed = false;
  double last = cur.norm;
  for (int k = 0; k < max_iter; ++k) {
    info.iterations = k;
    if (cur.norm < 1e-14) break;
    const double s2 = it.sigma * it.sigma, s4 = s2 * s2;
    const Vec W = s4 * fs.w;
    // Sparse block in interleaved order (u_i, v_i), bordered by the mass
    // gradients; the border is eliminated through a Schur complement.
    auto idx = [nc](Eigen::Index i, int c) { return nc * i + c; };
    const Eigen::Index nx = nc * n;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(fs.K.nonZeros()) * nc + 2 * n * nc);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(nx, nc);
    for (int c = 0; c < nc; ++c) {
      for (int col = 0; col < fs.K.outerSize(); ++col)
        for (SpMat::InnerIterator itk(fs.K, col); itk; ++itk)
          trip.emplace_back(idx(itk.row(), c), idx(itk.col(), c), s2 * itk.value());
      const Vec g = stiffness(m, it, c);
      for (Eigen::Index i = 0; i < n; ++i) {
        trip.emplace_back(idx(i, c), idx(i, c), W[i] * (lam[c] - g[i]));
        B(idx(i, c), c) = W[i] * it.x[c][i];
      }
    }
    if (nc == 2)
      for (Eigen::Index i = 0; i < n; ++i) {
        const double j = -2.0 * m.beta * W[i] * it.x[0][i] * it.x[1][i];
        trip.emplace_back(idx(i, 0), idx(i, 1), j);
        trip.emplace_back(idx(i, 1), idx(i, 0), j);
      }
    SpMat J(nx, nx);
    J.setFromTriplets(trip.begin(), trip.end());
    J.makeCompressed();
    if (!analyzed) {
      lu.analyzePattern(J);
      analyzed = true;
    }
    lu.factorize(J);
    if (lu.info() != Eigen::Success) break;
    Vec Fx(nx);
    for (int c = 0; c < nc; ++c)
      for (Eigen::Index i = 0; i < n; ++i) Fx[idx(i, c)] = cur.F[c * n + i];
    const Vec y = lu.solve(-Fx);
    const Eigen::MatrixXd Z = lu.solve(B);
    if (lu.info() != Eigen::Success || !y.allFinite() || !Z.allFinite()) break;
    const Eigen::MatrixXd S = B.transpose() * Z;
    Vec rhs = B.transpose() * y;
    for (int c = 0; c < nc; ++c) rhs[c] += cur.F[nc * n + c];
    const Vec dl = S.fullPivLu().solve(rhs);
    const Vec dxi = y - Z * dl;
    Vec d(dim);
    for (int c = 0; c < nc; ++c) {
      for (Eigen::Index i = 0; i < n; ++i) d[c * n + i] = dxi[idx(i, c)];
      d[nc * n + c] = dl[c];
    }
    if (!d.allFinite()) break;

    bool accepted = false;
    double theta = 1.0;
    for (int h = 0; h < 8; ++h, theta *= 0.5) {
      Iterate trial = it;
      std::array<double, 2> lt = lam;
      for (int c = 0; c < nc; ++c) {
        trial.x[c] += theta * d.segment(c * n, n);
        lt[c] += theta * d[nc * n + c];
      }
      Residual nr = newton_residual(m, trial, lt);
      if (nr.norm < cur.norm) {
        it = std::move(trial);
        lam = lt;
        last = cur.norm;
        cur = std::move(nr);
        accepted = true;
        break;
      }
    }
    info.iterations = k + 1;
    if (!accepted) break;
    if (k > 0 && cur.norm > 0.5 * last && cur.norm < 1e-9) break;
  }
  normalize(m, it);
  info.rel = evaluate(m, it).rel;
  info.ok = std::isfinite(info.rel);
  return info;
}

}  // namespace normcrit::detail
