#include "normcrit/profiles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <tuple>

#include <Eigen/SparseLU>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>
#include <fmt/format.h>
#include <fmt/os.h>

#include "discrete.hpp"
#include "normcrit/errors.hpp"

namespace normcrit {

namespace odeint = boost::numeric::odeint;
using detail::FreeSpace;
using detail::Vec;

namespace {

using State = std::array<double, 2>;

enum class Shot { overshoot, undershoot };

struct Sample {
  double r, w, dw;
};

struct Trajectory {
  Shot outcome;
  std::vector<Sample> samples;
};

// w'' + 3 w'/r = w - w^{p-1}; overshoot when w crosses zero, undershoot when
// w turns back up (or never decays).
Trajectory shoot(double p, double b, double r_end) {
  const double r0 = 1e-4;
  const double c = (b - std::pow(b, p - 1.0)) / 8.0;
  State y{b + c * r0 * r0, 2.0 * c * r0};
  auto rhs = [p](const State& s, State& ds, double r) {
    ds[0] = s[1];
    ds[1] = -3.0 / r * s[1] + s[0] - detail::signed_pow(s[0], p);
  };
  auto stepper = odeint::make_dense_output(1e-12, 1e-12, odeint::runge_kutta_dopri5<State>());
  stepper.initialize(y, r0, 1e-4);
  Trajectory tr{Shot::undershoot, {}};
  tr.samples.push_back({0.0, b, 0.0});
  tr.samples.push_back({r0, y[0], y[1]});
  while (stepper.current_time() < r_end) {
    stepper.do_step(rhs);
    const State& s = stepper.current_state();
    const double r = stepper.current_time();
    if (s[0] < 0.0) {
      tr.outcome = Shot::overshoot;
      return tr;
    }
    if (s[1] > 0.0) return tr;
    tr.samples.push_back({r, s[0], s[1]});
  }
  return tr;
}

// Cubic Hermite through the recorded steps.
double hermite(const std::vector<Sample>& s, double r) {
  auto it = std::upper_bound(s.begin(), s.end(), r, [](double x, const Sample& a) { return x < a.r; });
  if (it == s.begin()) return s.front().w;
  if (it == s.end()) return s.back().w;
  const Sample& a = *(it - 1);
  const Sample& b = *it;
  const double h = b.r - a.r, t = (r - a.r) / h;
  const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
  const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
  return h00 * a.w + h10 * h * a.dw + h01 * b.w + h11 * h * b.dw;
}

struct ShootingResult {
  double center;
  std::vector<Sample> samples;
};

ShootingResult shooting(double p) {
  const double r_end = 80.0;
  double lo = 1.0, hi = 2.0;
  if (shoot(p, lo, r_end).outcome != Shot::undershoot)
    throw Error(ErrorKind::solver, fmt::format("shooting: b = 1 does not undershoot for p = {}", p));
  while (shoot(p, hi, r_end).outcome != Shot::overshoot) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e3) throw Error(ErrorKind::solver, fmt::format("shooting: no bracket in [1, 1e3] for p = {}", p));
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (shoot(p, mid, r_end).outcome == Shot::overshoot ? hi : lo) = mid;
  }
  Trajectory tr = shoot(p, lo, r_end);
  // keep the part that still tracks the decaying solution
  const double floor = 1e-6 * lo;
  std::size_t keep = tr.samples.size();
  for (std::size_t i = 0; i < tr.samples.size(); ++i)
    if (tr.samples[i].w < floor) {
      keep = i + 1;
      break;
    }
  keep = std::max<std::size_t>(keep, 2);
  tr.samples.resize(std::min(keep, tr.samples.size()));
  return {lo, std::move(tr.samples)};
}

RadialField initial_profile(const ShootingResult& sh, const GridPtr& grid) {
  const Sample& last = sh.samples.back();
  const double r_tail = last.r;
  const double tail_ref = std::cyl_bessel_k(1.0, r_tail) / r_tail;
  return RadialField::sample(grid, [&](double r) {
    if (r <= r_tail) return hermite(sh.samples, r);
    const double k = r < 700.0 ? std::cyl_bessel_k(1.0, r) / r : 0.0;
    return last.w * k / tail_ref;
  });
}

// Newton on K w + W(w - w^{p-1}) = 0.
Vec newton_profile(const FreeSpace& fs, Vec x, double p) {
  Eigen::SparseLU<detail::SpMat> lu;
  const double scale = std::sqrt(fs.mass_sq(x));
  double last = 1e300;
  for (int it = 0; it < 40; ++it) {
    Vec f = fs.K * x;
    Vec diag(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      f[i] += fs.w[i] * (x[i] - detail::signed_pow(x[i], p));
      diag[i] = fs.w[i] * (1.0 - (p - 1.0) * detail::abs_pow(x[i], p));
    }
    const double res = fs.dual_norm(f);
    // stop at the roundoff floor
    if (res <= 1e-13 * scale || (it > 1 && res > 0.5 * last)) break;
    last = res;
    detail::SpMat J = fs.K;
    J.diagonal() += diag;
    lu.compute(J);
    if (lu.info() != Eigen::Success) throw Error(ErrorKind::solver, "profile Newton: factorization failed");
    x -= lu.solve(f);
  }
  return x;
}

struct MemoKey {
  double p;
  std::size_t n;
  double r_max;
  Mapping mapping;
  double inner;
  auto tie() const { return std::tie(p, n, r_max, mapping, inner); }
  bool operator<(const MemoKey& o) const { return tie() < o.tie(); }
};

std::mutex& cache_mutex() {
  static std::mutex m;
  return m;
}

std::map<MemoKey, ScalarProfile>& memo() {
  static std::map<MemoKey, ScalarProfile> m;
  return m;
}

MemoKey key_of(double p, const RadialGrid& g) {
  return {p, g.size(), g.r_max(), g.mapping(), g.mapping() == Mapping::stretched ? g.inner_scale() : 0.0};
}

ScalarProfile finish_profile(double p, RadialField field, double shooting_center) {
  ScalarProfile prof;
  prof.p = p;
  prof.mass = std::sqrt(mass_sq(field));
  prof.lp = lq(field, p);
  prof.grad_sq = grad_sq(field);
  prof.center_value = field[0];
  prof.shooting_center = shooting_center;
  prof.field = std::move(field);
  prof.residual = profile_residual(prof.field, p);
  return prof;
}

ScalarProfile compute_profile(double p, const GridPtr& grid) {
  const ShootingResult sh = shooting(p);
  const FreeSpace fs(grid);
  Vec x = newton_profile(fs, fs.restrict(initial_profile(sh, grid)), p);
  ScalarProfile prof = finish_profile(p, fs.extend(x), sh.center);
  if (!(prof.residual <= 1e-7) || !(prof.center_value > 0.0))
    throw Error(ErrorKind::convergence,
                fmt::format("profile p = {}: residual {:.3e} above 1e-7", p, prof.residual));
  return prof;
}

std::string fmt_value(double x) { return fmt::format("{:g}", x); }

}  // namespace

double profile_residual(const RadialField& w, double p) {
  const RadialField lap = radial_laplacian(w);
  const auto wt = w.grid->weights();
  double res = 0.0;
  // the outer node carries the Dirichlet condition, not the equation
  for (std::size_t i = 0; i + 1 < wt.size(); ++i) {
    const double e = -lap[i] + w[i] - detail::signed_pow(w[i], p);
    res += wt[i] * e * e;
  }
  return std::sqrt(res / mass_sq(w));
}

GridPtr default_profile_grid() {
  static const GridPtr g = build_grid(20.0, 4096, Mapping::graded);
  return g;
}

ScalarProfile solve_scalar_profile(double p, GridPtr grid, CachePolicy cache) {
  if (!(p > 2.0 && p < 4.0)) throw Error(ErrorKind::contract, fmt::format("profile exponent {} outside (2, 4)", p));
  if (!grid) throw Error(ErrorKind::contract, "profile needs a grid");
  const MemoKey key = key_of(p, *grid);
  if (cache == CachePolicy::use) {
    {
      std::lock_guard lock(cache_mutex());
      if (auto it = memo().find(key); it != memo().end()) {
        ScalarProfile out = it->second;
        out.field.grid = grid;
        return out;
      }
    }
    if (auto loaded = load_cached_profile(p, grid)) {
      std::lock_guard lock(cache_mutex());
      memo().emplace(key, *loaded);
      return *loaded;
    }
  }
  ScalarProfile prof = compute_profile(p, grid);
  if (cache == CachePolicy::use) {
    try {
      store_profile(prof);
    } catch (const Error&) {
      // an unwritable cache only costs recomputation
    }
    std::lock_guard lock(cache_mutex());
    memo().emplace(key, prof);
  }
  return prof;
}

double gn_quotient(const RadialField& u, double p) {
  const double g = gamma_p(p);
  return std::pow(lq(u, p), 1.0 / p) /
         (std::pow(grad_sq(u), g / 2.0) * std::pow(mass_sq(u), (1.0 - g) / 2.0));
}

double gn_constant(const ScalarProfile& prof) {
  const double g = gamma_p(prof.p);
  return std::pow(prof.lp, 1.0 / prof.p) / (std::pow(prof.grad_sq, g / 2.0) * std::pow(prof.mass, 1.0 - g));
}

double bubble_value(double eps, double r) { return 2.0 * std::numbers::sqrt2 * eps / (eps * eps + r * r); }

RadialField bubble(double eps, GridPtr grid) {
  if (!(eps > 0.0)) throw Error(ErrorKind::contract, "bubble scale must be positive");
  if (grid->r()[3] >= eps)
    throw Error(ErrorKind::resolution,
                fmt::format("bubble scale {:.3g} below grid resolution (r[3] = {:.3g})", eps, grid->r()[3]));
  return RadialField::sample(std::move(grid), [eps](double r) { return bubble_value(eps, r); });
}

double sobolev_quotient(double eps, GridPtr grid) {
  const RadialField u = bubble(eps, std::move(grid));
  return grad_sq(u) / std::sqrt(lq(u, 4.0));
}

double sobolev_constant() {
  static const double S = sobolev_quotient(1.0, build_grid(1e4, 8192, Mapping::stretched, 1.0));
  return S;
}

RadialField cutoff_bubble(double eps, double r_in, double r_out, GridPtr grid) {
  if (!(r_in > 0.0 && r_in < r_out && r_out <= grid->r_max()))
    throw Error(ErrorKind::contract, "cutoff radii need 0 < r_in < r_out <= R");
  RadialField u = bubble(eps, grid);
  const auto r = grid->r();
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] <= r_in) continue;
    const double t = std::min(1.0, (r[i] - r_in) / (r_out - r_in));
    const double s = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    u.values[i] *= 1.0 - s;
  }
  return u;
}

bool beta_admissible(double mu1, double mu2, double beta) noexcept {
  if (!(beta > 0.0)) return false;
  if (beta >= std::min(mu1, mu2) && beta <= std::max(mu1, mu2)) return false;
  return true;
}

CoupledConstants coupled_constants(const ModelParams& prm) {
  if (!beta_admissible(prm.mu1, prm.mu2, prm.beta))
    throw Error(ErrorKind::admissibility,
                fmt::format("beta = {} lies in the excluded band [{}, {}] (or is not positive)", prm.beta,
                            std::min(prm.mu1, prm.mu2), std::max(prm.mu1, prm.mu2)));
  CoupledConstants c;
  const double den = prm.beta * prm.beta - prm.mu1 * prm.mu2;
  c.k1 = (prm.beta - prm.mu2) / den;
  c.k2 = (prm.beta - prm.mu1) / den;
  c.S = sobolev_constant();
  c.S_coupled = std::sqrt(c.k1 + c.k2) * c.S;
  return c;
}

double GeometryConstants::h(double rho) const {
  return 0.5 * rho * rho - D1 * std::pow(rho, 4) - (D2 + D3) * std::pow(rho, p * gamma_p);
}

namespace {

void fill_two_root(GeometryConstants& gc) {
  const double p = gc.p;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  gc.gamma1 = gc.gamma0 = gc.rho0 = nan;
  gc.geometry_available = false;
  if (!(p > 2.0 && p < 3.0)) return;
  const double Cp = std::pow(gc.C_p, p);
  const double S2 = gc.S_coupled * gc.S_coupled;
  gc.gamma1 = p / (2.0 * (4.0 - p) * Cp) * std::pow(2.0 * (3.0 - p) * S2 / (4.0 - p), 3.0 - p);
  gc.gamma0 = p / (2.0 * (p - 2.0) * (4.0 - p) * Cp) * std::pow((3.0 - p) * S2 / (4.0 - p), 3.0 - p);
  gc.rho0 = std::sqrt((3.0 - p) / (2.0 * (4.0 - p) * gc.D1));
  if (gc.T > gc.gamma1 * (1.0 + 1e-12)) return;
  gc.geometry_available = true;
  const double top = gc.h(gc.rho0);
  if (top <= 0.0) {
    gc.R0 = gc.R1 = gc.rho0;
    return;
  }
  boost::math::tools::eps_tolerance<double> tol(52);
  auto h = [&gc](double x) { return gc.h(x); };
  std::uintmax_t iters = 200;
  // h < 0 near 0: the rho^{2(p-2)} term dominates
  double lo = gc.rho0;
  while (h(lo) >= 0.0) lo *= 0.5;
  auto r0 = boost::math::tools::toms748_solve(h, lo, gc.rho0, h(lo), top, tol, iters);
  gc.R0 = 0.5 * (r0.first + r0.second);
  double hi = 2.0 * gc.rho0;
  while (h(hi) >= 0.0) hi *= 2.0;
  iters = 200;
  auto r1 = boost::math::tools::toms748_solve(h, gc.rho0, hi, top, h(hi), tol, iters);
  gc.R1 = 0.5 * (r1.first + r1.second);
}

}  // namespace

GeometryConstants geometry_constants(const ModelParams& prm, double C_p, double S_coupled) {
  prm.validate();
  GeometryConstants gc;
  gc.p = prm.p;
  gc.gamma_p = prm.gamma_p();
  gc.C_p = C_p;
  gc.S = sobolev_constant();
  if (beta_admissible(prm.mu1, prm.mu2, prm.beta)) {
    const double den = prm.beta * prm.beta - prm.mu1 * prm.mu2;
    gc.k1 = (prm.beta - prm.mu2) / den;
    gc.k2 = (prm.beta - prm.mu1) / den;
  }
  gc.S_coupled = S_coupled;
  gc.D1 = 1.0 / (4.0 * S_coupled * S_coupled);
  const double Cp = std::pow(C_p, prm.p);
  gc.D2 = prm.alpha1 / prm.p * Cp * std::pow(prm.a1, 4.0 - prm.p);
  gc.D3 = prm.alpha2 / prm.p * Cp * std::pow(prm.a2, 4.0 - prm.p);
  gc.T = prm.alpha1 * std::pow(prm.a1, 4.0 - prm.p) + prm.alpha2 * std::pow(prm.a2, 4.0 - prm.p);
  fill_two_root(gc);
  return gc;
}

GeometryConstants scalar_geometry(double p, double mu, double alpha, double a, double C_p) {
  GeometryConstants gc;
  gc.p = p;
  gc.gamma_p = gamma_p(p);
  gc.C_p = C_p;
  gc.S = sobolev_constant();
  gc.S_coupled = gc.S / std::sqrt(mu);
  gc.D1 = mu / (4.0 * gc.S * gc.S);
  gc.D2 = alpha / p * std::pow(C_p, p) * std::pow(a, 4.0 - p);
  gc.T = alpha * std::pow(a, 4.0 - p);
  fill_two_root(gc);
  return gc;
}

double scalar_closed_form_constant(double p, double alpha, double w_mass) {
  return std::abs(3.0 - p) / (4.0 - p) * std::pow(w_mass, (2.0 - p) / (3.0 - p)) * std::pow(alpha, 1.0 / (3.0 - p));
}

double scalar_closed_form_lambda(double p, double alpha, double a, double w_mass) {
  return std::pow(a * a / (w_mass * w_mass) * std::pow(alpha, 2.0 / (p - 2.0)), (p - 2.0) / (6.0 - 2.0 * p));
}

std::filesystem::path cache_directory() {
  if (const char* env = std::getenv("NORMCRIT_CACHE"); env && *env) return env;
  return "cache";
}

std::filesystem::path cache_file(double p, const RadialGrid& g) {
  return cache_directory() /
         fmt::format("wp_p{}_N{}_R{}.tsv", fmt_value(p), g.size(), fmt_value(g.r_max()));
}

namespace {

struct CacheHeader {
  double p = 0, r_max = 0, mass = 0, grad = 0, lp = 0, inner = 0, shooting = 0;
  std::size_t n = 0;
  std::string mapping;
};

std::optional<CacheHeader> read_header(std::istream& in) {
  std::string line;
  CacheHeader h;
  if (!std::getline(in, line) || line.rfind("# p N Rmax mass grad_sq lp", 0) != 0) return std::nullopt;
  if (!std::getline(in, line) || line.empty() || line[0] != '#') return std::nullopt;
  std::istringstream v(line.substr(1));
  if (!(v >> h.p >> h.n >> h.r_max >> h.mass >> h.grad >> h.lp)) return std::nullopt;
  if (!std::getline(in, line) || line.empty() || line[0] != '#') return std::nullopt;
  std::istringstream m(line.substr(1));
  std::string k1, k2;
  if (!(m >> k1 >> h.mapping >> k2 >> h.inner) || k1 != "mapping" || k2 != "inner_scale") return std::nullopt;
  std::string k3;
  if (!(m >> k3 >> h.shooting) || k3 != "shooting_center") return std::nullopt;
  return h;
}

}  // namespace

std::optional<ScalarProfile> load_cached_profile(double p, GridPtr grid) {
  const auto file = cache_file(p, *grid);
  std::ifstream in(file);
  if (!in) return std::nullopt;
  auto h = read_header(in);
  if (!h || h->p != p || h->n != grid->size() || h->r_max != grid->r_max() ||
      h->mapping != to_string(grid->mapping()) ||
      (grid->mapping() == Mapping::stretched && h->inner != grid->inner_scale()))
    return std::nullopt;
  std::string line;
  std::getline(in, line);  // column names
  std::vector<double> values;
  values.reserve(grid->size());
  const auto r = grid->r();
  double rr = 0, ww = 0;
  while (in >> rr >> ww) {
    const std::size_t i = values.size();
    if (i >= r.size() || std::abs(rr - r[i]) > 1e-12 * std::max(1.0, r[i])) return std::nullopt;
    values.push_back(ww);
  }
  if (values.size() != grid->size()) return std::nullopt;
  ScalarProfile prof = finish_profile(p, RadialField(grid, std::move(values)), h->shooting);
  if (!(prof.residual <= 1e-7)) return std::nullopt;
  return prof;
}

void store_profile(const ScalarProfile& prof) {
  std::lock_guard lock(cache_mutex());
  const auto& g = *prof.field.grid;
  const auto file = cache_file(prof.p, g);
  std::error_code ec;
  std::filesystem::create_directories(file.parent_path(), ec);
  const auto tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error(ErrorKind::io, fmt::format("cannot write {}", tmp));
    out << "# p N Rmax mass grad_sq lp\n";
    out << fmt::format("# {:.17g}\t{}\t{:.17g}\t{:.17g}\t{:.17g}\t{:.17g}\n", prof.p, g.size(), g.r_max(),
                       prof.mass, prof.grad_sq, prof.lp);
    out << fmt::format("# mapping {} inner_scale {:.17g} shooting_center {:.17g}\n", to_string(g.mapping()),
                       g.inner_scale(), prof.shooting_center);
    out << "r\tw\n";
    const auto r = g.r();
    for (std::size_t i = 0; i < r.size(); ++i) out << fmt::format("{:.17g}\t{:.17g}\n", r[i], prof.field[i]);
    if (!out) throw Error(ErrorKind::io, fmt::format("write failed for {}", tmp));
  }
  std::filesystem::rename(tmp, file, ec);
  if (ec) throw Error(ErrorKind::io, fmt::format("cannot move {} into place: {}", tmp, ec.message()));
}

std::vector<CacheEntry> list_cache() {
  std::vector<CacheEntry> out;
  std::error_code ec;
  const auto dir = cache_directory();
  if (!std::filesystem::is_directory(dir, ec)) return out;
  for (const auto& e : std::filesystem::directory_iterator(dir, ec)) {
    const auto name = e.path().filename().string();
    if (name.rfind("wp_p", 0) != 0 || e.path().extension() != ".tsv") continue;
    std::ifstream in(e.path());
    if (auto h = read_header(in)) out.push_back({e.path(), h->p, h->n, h->r_max, h->mapping, h->mass});
  }
  std::sort(out.begin(), out.end(), [](const CacheEntry& a, const CacheEntry& b) { return a.file < b.file; });
  return out;
}

std::size_t clear_cache() {
  std::size_t removed = 0;
  for (const auto& e : list_cache()) {
    std::error_code ec;
    if (std::filesystem::remove(e.file, ec)) ++removed;
  }
  std::lock_guard lock(cache_mutex());
  memo().clear();
  return removed;
}

}  // namespace normcrit
