#include "mpedge/deformed_mp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "mpedge/errors.hpp"
#include "mpedge/quadrature.hpp"

namespace mpedge {

namespace {

template <class T>
T f_impl(T m, const PopulationSpectrum& pop, double d, double guard) {
  if (std::abs(m) < guard) throw PoleProximity("f(m) evaluated at m = 0");
  T acc = 0.0;
  for (const auto& a : pop.atoms()) {
    if (a.sigma == 0.0) continue;
    const T den = 1.0 + m * a.sigma;
    if (std::abs(den) < guard) throw PoleProximity("f(m) evaluated at a pole m = -1/sigma");
    acc += a.weight * a.sigma / den;
  }
  return -1.0 / m + acc / d;
}

template <class T>
T f_prime_impl(T m, const PopulationSpectrum& pop, double d, double guard) {
  if (std::abs(m) < guard) throw PoleProximity("f'(m) evaluated at m = 0");
  T acc = 0.0;
  for (const auto& a : pop.atoms()) {
    if (a.sigma == 0.0) continue;
    const T den = 1.0 + m * a.sigma;
    if (std::abs(den) < guard) throw PoleProximity("f'(m) evaluated at a pole m = -1/sigma");
    acc += a.weight * a.sigma * a.sigma / (den * den);
  }
  return 1.0 / (m * m) - acc / d;
}

// f and f' together without throwing; ok = false near a pole.
struct Eval {
  cplx f;
  cplx fp;
  bool ok = false;
};

Eval evaluate(cplx m, const PopulationSpectrum& pop, double d, double guard) {
  Eval e;
  if (!(std::abs(m) >= guard) || !std::isfinite(m.real()) || !std::isfinite(m.imag())) return e;
  cplx s1 = 0.0, s2 = 0.0;
  for (const auto& a : pop.atoms()) {
    if (a.sigma == 0.0) continue;
    const cplx den = 1.0 + m * a.sigma;
    if (std::abs(den) < guard) return e;
    const cplx t = a.sigma / den;
    s1 += a.weight * t;
    s2 += a.weight * t * t;
  }
  e.f = -1.0 / m + s1 / d;
  e.fp = 1.0 / (m * m) - s2 / d;
  e.ok = true;
  return e;
}

double rel_residual(cplx z, cplx f) { return std::abs(z - f) / std::max(1.0, std::abs(z)); }

cplx m1_from_m2(cplx z, cplx m2, double d) { return -(1.0 - d) / z + d * m2; }

StieltjesValue refine(cplx z, cplx m, const PopulationSpectrum& pop, double d,
                      const SolverOptions& opts) {
  const bool upper = z.imag() > 0.0;
  int iters = 0;
  Eval e = evaluate(m, pop, d, opts.pole_guard);
  if (!e.ok || (upper && m.imag() < 0.0)) {
    m = -1.0 / z;
    e = evaluate(m, pop, d, opts.pole_guard);
    if (!e.ok) throw NoConvergence("solve_m2c: no valid starting point", 0);
  }
  double res = rel_residual(z, e.f);

  // Damped fixed point m <- a g(m) + (1-a) m with g(m) = 1/(-z + d^{-1} ∫ x/(1+mx)).
  double alpha = 0.5;
  while (res > opts.newton_switch && iters < opts.max_iterations) {
    ++iters;
    const cplx g = 1.0 / (-z + (e.f + 1.0 / m));
    const cplx cand = alpha * g + (1.0 - alpha) * m;
    const Eval ec = evaluate(cand, pop, d, opts.pole_guard);
    const double rc = ec.ok ? rel_residual(z, ec.f) : std::numeric_limits<double>::infinity();
    if (!ec.ok || rc > res || (upper && cand.imag() < 0.0)) {
      alpha *= 0.5;
      if (alpha < 1e-10) break;
      continue;
    }
    m = cand;
    e = ec;
    res = rc;
  }

  // Newton polish with backtracking that keeps Im m >= 0.
  while (res > opts.tol && iters < opts.max_iterations) {
    ++iters;
    const cplx step = (e.f - z) / e.fp;
    bool accepted = false;
    double t = 1.0;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      const cplx cand = m - t * step;
      if (upper && cand.imag() < 0.0) continue;
      const Eval ec = evaluate(cand, pop, d, opts.pole_guard);
      if (!ec.ok) continue;
      const double rc = rel_residual(z, ec.f);
      if (rc < res) {
        m = cand;
        e = ec;
        res = rc;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }

  if (!(res <= opts.tol) || (upper && m.imag() < 0.0))
    throw NoConvergence("solve_m2c: residual " + std::to_string(res) + " above tolerance at z = (" +
                            std::to_string(z.real()) + ", " + std::to_string(z.imag()) + ")",
                        iters);
  return StieltjesValue{z, m, m1_from_m2(z, m, d), res, iters};
}

}  // namespace

double f_of_m(double m, const PopulationSpectrum& pop, AspectRatio d, double pole_guard) {
  return f_impl(m, pop, d.value(), pole_guard);
}
cplx f_of_m(cplx m, const PopulationSpectrum& pop, AspectRatio d, double pole_guard) {
  return f_impl(m, pop, d.value(), pole_guard);
}
double f_prime_of_m(double m, const PopulationSpectrum& pop, AspectRatio d, double pole_guard) {
  return f_prime_impl(m, pop, d.value(), pole_guard);
}
cplx f_prime_of_m(cplx m, const PopulationSpectrum& pop, AspectRatio d, double pole_guard) {
  return f_prime_impl(m, pop, d.value(), pole_guard);
}

namespace {

StieltjesValue ladder(cplx z, double eta_start, const PopulationSpectrum& pop, double dv,
                      const SolverOptions& opts) {
  if (z.imag() >= eta_start) return refine(z, -1.0 / z, pop, dv, opts);
  cplx m = -1.0 / cplx(z.real(), eta_start);
  int total = 0;
  for (double eta = eta_start;; eta *= opts.eta_ratio) {
    const bool last = eta * opts.eta_ratio <= z.imag();
    const double rung = last ? z.imag() : eta;
    StieltjesValue v = refine(cplx(z.real(), rung), m, pop, dv, opts);
    total += v.iterations;
    m = v.m2c;
    if (last) {
      v.iterations = total;
      return v;
    }
  }
}

}  // namespace

StieltjesValue solve_m2c(cplx z, const PopulationSpectrum& pop, AspectRatio d,
                         const SolverOptions& opts) {
  if (!(z.imag() > 0.0)) throw ValidationError("solve_m2c requires Im z > 0");
  const double dv = d.value();
  try {
    return ladder(z, opts.eta_direct, pop, dv, opts);
  } catch (const NoConvergence&) {
    // The damped map may stall at moderate η when d is small; start much higher,
    // where -1/z is already close to the root.
    const double high = 64.0 * std::max({1.0, std::abs(z), pop.sigma_max() / dv});
    return ladder(z, high, pop, dv, opts);
  }
}

StieltjesValue solve_m2c_from(cplx z, cplx warm, const PopulationSpectrum& pop, AspectRatio d,
                              const SolverOptions& opts) {
  if (!(z.imag() > 0.0)) throw ValidationError("solve_m2c requires Im z > 0");
  return refine(z, warm, pop, d.value(), opts);
}

std::vector<StieltjesValue> solve_m2c_column(double E, const std::vector<double>& etas,
                                             const PopulationSpectrum& pop, AspectRatio d,
                                             const SolverOptions& opts) {
  std::vector<StieltjesValue> out;
  out.reserve(etas.size());
  for (std::size_t k = 0; k < etas.size(); ++k) {
    if (k > 0 && !(etas[k] < etas[k - 1]))
      throw ValidationError("solve_m2c_column: etas must be strictly decreasing");
    const cplx z(E, etas[k]);
    out.push_back(k == 0 ? solve_m2c(z, pop, d, opts)
                         : solve_m2c_from(z, out.back().m2c, pop, d, opts));
  }
  return out;
}

double density_at(double E, const PopulationSpectrum& pop, AspectRatio d, double eta_floor,
                  const SolverOptions& opts) {
  if (!(eta_floor > 0.0)) throw ValidationError("density_at: eta_floor must be positive");
  if (E < 0.0) return 0.0;  // Q2 is positive semidefinite
  const auto col = solve_m2c_column(E, {2.0 * eta_floor, eta_floor}, pop, d, opts);
  const double rho = (2.0 * col[1].m2c.imag() - col[0].m2c.imag()) / M_PI;
  return std::max(0.0, rho);
}

// ---------------------------------------------------------------------------
// Support edges

namespace {

// Offsets from a pole, log-spaced on [lo, hi].
std::vector<double> log_offsets(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t k = 0; k < n; ++k)
    out[k] = std::exp(a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1));
  return out;
}

struct Segment {
  double lo, hi;           // may be infinite
  int sign_lo, sign_hi;    // expected sign of f' at the ends (0 = undetermined)
};

}  // namespace

SupportAtlas support_edges(const PopulationSpectrum& pop, AspectRatio d) {
  const double dv = d.value();
  auto fprime = [&](double m) { return f_prime_impl(m, pop, dv, 0.0); };
  auto f = [&](double m) { return f_impl(m, pop, dv, 0.0); };

  std::vector<double> poles;
  for (const auto& a : pop.atoms())
    if (a.sigma > 0.0) poles.push_back(-1.0 / a.sigma);
  std::sort(poles.begin(), poles.end());
  if (poles.empty()) throw ValidationError("support_edges: population has no nonzero variance");

  // Sign of f' at ±∞ is the sign of 1 - (nonzero mass)/d.
  const double infinity_coef = 1.0 - pop.nonzero_mass() / dv;
  const int inf_sign = std::abs(infinity_coef) < 1e-12 ? 0 : (infinity_coef > 0 ? 1 : -1);

  std::vector<Segment> segments;
  segments.push_back({-std::numeric_limits<double>::infinity(), poles.front(), inf_sign, -1});
  for (std::size_t k = 0; k + 1 < poles.size(); ++k) segments.push_back({poles[k], poles[k + 1], -1, -1});
  segments.push_back({poles.back(), 0.0, -1, 1});
  segments.push_back({0.0, std::numeric_limits<double>::infinity(), 1, inf_sign});

  const std::size_t n_points = 200 * (pop.atoms().size() + 2);
  std::vector<CriticalPoint> crit;

  for (const auto& seg : segments) {
    std::vector<double> grid;
    if (std::isinf(seg.lo)) {
      const double scale = std::max(1.0, std::abs(seg.hi));
      for (double off : log_offsets(1e-12 * scale, 1e12 * scale, n_points)) grid.push_back(seg.hi - off);
      std::reverse(grid.begin(), grid.end());
    } else if (std::isinf(seg.hi)) {
      const double scale = std::max(1.0, std::abs(seg.lo));
      for (double off : log_offsets(1e-12 * scale, 1e12 * scale, n_points)) grid.push_back(seg.lo + off);
    } else {
      const double len = seg.hi - seg.lo;
      const auto offs = log_offsets(1e-12 * len, 0.5 * len, n_points / 2);
      for (double off : offs) grid.push_back(seg.lo + off);
      for (auto it = offs.rbegin(); it != offs.rend(); ++it) grid.push_back(seg.hi - *it);
      grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    }

    std::vector<double> vals(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) vals[k] = fprime(grid[k]);

    auto sgn = [](double v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); };
    if ((seg.sign_lo != 0 && sgn(vals.front()) != seg.sign_lo) ||
        (seg.sign_hi != 0 && sgn(vals.back()) != seg.sign_hi))
      throw RootScanIncomplete("support_edges: f' sign at a segment end disagrees with its asymptotics");

    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
      if (sgn(vals[k]) == sgn(vals[k + 1]) || vals[k] == 0.0) continue;
      double a = grid[k], b = grid[k + 1];
      const int sa = sgn(vals[k]);
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        if (sgn(fprime(mid)) == sa) a = mid; else b = mid;
      }
      const double root = std::abs(fprime(a)) < std::abs(fprime(b)) ? a : b;
      // Rounding near a root can flip the sign twice across neighbouring grid points.
      if (!crit.empty() && std::abs(crit.back().m - root) <= 1e-9 * std::max(1.0, std::abs(root))) continue;
      crit.push_back({f(root), root});
    }
  }

  if (crit.empty()) throw RootScanIncomplete("support_edges: no critical points found");
  std::sort(crit.begin(), crit.end(),
            [](const CriticalPoint& x, const CriticalPoint& y) { return x.edge > y.edge; });

  SupportAtlas atlas;
  atlas.critical_points = crit;
  std::vector<SupportInterval> desc;
  for (std::size_t k = 0; k < crit.size(); k += 2) {
    if (k + 1 < crit.size()) {
      desc.push_back({crit[k + 1].edge, crit[k].edge});
    } else {
      desc.push_back({0.0, crit[k].edge});
      atlas.hard_edge_at_zero = true;
    }
  }
  std::reverse(desc.begin(), desc.end());
  for (const auto& iv : desc) {
    if (!atlas.intervals.empty() && iv.lo - atlas.intervals.back().hi < kIntervalMergeGap) {
      atlas.intervals.back().hi = iv.hi;
      atlas.merged = true;
    } else {
      atlas.intervals.push_back(iv);
    }
  }
  return atlas;
}

EdgeReport edge_report_unchecked(const PopulationSpectrum& pop, AspectRatio d, double tau) {
  const SupportAtlas atlas = support_edges(pop, d);
  const CriticalPoint& top = atlas.critical_points.front();
  const double sigma1 = pop.sigma_max();
  if (!(top.m > -1.0 / sigma1 && top.m < 0.0))
    throw NumericalError("edge_report: b1 outside (-1/sigma_1, 0)");

  EdgeReport r;
  r.lambda_r = atlas.intervals.back().hi;
  r.b1 = top.m;
  r.tau = tau;
  const double dv = d.value();
  double cube_sum = 0.0;
  r.margin_min = std::numeric_limits<double>::infinity();
  for (const auto& a : pop.atoms()) {
    const double t = a.sigma / (1.0 + r.b1 * a.sigma);
    cube_sum += a.weight * t * t * t;
    r.margin_min = std::min(r.margin_min, std::abs(1.0 + r.b1 * a.sigma));
  }
  const double inv_cube = cube_sum / dv - 1.0 / (r.b1 * r.b1 * r.b1);
  r.gamma0 = inv_cube > 0.0 ? std::cbrt(1.0 / inv_cube) : std::numeric_limits<double>::quiet_NaN();
  r.margin_sigma1 = std::abs(1.0 + r.b1 * sigma1);
  r.regular = r.margin_sigma1 >= tau && std::isfinite(r.gamma0) && r.gamma0 > 0.0;
  return r;
}

EdgeReport edge_report(const PopulationSpectrum& pop, AspectRatio d, double tau) {
  EdgeReport r = edge_report_unchecked(pop, d, tau);
  if (!r.regular)
    throw RegularityFailed("edge_report: |1 + b1 sigma_1| = " + std::to_string(r.margin_sigma1) +
                               " below tau = " + std::to_string(tau),
                           r.margin_sigma1);
  return r;
}

// ---------------------------------------------------------------------------
// Tail mass and classical locations

namespace {
constexpr int kTailPanels = 48;
constexpr int kTailOrder = 16;
}  // namespace

TailMass::TailMass(const PopulationSpectrum& pop, AspectRatio d, double eta_floor)
    : pop_(pop), d_(d), eta_floor_(eta_floor), atlas_(support_edges(pop, d)) {
  for (auto it = atlas_.intervals.rbegin(); it != atlas_.intervals.rend(); ++it) {
    Interval iv;
    iv.range = *it;
    const double h = M_PI / kTailPanels;
    for (int p = kTailPanels - 1; p >= 0; --p) {
      Panel pn{h * p, h * (p + 1), 0.0, 0.0};
      iv.panels.push_back(pn);
    }
    double acc = 0.0;
    for (auto& pn : iv.panels) {
      pn.mass = integrate_theta(iv, pn.theta_lo, pn.theta_hi);
      pn.mass_above = acc;
      acc += pn.mass;
    }
    iv.mass = acc;
    iv.mass_above = total_;
    total_ += acc;
    intervals_.push_back(std::move(iv));
  }
}

double TailMass::x_of(const Interval& iv, double theta) const {
  const double len = iv.range.hi - iv.range.lo;
  return iv.range.lo + 0.5 * len * (1.0 - std::cos(theta));
}

double TailMass::theta_of(const Interval& iv, double x) const {
  const double len = iv.range.hi - iv.range.lo;
  const double c = std::clamp(1.0 - 2.0 * (x - iv.range.lo) / len, -1.0, 1.0);
  return std::acos(c);
}

double TailMass::integrate_theta(const Interval& iv, double t0, double t1) const {
  if (t1 <= t0) return 0.0;
  const auto& rule = gauss_legendre(kTailOrder);
  const double half = 0.5 * (t1 - t0), mid = 0.5 * (t1 + t0);
  const double len = iv.range.hi - iv.range.lo;
  double acc = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double th = mid + half * rule.nodes[k];
    const double x = x_of(iv, th);
    acc += rule.weights[k] * density_at(x, pop_, d_, eta_floor_) * 0.5 * len * std::sin(th);
  }
  return acc * half;
}

double TailMass::operator()(double x) const {
  for (const auto& iv : intervals_) {
    if (x >= iv.range.hi) return iv.mass_above;
    if (x >= iv.range.lo) {
      const double th = theta_of(iv, x);
      for (const auto& pn : iv.panels) {
        if (th >= pn.theta_lo) return iv.mass_above + pn.mass_above + integrate_theta(iv, th, pn.theta_hi);
      }
      return iv.mass_above + iv.mass;
    }
  }
  return total_;
}

double TailMass::inverse(double mass) const {
  if (mass <= 0.0) return intervals_.front().range.hi;
  if (mass >= total_) return intervals_.back().range.lo;
  for (const auto& iv : intervals_) {
    if (mass > iv.mass_above + iv.mass) continue;
    const double local = mass - iv.mass_above;
    for (const auto& pn : iv.panels) {
      if (local > pn.mass_above + pn.mass) continue;
      // Tail mass is decreasing in theta within the panel; bisect.
      double lo = pn.theta_lo, hi = pn.theta_hi;
      for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double th = 0.5 * (lo + hi);
        const double m = pn.mass_above + integrate_theta(iv, th, pn.theta_hi);
        if (m > local) lo = th; else hi = th;
      }
      return x_of(iv, 0.5 * (lo + hi));
    }
    return iv.range.lo;
  }
  return intervals_.back().range.lo;
}

std::vector<double> classical_locations(const TailMass& tail, std::size_t N, std::size_t j_first,
                                        std::size_t j_last) {
  if (N == 0 || j_first == 0 || j_last < j_first)
    throw ValidationError("classical_locations: need N > 0 and 1 <= j_first <= j_last");
  std::vector<double> out;
  out.reserve(j_last - j_first + 1);
  const double lambda_r = tail.atlas().intervals.back().hi;
  for (std::size_t j = j_first; j <= j_last; ++j) {
    if (j == 1) {
      out.push_back(lambda_r);
      continue;
    }
    const double target = static_cast<double>(j - 1) / static_cast<double>(N);
    if (target >= tail.total()) {
      // Beyond the continuous part: the remaining mass sits in the atom at zero.
      out.push_back(0.0);
      continue;
    }
    out.push_back(tail.inverse(target));
  }
  return out;
}

std::vector<double> classical_locations(const PopulationSpectrum& pop, AspectRatio d, std::size_t N,
                                        std::size_t j_first, std::size_t j_last) {
  const TailMass tail(pop, d);
  return classical_locations(tail, N, j_first, j_last);
}

}  // namespace mpedge
