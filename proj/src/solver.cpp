#include "qdde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace qdde {

namespace {

// h!/(h-s)!
double falling(int h, int s) {
  double r = 1.0;
  for (int i = 0; i < s; ++i) r *= static_cast<double>(h - i);
  return r;
}

double cross(cplx o, cplx a, cplx b) {
  return (a.real() - o.real()) * (b.imag() - o.imag()) - (a.imag() - o.imag()) * (b.real() - o.real());
}

bool in_convex_hull(cplx p, std::vector<cplx> pts) {
  if (pts.empty()) return true;
  auto less = [](cplx a, cplx b) { return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag()); };
  std::sort(pts.begin(), pts.end(), less);
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  double scale = 0;
  for (cplx v : pts) scale = std::max(scale, std::abs(v));
  const double eps = 1e-12 * std::max(1.0, scale * scale);
  if (pts.size() == 1) return std::abs(p - pts[0]) <= 1e-12 * std::max(1.0, scale);
  std::vector<cplx> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  if (hull.size() == 2) {
    // Collinear sample: the hull is a segment.
    cplx a = hull[0], b = hull[1];
    if (std::abs(cross(a, b, p)) > eps) return false;
    double tpar = std::real((p - a) * std::conj(b - a)) / std::norm(b - a);
    return tpar >= -1e-12 && tpar <= 1 + 1e-12;
  }
  for (std::size_t i = 0; i < hull.size(); ++i)
    if (cross(hull[i], hull[(i + 1) % hull.size()], p) < -eps) return false;
  return true;
}

double angle_dist(double a, double b) {
  double d = std::remainder(a - b, 2.0 * std::numbers::pi);
  return std::abs(d);
}

// min over a >= 0 of |1 + a e^{i phi}|.
double ray_floor(double phi) {
  double c = std::cos(phi);
  return c < 0 ? std::abs(std::sin(phi)) : 1.0;
}

Interval intersect(Interval a, Interval b) { return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)}; }

BivariateSeries crop_h(const BivariateSeries& F, int H) {
  BivariateSeries G(F.M(), H);
  for (int h = 0; h <= std::min(H, F.H()); ++h)
    for (int m = 0; m <= F.M(); ++m) G(m, h) = F(m, h);
  return G;
}

}  // namespace

void ProblemSpec::check_invariants() const {
  if (!(q.modulus > 1)) throw ProblemError("q.modulus", "|q| > 1 required");
  if (q.b && *q.b < 1) throw ProblemError("q.b", "b >= 1 required");
  if (S < 1) throw ProblemError("S", "S >= 1 required");
  if (r1 < 0) throw ProblemError("r1", "r1 >= 0 required");
  if (r2 < 1) throw ProblemError("r2", "r2 ≥ 1 required");
  if (q.r2 != r2) throw ProblemError("q", "angle resolution must use the problem's r2");
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& t = terms[i];
    std::string f = "terms[" + std::to_string(i) + "]";
    if (t.k < 0 || t.k >= S) throw ProblemError(f + ".k", "0 <= k <= S-1 required");
    if (t.m0 < 0) throw ProblemError(f + ".m0", "m0 >= 0 required");
    if (t.m1 < 0) throw ProblemError(f + ".m1", "m1 >= 0 required");
  }
  std::vector<int> seen(static_cast<std::size_t>(S), 0);
  for (const auto& d : initial) {
    if (d.j < 0 || d.j >= S) throw ProblemError("initial.j", "j out of range 0..S-1");
    if (++seen[static_cast<std::size_t>(d.j)] > 1) throw ProblemError("initial.j", "duplicate initial datum");
    for (cplx c : d.coeffs)
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
        throw ProblemError("initial.coeffs", "non-finite coefficient");
  }
  for (int j = 0; j < S; ++j)
    if (!seen[static_cast<std::size_t>(j)])
      throw ProblemError("initial", "missing initial datum for j = " + std::to_string(j));
  if (domain.lambda == cplx{}) throw ProblemError("domain.lambda", "lambda != 0 required");
  if (!(domain.delta > 0 && domain.delta < 1)) throw ProblemError("domain.delta", "0 < delta < 1 required");
  if (!(domain.r0 > 0)) throw ProblemError("domain.r0", "r0 > 0 required");
  if (!in_convex_hull(domain.lambda, domain.V_sample))
    throw ProblemError("domain.lambda", "lambda must lie in the convex hull of the V sample");
  for (cplx v : domain.V_sample)
    if (v == cplx{}) throw ProblemError("domain.V", "sample points must be non-zero");
  if (!(epsilon_sector > 0)) throw ProblemError("domain.epsilon_sector", "epsilon > 0 required");
  if (!T0.empty() && static_cast<int>(T0.size()) != S) throw ProblemError("T0", "one radius per j required");
  for (double t : T0)
    if (!(t > 0)) throw ProblemError("T0", "radii must be > 0");
  if (trunc.M < 0 || trunc.H < 0) throw ProblemError("truncation", "M, H >= 0 required");
  if (trunc.H < S) throw ProblemError("truncation.H", "H >= S required");
  if (trunc.l_min > 0 || trunc.l_max < 0) throw ProblemError("truncation", "l_min <= 0 <= l_max required");
  if (!(trunc.tail_tol > 0 && trunc.tail_tol < 1)) throw ProblemError("truncation.tail_tol", "0 < tail_tol < 1");
  // q^{M(M-1)/2} must stay representable in double precision.
  double expo = 0.5 * trunc.M * (trunc.M - 1.0) * q.log_modulus();
  if (expo > 700) throw ProblemError("truncation.M", "q^{M(M-1)/2} overflows double precision");
  if (fit.N < 1 || fit.N > trunc.M) throw ProblemError("fit.N", "1 <= N <= M required");
  if (fit.t_rays < 1 || fit.t_points < 1) throw ProblemError("fit", "t_rays, t_points >= 1 required");
}

double ProblemSpec::T0_of(int j) const { return T0.empty() ? 1.0 : T0[static_cast<std::size_t>(j)]; }

const InitialDatum& ProblemSpec::initial_for(int j) const {
  for (const auto& d : initial)
    if (d.j == j) return d;
  throw ProblemError("initial", "missing initial datum for j = " + std::to_string(j));
}

std::vector<cplx> initial_borel_coeffs(const ProblemSpec& p, int j) {
  const auto& d = p.initial_for(j);
  if (d.side == InitialDatum::Side::borel) return d.coeffs;
  std::vector<cplx> g(d.coeffs.size());
  for (std::size_t n = 0; n < g.size(); ++n) g[n] = unscale(d.coeffs[n], qpow_tri(p.q.value(), static_cast<long>(n)));
  return g;
}

std::vector<cplx> initial_t_coeffs(const ProblemSpec& p, int j) {
  const auto& d = p.initial_for(j);
  if (d.side == InitialDatum::Side::t) return d.coeffs;
  std::vector<cplx> f(d.coeffs.size());
  for (std::size_t n = 0; n < f.size(); ++n) f[n] = scale(d.coeffs[n], qpow_tri(p.q.value(), static_cast<long>(n)));
  return f;
}

std::vector<cplx> spiral_base_points(const ProblemSpec& p) {
  std::vector<cplx> pts{p.domain.lambda};
  for (cplx v : p.domain.V_sample)
    if (v != p.domain.lambda) pts.push_back(v);
  return pts;
}

GapResult spectral_gap(const ProblemSpec& p, const std::vector<cplx>& points, int h_max) {
  const double lq = p.q.log_modulus();
  const double th = p.q.angle();
  GapResult out;
  out.value = 1.0;  // the l -> -infinity limit of every branch
  for (cplx x : points) {
    const double lx = std::log(std::abs(x));
    const double ax = std::arg(x);
    auto value_at = [&](int l, int h) {
      double la = p.r1 * std::log(h + 1.0) + p.r2 * (lx + l * lq);
      if (la > 60) return std::exp(la) - 1.0;
      double phi = p.r2 * (ax + l * th);
      return std::abs(1.0 + std::polar(std::exp(la), phi));
    };
    // Finite search: beyond l_hi every value exceeds 1; below l_lo every
    // h <= h_max value is within 1e-17 of 1.
    int h_top = p.r1 == 0 ? 0 : h_max;
    int l_hi = static_cast<int>(std::ceil((std::log(2.0) / p.r2 - lx) / lq)) + 1;
    int l_lo = static_cast<int>(std::floor((std::log(1e-17) / p.r2 - lx - p.r1 * std::log(h_top + 1.0) / p.r2) / lq)) - 1;
    for (int l = l_lo; l <= l_hi; ++l)
      for (int h = 0; h <= h_top; ++h) out.value = std::min(out.value, value_at(l, h));
    if (p.r1 == 0) continue;
    // With r1 >= 1 the moduli (h+1)^{r1}|x q^l|^{r2} fill (0, inf) densely as
    // l -> -infinity, so each recurring angle class contributes its ray floor.
    int period = 0;
    if (p.q.b) {
      period = *p.q.b;
    } else {
      double turns = p.r2 * th / (2.0 * std::numbers::pi);
      for (int cand = 1; cand <= 64 && period == 0; ++cand)
        if (std::abs(cand * turns - std::round(cand * turns)) < 1e-12) period = cand;
    }
    if (period > 0) {
      for (int c = 0; c < period; ++c) out.value = std::min(out.value, ray_floor(p.r2 * (ax - c * th)));
    } else {
      out.approximate = true;
      for (int l = -4096; l <= 0; ++l) out.value = std::min(out.value, ray_floor(p.r2 * (ax + l * th)));
    }
  }
  return out;
}

AssumptionReport validate(const ProblemSpec& p) {
  AssumptionReport rep;
  const int S = p.S;
  const double qm = p.q.modulus;
  for (const auto& t : p.terms) {
    for (const auto& [s, b] : t.b.terms) {
      Witness a1{t.k, s, -1, "s+S-k >= 2*m0", double(s + S - t.k), double(2 * t.m0), s + S - t.k >= 2 * t.m0};
      Witness a2{t.k, s, -1, "m1 >= s+S-k", double(t.m1), double(s + S - t.k), t.m1 >= s + S - t.k};
      rep.A_witnesses.push_back(a1);
      rep.A_witnesses.push_back(a2);
      rep.A2_witnesses.push_back(a2);
      rep.A_ok = rep.A_ok && a1.ok && a2.ok;
      rep.A2_ok = rep.A2_ok && a2.ok;
    }
  }

  Interval Tset{0.0, std::numeric_limits<double>::infinity()};
  for (const auto& t : p.terms)
    for (const auto& [s, b] : t.b.terms)
      for (int j = t.k; j < S; ++j) {
        double T0j = p.T0_of(j);
        Tset = intersect(Tset, {T0j * std::pow(qm, -t.m0), T0j * std::pow(qm, 0.5 * (s + j - t.k - 2 * t.m0))});
      }
  Interval J{0.0, std::numeric_limits<double>::infinity()};
  for (int j = 0; j < S; ++j) J = intersect(J, {p.T0_of(j), p.T0_of(j) * std::pow(qm, 0.5 * j)});
  rep.T_set = Tset;
  Interval feasible = intersect(Tset, {J.lo * std::pow(qm, -0.5 * S), J.hi});
  // J is bounded since S >= 1, so the largest feasible T1 is finite.
  if (!feasible.empty()) {
    rep.T1 = feasible.hi;
    rep.T1_set = intersect({rep.T1, rep.T1 * std::pow(qm, 0.5 * S)}, J);
  }
  rep.B_ok = !rep.T_set.empty() && !rep.T1_set.empty();

  const auto pts = spiral_base_points(p);
  GapResult gap = spectral_gap(p, pts, p.trunc.H);
  rep.spectral_gap = gap.value;
  rep.spectral_gap_approximate = gap.approximate;
  bool relaxed_ok = gap.value > 1e-12;
  bool sector_ok = false;
  if (p.q.b) {
    const int b = *p.q.b;
    const double eps = p.epsilon_sector;
    if (eps < std::min(std::numbers::pi / b, std::numbers::pi / 2)) {
      sector_ok = true;
      for (cplx x : pts)
        for (int l = 0; l < b; ++l)
          if (angle_dist(p.r2 * std::arg(x), -std::numbers::pi + 2 * std::numbers::pi * l / b) <= eps)
            sector_ok = false;
    } else {
      rep.notes.push_back("epsilon_sector must be below min(pi/b, pi/2); sector test skipped");
    }
  }
  // The sector condition implies a positive gap; the gap alone is the relaxed condition.
  rep.geometry_ok = relaxed_ok;
  rep.geometry_mode = sector_ok ? "sector" : (relaxed_ok ? "relaxed" : "failed");
  if (gap.approximate) rep.notes.push_back("angle of q has no small rational period; spectral gap sampled");

  for (int h = 0; h <= p.trunc.H; ++h)
    rep.disc_radii.push_back(1.0 / (2.0 * std::pow(h + 1.0, double(p.r1) / p.r2)));
  rep.r_coupling = 1.0;
  bool any = false;
  for (const auto& t : p.terms)
    for (cplx x : pts) {
      double v = std::pow(std::abs(x), t.m0);
      rep.r_coupling = any ? std::max(rep.r_coupling, v) : v;
      any = true;
    }
  if (!any) rep.r_coupling = 1.0;
  return rep;
}

BivariateSeries solve_formal(const ProblemSpec& p) {
  const int M = p.trunc.M, H = p.trunc.H, S = p.S;
  const cplx q = p.q.value();
  BivariateSeries F(M, H);
  for (int j = 0; j < S; ++j) {
    auto c = initial_t_coeffs(p, j);
    for (int m = 0; m <= M && m < static_cast<int>(c.size()); ++m) F(m, j) = c[static_cast<std::size_t>(m)];
  }
  const cplx lead = qpow(q, static_cast<long>(p.r2) * (p.r2 - 1) / 2);
  for (int h = 0; h + S <= H; ++h) {
    const double euler = std::pow(h + 1.0, p.r1);
    for (int m = 0; m <= M; ++m) {
      KahanSum rhs;
      for (const auto& t : p.terms) {
        if (m < t.m0) continue;
        const cplx dil = qpow(q, static_cast<long>(t.m0) * (m - t.m0) + static_cast<long>(t.m0) * (t.m0 - 1) / 2);
        for (const auto& [s, b] : t.b.terms) {
          if (s > h) break;
          const int h2 = h - s;
          cplx v = scale(F(m - t.m0, h2 + t.k), dil);
          v = unscale(v, qpow(q, static_cast<long>(t.m1) * h2));
          rhs.add(b * falling(h, s) * v);
        }
      }
      cplx val = rhs.value();
      if (m >= p.r2) val -= euler * scale(scale(F(m - p.r2, h + S), lead), qpow(q, static_cast<long>(p.r2) * (m - p.r2)));
      F(m, h + S) = val;
    }
  }
  return F;
}

double residual_formal(const ProblemSpec& p, const BivariateSeries& F) {
  // Assembled from the operator actions, independently of the recursion.
  const cplx q = p.q.value();
  const int Hw = F.H() - p.S;
  if (Hw < 0) return 0.0;
  BivariateSeries G = crop_h(diff_z(F, p.S), Hw);
  BivariateSeries L = euler_z(dilate_t(G, q, p.r2), p.r1);
  BivariateSeries R(F.M(), Hw);
  int shift = p.r2;
  for (const auto& t : p.terms) {
    shift = std::max(shift, t.m0);
    BivariateSeries part = mul_poly_z(t.b, dilate_t(scale_z(crop_h(diff_z(F, t.k), Hw), q, t.m1), q, t.m0));
    for (int h = 0; h <= Hw; ++h)
      for (int m = 0; m <= F.M(); ++m) R(m, h) += part(m, h);
  }
  double worst = 0;
  for (int h = 0; h <= Hw; ++h)
    for (int m = 0; m <= F.M() - shift; ++m) worst = std::max(worst, std::abs(L(m, h) + G(m, h) - R(m, h)));
  double scale_f = F.max_abs();
  return scale_f > 0 ? worst / scale_f : worst;
}

BivariateSeries wh_taylor_direct(const ProblemSpec& p, int M, int H) {
  const int S = p.S;
  const cplx q = p.q.value();
  BivariateSeries Wc(M, H);
  for (int j = 0; j < S && j <= H; ++j) {
    auto g = initial_borel_coeffs(p, j);
    for (int n = 0; n <= M && n < static_cast<int>(g.size()); ++n) Wc(n, j) = g[static_cast<std::size_t>(n)];
  }
  for (int h = 0; h + S <= H; ++h) {
    const double euler = std::pow(h + 1.0, p.r1);
    for (int n = 0; n <= M; ++n) {
      KahanSum rhs;
      for (const auto& t : p.terms) {
        if (n < t.m0) continue;
        for (const auto& [s, b] : t.b.terms) {
          if (s > h) break;
          const int h2 = h - s;
          rhs.add(b * falling(h, s) * unscale(Wc(n - t.m0, h2 + t.k), qpow(q, static_cast<long>(t.m1) * h2)));
        }
      }
      cplx v = rhs.value();
      if (n >= p.r2) v -= euler * Wc(n - p.r2, h + S);
      Wc(n, h + S) = v;
    }
  }
  return Wc;
}

double taylor_discrepancy(const BivariateSeries& a, const BivariateSeries& b) {
  const int M = std::min(a.M(), b.M()), H = std::min(a.H(), b.H());
  double worst = 0;
  for (int h = 0; h <= H; ++h)
    for (int n = 0; n <= M; ++n) {
      double den = std::max({std::abs(a(n, h)), std::abs(b(n, h)), std::numeric_limits<double>::min()});
      double d = std::abs(a(n, h) - b(n, h));
      if (d > 0) worst = std::max(worst, d / den);
    }
  return worst;
}

TaylorResult wh_taylor(const ProblemSpec& p) {
  TaylorResult out;
  out.coeffs = wh_taylor_direct(p, p.trunc.M, p.trunc.H);
  BivariateSeries F = solve_formal(p);
  out.from_formal = BivariateSeries(F.M(), F.H());
  for (int h = 0; h <= F.H(); ++h) out.from_formal.set_column(h, borel_q_formal(F.column(h), p.q.value()));
  out.discrepancy = taylor_discrepancy(out.coeffs, out.from_formal);
  if (out.discrepancy > 1e-8)
    throw ConsistencyError("wh_taylor: Borel-side recursion and Borel transform of the formal solution disagree",
                           out.discrepancy);
  return out;
}

SpiralGrid wh_spiral(const ProblemSpec& p, const AssumptionReport& report) {
  const int S = p.S, H = p.trunc.H;
  const cplx q = p.q.value();
  SpiralGrid W(spiral_base_points(p), p.trunc.l_min, p.trunc.l_max, H);
  std::vector<std::vector<cplx>> init(static_cast<std::size_t>(S));
  for (int j = 0; j < S; ++j) init[static_cast<std::size_t>(j)] = initial_borel_coeffs(p, j);
  const double floor_gap = report.spectral_gap * (1.0 - 1e-9);
  const std::size_t nl = static_cast<std::size_t>(p.trunc.l_max - p.trunc.l_min + 1);
  parallel_for(W.base_points().size() * nl, [&](std::size_t cell) {
    const std::size_t xi = cell / nl;
    const int l = p.trunc.l_min + static_cast<int>(cell % nl);
    const cplx x = W.base_points()[xi];
    const cplx tau = scale(x, qpow(q, l));
    for (int j = 0; j < S; ++j) {
      cplx acc = 0;
      const auto& c = init[static_cast<std::size_t>(j)];
      for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * tau + *it;
      W(xi, l, j) = acc;
    }
    const cplx tau_r2 = std::pow(x, p.r2) * qpow(q, static_cast<long>(p.r2) * l);
    for (int h = 0; h + S <= H; ++h) {
      const cplx den = std::pow(h + 1.0, p.r1) * tau_r2 + 1.0;
      if (std::abs(den) < floor_gap || den == cplx{}) {
        std::ostringstream os;
        os << "wh_spiral: divisor " << std::abs(den) << " below spectral gap at l=" << l << ", h=" << h;
        throw SmallDivisorError(os.str());
      }
      KahanSum acc;
      for (const auto& t : p.terms) {
        const cplx coup = std::pow(x, t.m0) * qpow(q, static_cast<long>(t.m0) * l);
        for (const auto& [s, b] : t.b.terms) {
          if (s > h) break;
          const int h2 = h - s;
          acc.add(b * falling(h, s) * coup * unscale(W(xi, l, h2 + t.k), qpow(q, static_cast<long>(t.m1) * h2)));
        }
      }
      W(xi, l, h + S) = acc.value() / den;
    }
  });
  return W;
}

cplx laplace_of_column(const ProblemSpec& p, const SpiralGrid& W, int h, cplx t) {
  SpiralFunction phi = [&W, h](long m) { return W(0, static_cast<int>(m), h); };
  return q_laplace_eval(phi, t, p.domain, p.q, p.trunc.tail_tol, {W.l_min(), W.l_max()});
}

EvalResult evaluate_X(const ProblemSpec& p, const SpiralGrid& W, cplx t, cplx z) {
  EvalResult out;
  KahanSum sum;
  cplx zpow = 1.0;  // z^h / h!
  double last = 0;
  for (int h = 0; h <= W.H(); ++h) {
    if (h > 0) zpow *= z / static_cast<double>(h);
    if (zpow == cplx{}) break;
    cplx term = laplace_of_column(p, W, h, t) * zpow;
    sum.add(term);
    last = std::abs(term);
  }
  out.value = sum.value();
  out.h_tail = last;
  if (z != cplx{} && last > 1e-8 * std::max(1.0, std::abs(out.value)))
    throw TruncationWindowError("evaluate_X: h-series tail not negligible; increase H", last);
  return out;
}

}  // namespace qdde
