#include "qdde/majorant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace qdde {

namespace {

double falling(int h, int s) {
  double r = 1.0;
  for (int i = 0; i < s; ++i) r *= static_cast<double>(h - i);
  return r;
}

double log_weight_E(int l, int h, const NormParams& np) {
  return -weight_P(l, h) * std::log(np.q_mod) + l * std::log(np.T) + h * std::log(np.X) - log_factorial(h);
}

double log_weight_H(int l, int h, const NormParams& np) {
  return l * std::log(np.T) + 0.5 * h * h * std::log(np.q_mod) + h * std::log(np.X) - log_factorial(h);
}

WeightedGrid shift_h_up(const WeightedGrid& U, int S, int H) {
  WeightedGrid V(U.kind(), U.l_min(), U.l_max(), H);
  for (int l = U.l_min(); l <= U.l_max(); ++l)
    for (int h = 0; h <= U.H() && h + S <= H; ++h) V(l, h + S) = U(l, h);
  return V;
}

double diff_norm(const WeightedGrid& a, const WeightedGrid& b, const NormParams& np) {
  WeightedGrid d = a;
  for (int l = a.l_min(); l <= a.l_max(); ++l)
    for (int h = 0; h <= a.H(); ++h) d(l, h) = std::abs(a(l, h) - b(l, h));
  return norm_of(d, np);
}

}  // namespace

WeightedGrid::WeightedGrid(SpaceKind kind, int l_min, int l_max, int H)
    : kind_(kind), l_min_(l_min), l_max_(l_max), H_(H) {
  if (l_max < l_min || H < 0) throw std::invalid_argument("empty weighted grid window");
  if (kind == SpaceKind::H && l_min < 0) throw std::invalid_argument("H-space grids start at l = 0");
  v_.assign(static_cast<std::size_t>(l_max - l_min + 1) * static_cast<std::size_t>(H + 1), 0.0);
}

bool WeightedGrid::same_shape(const WeightedGrid& o) const {
  return kind_ == o.kind_ && l_min_ == o.l_min_ && l_max_ == o.l_max_ && H_ == o.H_;
}

double WeightedGrid::max_abs() const {
  double m = 0;
  for (double v : v_) m = std::max(m, std::abs(v));
  return m;
}

double weight_P(int l, int h) {
  if (h < 0) throw std::invalid_argument("weight_P: h >= 0 required");
  double L = l, Hh = h;
  if (l >= 0) return 0.25 * L * L + 0.5 * L * Hh - 0.5 * Hh * Hh;
  return -0.5 * Hh * Hh;
}

double norm_E(const WeightedGrid& V, const NormParams& np) {
  double s = 0;
  for (int l = V.l_min(); l <= V.l_max(); ++l)
    for (int h = 0; h <= V.H(); ++h)
      if (V(l, h) != 0) s += std::abs(V(l, h)) * std::exp(log_weight_E(l, h, np));
  return s;
}

double norm_H(const WeightedGrid& V, const NormParams& np) {
  double s = 0;
  for (int l = V.l_min(); l <= V.l_max(); ++l)
    for (int h = 0; h <= V.H(); ++h)
      if (V(l, h) != 0) s += std::abs(V(l, h)) * std::exp(log_weight_H(l, h, np));
  return s;
}

double norm_of(const WeightedGrid& V, const NormParams& np) {
  return V.kind() == SpaceKind::E ? norm_E(V, np) : norm_H(V, np);
}

MajorantSystem e_system(const ProblemSpec& p, const AssumptionReport& rep) {
  if (!(rep.spectral_gap > 0)) throw SmallDivisorError("e_system: spectral gap must be positive");
  MajorantSystem sys{p.S, p.q.modulus, {}};
  for (const auto& t : p.terms) {
    MajorantTerm mt{t.k, t.m0, t.m1, {}};
    for (const auto& [s, b] : t.b.terms) mt.a.emplace_back(s, std::abs(b) * rep.r_coupling / rep.spectral_gap);
    sys.terms.push_back(std::move(mt));
  }
  return sys;
}

MajorantSystem h_system(const ProblemSpec& p) {
  MajorantSystem sys{p.S, p.q.modulus, {}};
  for (const auto& t : p.terms) {
    MajorantTerm mt{t.k, 0, t.m1, {}};
    for (const auto& [s, b] : t.b.terms) mt.a.emplace_back(s, std::abs(b));
    sys.terms.push_back(std::move(mt));
  }
  return sys;
}

WeightedGrid apply_A(const WeightedGrid& V, const MajorantSystem& sys) {
  WeightedGrid out(V.kind(), V.l_min(), V.l_max(), V.H());
  for (int l = V.l_min(); l <= V.l_max(); ++l)
    for (int h = 0; h <= V.H(); ++h) {
      const double v = V(l, h);
      if (v == 0) continue;
      for (const auto& t : sys.terms) {
        const int j = sys.S - t.k;
        const double base = std::pow(sys.q_mod, double(t.m0) * l - double(t.m1) * (h + j));
        for (const auto& [s, a] : t.a) {
          const int ht = h + j + s;
          if (ht > V.H()) continue;
          out(l, ht) += a * base * falling(ht, s) * v;
        }
      }
    }
  return out;
}

WeightedGrid apply_B(const WeightedGrid& V, const MajorantSystem& sys) {
  WeightedGrid out(V.kind(), V.l_min(), V.l_max(), V.H());
  for (int l = V.l_min(); l <= V.l_max(); ++l)
    for (int h = 0; h <= V.H(); ++h) {
      const double v = V(l, h);
      if (v == 0) continue;
      for (const auto& t : sys.terms) {
        const int j = sys.S - t.k;
        const double base = std::pow(sys.q_mod, -double(t.m1) * (h + j));
        for (const auto& [s, a] : t.a) {
          const int ht = h + j + s;
          if (ht > V.H()) continue;
          const double c = a * base * falling(ht, s) * v;
          double r = 2.0;
          for (int l1 = 0; l + l1 <= V.l_max(); ++l1, r *= 2.0) out(l + l1, ht) += r * c;
        }
      }
    }
  return out;
}

WeightedGrid apply_D(const WeightedGrid& V, const MajorantSystem& sys) {
  if (V.H() < sys.S) throw std::invalid_argument("apply_D: grid has fewer than S rows");
  WeightedGrid out(V.kind(), V.l_min(), V.l_max(), V.H() - sys.S);
  for (int l = V.l_min(); l <= V.l_max(); ++l)
    for (int h = 0; h <= out.H(); ++h) {
      double acc = V(l, h + sys.S);
      for (const auto& t : sys.terms) {
        const double dil = std::pow(sys.q_mod, double(t.m0) * l);
        for (const auto& [s, a] : t.a) {
          if (s > h) continue;
          const int h2 = h - s;
          acc -= a * dil * std::pow(sys.q_mod, -double(t.m1) * h2) * falling(h, s) * V(l, h2 + t.k);
        }
      }
      out(l, h) = acc;
    }
  return out;
}

double operator_norm_A(const MajorantSystem& sys, const NormParams& np, int l_min, int l_max, int H) {
  const double lq = std::log(sys.q_mod);
  double best = 0;
  for (int l = l_min; l <= l_max; ++l)
    for (int h = 0; h <= H; ++h) {
      double ratio = 0;
      for (const auto& t : sys.terms) {
        const int j = sys.S - t.k;
        for (const auto& [s, a] : t.a) {
          if (a == 0) continue;
          const int ht = h + j + s;
          double lr = std::log(a) + (double(t.m0) * l - double(t.m1) * (h + j)) * lq + log_factorial(ht) -
                      log_factorial(h + j) + log_weight_E(l, ht, np) - log_weight_E(l, h, np);
          ratio += std::exp(lr);
        }
      }
      best = std::max(best, ratio);
    }
  return best;
}

double operator_norm_B(const MajorantSystem& sys, const NormParams& np, int H) {
  if (!(np.T < 0.5)) return std::numeric_limits<double>::infinity();
  const double lq = std::log(sys.q_mod);
  const double r_norm = 2.0 / (1.0 - 2.0 * np.T);  // sum 2^{l+1} T^l
  double best = 0;
  for (int h = 0; h <= H; ++h) {
    double ratio = 0;
    for (const auto& t : sys.terms) {
      const int j = sys.S - t.k;
      for (const auto& [s, a] : t.a) {
        if (a == 0) continue;
        const int ht = h + j + s;
        double lr = std::log(a) - double(t.m1) * (h + j) * lq + log_factorial(ht) - log_factorial(h + j) +
                    log_weight_H(0, ht, np) - log_weight_H(0, h, np);
        ratio += r_norm * std::exp(lr);
      }
    }
    best = std::max(best, ratio);
  }
  return best;
}

double term_operator_norm_E(int s, int h2, int h1, int m1, double q_mod, NormParams from, NormParams to, int l_min,
                            int l_max, int H) {
  from.q_mod = to.q_mod = q_mod;
  const double lq = std::log(q_mod);
  double best = 0;
  for (int l = l_min; l <= l_max; ++l)
    for (int h = 0; h <= H; ++h) {
      const int ht = h + h2 + s;
      double lr = (double(h1) * l - double(m1) * (h + h2)) * lq + log_factorial(ht) - log_factorial(h + h2) +
                  log_weight_E(l, ht, to) - log_weight_E(l, h, from);
      best = std::max(best, std::exp(lr));
    }
  return best;
}

ContractionResult contraction_ratio(OperatorKind op, const MajorantSystem& sys, const NormParams& np, int samples,
                                    int l_min, int l_max, int H, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> nnz_d(1, 32), l_d(l_min, l_max), h_d(0, H);
  std::uniform_real_distribution<double> val_d(0.0, 1.0);
  const SpaceKind kind = op == OperatorKind::A ? SpaceKind::E : SpaceKind::H;
  ContractionResult out;
  for (int i = 0; i < samples; ++i) {
    WeightedGrid V(kind, l_min, l_max, H);
    const int nnz = nnz_d(rng);
    for (int e = 0; e < nnz; ++e) {
      const int l = l_d(rng), h = h_d(rng);
      V(l, h) = val_d(rng);
    }
    const double nv = norm_of(V, np);
    if (nv == 0) continue;
    WeightedGrid img = op == OperatorKind::A ? apply_A(V, sys) : apply_B(V, sys);
    out.ratio = std::max(out.ratio, norm_of(img, np) / nv);
    ++out.samples_used;
  }
  return out;
}

XSearch search_X(OperatorKind op, const MajorantSystem& sys, NormParams np, int l_min, int l_max, int H, double X0) {
  XSearch out;
  np.X = X0;
  for (int i = 0; i <= 60; ++i) {
    const double n = op == OperatorKind::A ? operator_norm_A(sys, np, l_min, l_max, H) : operator_norm_B(sys, np, H);
    out.X = np.X;
    out.op_norm = n;
    out.halvings = i;
    if (n <= 0.5) {
      out.ok = true;
      return out;
    }
    np.X *= 0.5;
  }
  return out;
}

WeightedGrid spiral_sup(const SpiralGrid& W) {
  WeightedGrid w(SpaceKind::E, W.l_min(), W.l_max(), W.H());
  for (std::size_t xi = 0; xi < W.base_points().size(); ++xi)
    for (int l = W.l_min(); l <= W.l_max(); ++l)
      for (int h = 0; h <= W.H(); ++h) w(l, h) = std::max(w(l, h), std::abs(W(xi, l, h)));
  return w;
}

WeightedGrid solve_majorant_E(const ProblemSpec& p, const AssumptionReport& rep, const WeightedGrid& w) {
  const MajorantSystem sys = e_system(p, rep);
  const int S = p.S;
  WeightedGrid v(SpaceKind::E, w.l_min(), w.l_max(), w.H());
  for (int l = w.l_min(); l <= w.l_max(); ++l) {
    for (int j = 0; j < S && j <= w.H(); ++j) v(l, j) = w(l, j);
    for (int h = 0; h + S <= w.H(); ++h) {
      double acc = 0;
      for (const auto& t : sys.terms) {
        const double dil = std::pow(sys.q_mod, double(t.m0) * l);
        for (const auto& [s, a] : t.a) {
          if (s > h) continue;
          const int h2 = h - s;
          acc += a * dil * std::pow(sys.q_mod, -double(t.m1) * h2) * falling(h, s) * v(l, h2 + t.k);
        }
      }
      v(l, h + S) = acc;
    }
  }
  return v;
}

NeumannResult solve_majorant_E_neumann(const MajorantSystem& sys, const WeightedGrid& initial, const NormParams& np) {
  const int S = sys.S, H = initial.H();
  WeightedGrid I(SpaceKind::E, initial.l_min(), initial.l_max(), H);
  for (int l = I.l_min(); l <= I.l_max(); ++l)
    for (int j = 0; j < S && j <= H; ++j) I(l, j) = initial(l, j);
  WeightedGrid b = apply_D(I, sys);
  for (int l = b.l_min(); l <= b.l_max(); ++l)
    for (int h = 0; h <= b.H(); ++h) b(l, h) = -b(l, h);

  NeumannResult out;
  WeightedGrid U(SpaceKind::E, b.l_min(), b.l_max(), b.H());
  double prev_inc = -1;
  // Every term of A raises h by at least S - k >= 1, so A is nilpotent on the truncated
  // grid and the iterates are exactly stationary after at most H - S + 2 steps.
  for (int it = 0; it <= b.H() + 1; ++it) {
    WeightedGrid next = apply_A(U, sys);
    for (int l = b.l_min(); l <= b.l_max(); ++l)
      for (int h = 0; h <= b.H(); ++h) next(l, h) += b(l, h);
    const double inc = diff_norm(next, U, np);
    const bool stationary = next.values() == U.values();
    out.iterations = it + 1;
    if (prev_inc > 0 && inc > 0) out.max_increment_ratio = std::max(out.max_increment_ratio, inc / prev_inc);
    U = std::move(next);
    if (stationary) break;
    prev_inc = inc;
  }
  out.V = shift_h_up(U, S, H);
  for (int l = I.l_min(); l <= I.l_max(); ++l)
    for (int j = 0; j < S && j <= H; ++j) out.V(l, j) += I(l, j);
  WeightedGrid res = apply_D(out.V, sys);
  const double bmax = b.max_abs();
  out.residual = bmax > 0 ? res.max_abs() / bmax : res.max_abs();
  return out;
}

WeightedGrid h_initial_columns(const ProblemSpec& p, int N) {
  WeightedGrid u(SpaceKind::H, 0, N, p.trunc.H);
  for (int j = 0; j < p.S && j <= p.trunc.H; ++j) {
    const auto g = initial_borel_coeffs(p, j);
    const double rho = 1.0 / (2.0 * std::pow(j + 1.0, double(p.r1) / p.r2));
    for (int n = 0; n <= N; ++n) {
      // sup over |tau| <= rho of |d^n W_j / n!| <= sum_m |g_m| C(m, n) rho^{m-n}
      double acc = 0;
      for (int m = n; m < static_cast<int>(g.size()); ++m)
        acc += std::abs(g[static_cast<std::size_t>(m)]) *
               std::exp(log_factorial(m) - log_factorial(n) - log_factorial(m - n)) * std::pow(rho, m - n);
      u(n, j) = acc / std::pow(j + 1.0, double(p.r1) * n / p.r2);
    }
  }
  return u;
}

WeightedGrid solve_majorant_H(const ProblemSpec& p, const WeightedGrid& initial) {
  const MajorantSystem sys = h_system(p);
  const int S = p.S;
  WeightedGrid u(SpaceKind::H, 0, initial.l_max(), initial.H());
  for (int n = 0; n <= u.l_max(); ++n)
    for (int j = 0; j < S && j <= u.H(); ++j) u(n, j) = initial(n, j);
  for (int h = 0; h + S <= u.H(); ++h)
    for (int n = 0; n <= u.l_max(); ++n) {
      double acc = 0;
      for (const auto& t : sys.terms)
        for (const auto& [s, c] : t.a) {
          if (s > h) continue;
          const int h2 = h - s;
          double conv = 0, r = 2.0;
          for (int l1 = 0; l1 <= n; ++l1, r *= 2.0) conv += r * u(n - l1, h2 + t.k);
          acc += c * std::pow(sys.q_mod, -double(t.m1) * h2) * falling(h, s) * conv;
        }
      u(n, h + S) = acc;
    }
  return u;
}

DerivativeBound derivative_bound(const ProblemSpec& p, const BivariateSeries& taylor, int n_max, int j_max) {
  if (taylor.M() < n_max || taylor.H() < j_max) throw std::invalid_argument("derivative_bound: Taylor grid too small");
  DerivativeBound out;
  double T0min = p.T0_of(0);
  for (int j = 1; j < p.S; ++j) T0min = std::min(T0min, p.T0_of(j));
  out.T1 = 0.9 * std::min(T0min, 0.5);
  ProblemSpec pp = p;
  pp.trunc.H = std::max(j_max, p.S);
  const MajorantSystem sys = h_system(pp);
  XSearch xs = search_X(OperatorKind::B, sys, {out.T1, 1.0, p.q.modulus}, 0, 0, pp.trunc.H);
  out.X1 = xs.X;
  out.op_norm = xs.op_norm;
  WeightedGrid u = solve_majorant_H(pp, h_initial_columns(pp, n_max));
  out.C1 = norm_H(u, {out.T1, out.X1, p.q.modulus});
  const double lq = std::log(p.q.modulus);
  for (int n = 0; n <= n_max; ++n)
    for (int j = 0; j <= j_max; ++j) {
      const double c = std::abs(taylor(n, j));
      if (c == 0) continue;
      double lb = std::log(out.C1) - n * std::log(out.T1) - j * std::log(out.X1) + log_factorial(j) +
                  double(p.r1) * n / p.r2 * std::log(j + 1.0) - 0.5 * j * j * lq;
      double ratio = std::exp(std::log(c) - lb);
      out.worst_ratio = std::max(out.worst_ratio, ratio);
      if (ratio > 1.0) ++out.violations;
    }
  return out;
}

int domination_violations(const WeightedGrid& w, const WeightedGrid& v, int l_lo, int l_hi, int h_hi) {
  int count = 0;
  for (int l = std::max(l_lo, w.l_min()); l <= std::min(l_hi, w.l_max()); ++l)
    for (int h = 0; h <= std::min(h_hi, w.H()); ++h)
      if (w(l, h) > v(l, h)) ++count;
  return count;
}

}  // namespace qdde
