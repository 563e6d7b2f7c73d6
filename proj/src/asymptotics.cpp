#include "qdde/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace qdde {

namespace {

// Extra Taylor orders summed past n in the tail series; ratio |tau|/radius <= 1/4 there.
constexpr int kTailOrders = 60;

struct LinFit {
  double slope = 0;
  double intercept = 0;
  double max_pos_res = 0;
  double max_abs_res = 0;
  int count = 0;
};

LinFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  LinFit f;
  f.count = static_cast<int>(x.size());
  if (x.empty()) return f;
  if (x.size() == 1) {
    f.intercept = y[0];
    return f;
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= x.size();
  my /= y.size();
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxx += (x[i] - mx) * (x[i] - mx), sxy += (x[i] - mx) * (y[i] - my);
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    f.max_pos_res = std::max(f.max_pos_res, r);
    f.max_abs_res = std::max(f.max_abs_res, std::abs(r));
  }
  return f;
}

// log(|q|^{n(n-1)/2} |t|^n)
double log_moment_scale(int n, double lq, cplx t) {
  return 0.5 * n * (n - 1.0) * lq + n * std::log(std::abs(t));
}

// Value of tau -> phi(tau) - sum_{k<n} c_k tau^k at tau = lambda q^m.
class RemainderOnSpiral {
 public:
  RemainderOnSpiral(const std::vector<cplx>& c, int n, double radius, cplx lambda, cplx q)
      : c_(c), n_(n), radius_(radius), lambda_(lambda), q_(q) {}

  cplx operator()(long m, const std::function<cplx(long)>& direct) const {
    const cplx tau = scale(lambda_, qpow(q_, m));
    if (std::abs(tau) <= radius_) {
      // Tail series: no cancellation against the Taylor polynomial.
      cplx pw = std::pow(tau, n_), acc = 0;
      double amax = 0;
      for (int k = n_; k < static_cast<int>(c_.size()); ++k, pw *= tau) {
        const cplx term = c_[static_cast<std::size_t>(k)] * pw;
        acc += term;
        amax = std::max(amax, std::abs(term));
        if (k > n_ + 2 && std::abs(term) < 1e-20 * amax) break;
      }
      return acc;
    }
    cplx poly = 0;
    for (int k = std::min(n_, static_cast<int>(c_.size())) - 1; k >= 0; --k) poly = poly * tau + c_[static_cast<std::size_t>(k)];
    return direct(m) - poly;
  }

 private:
  const std::vector<cplx>& c_;
  int n_;
  double radius_;
  cplx lambda_, q_;
};

// L(W_h - P_{n-1,h})(t) for n = 1..N, h = 0..H, at every sample: out[ti][(n-1)(H+1)+h].
std::vector<std::vector<cplx>> laplace_remainders(const ProblemSpec& p, const SpiralGrid& W, int N,
                                                  const std::vector<cplx>& ts) {
  const int H = W.H();
  const BivariateSeries C = wh_taylor_direct(p, N + kTailOrders, H);
  std::vector<std::vector<cplx>> cols(static_cast<std::size_t>(H + 1));
  std::vector<double> radius(static_cast<std::size_t>(H + 1));
  for (int h = 0; h <= H; ++h) {
    cols[static_cast<std::size_t>(h)] = C.column(h).coeffs;
    radius[static_cast<std::size_t>(h)] = 0.25 / std::pow(h + 1.0, double(p.r1) / p.r2);
  }
  const cplx q = p.q.value();
  std::vector<std::vector<cplx>> out(ts.size(), std::vector<cplx>(static_cast<std::size_t>(N) * (H + 1)));
  parallel_for(ts.size(), [&](std::size_t ti) {
    for (int h = 0; h <= H; ++h) {
      auto direct = [&W, h](long m) {
        if (m < W.l_min() || m > W.l_max())
          throw TruncationWindowError("remainder: spiral index outside the grid window", 0.0);
        return W(0, static_cast<int>(m), h);
      };
      for (int n = 1; n <= N; ++n) {
        RemainderOnSpiral rem(cols[static_cast<std::size_t>(h)], n, radius[static_cast<std::size_t>(h)],
                              p.domain.lambda, q);
        SpiralFunction phi = [&rem, &direct](long m) { return rem(m, direct); };
        out[ti][static_cast<std::size_t>(n - 1) * (H + 1) + h] =
            q_laplace_eval(phi, ts[ti], p.domain, p.q, p.trunc.tail_tol, {W.l_min(), W.l_max()});
      }
    }
  });
  return out;
}

void fill_rho(RemainderProfile& prof, const ProblemSpec& p) {
  const double lq = p.q.log_modulus();
  prof.rho.assign(static_cast<std::size_t>(prof.N), 0.0);
  prof.rho_no_gamma.assign(static_cast<std::size_t>(prof.N), 0.0);
  for (int n = 1; n <= prof.N; ++n) {
    const double lg = prof.with_gamma ? log_gamma_factor(n, p.r1, p.r2) : 0.0;
    double best = 0, best_ng = 0;
    for (std::size_t ti = 0; ti < prof.t.size(); ++ti) {
      const double r = prof.R[static_cast<std::size_t>(n - 1)][ti];
      if (r == 0) continue;
      const double base = std::log(r) - log_moment_scale(n, lq, prof.t[ti]);
      best = std::max(best, std::exp(base - lg));
      best_ng = std::max(best_ng, std::exp(base));
    }
    prof.rho[static_cast<std::size_t>(n - 1)] = best;
    prof.rho_no_gamma[static_cast<std::size_t>(n - 1)] = best_ng;
  }
}

}  // namespace

double log_gamma_factor(int n, int r1, int r2) {
  if (n < 1) throw std::invalid_argument("gamma_factor: n >= 1 required");
  if (r1 == 0) return 0.0;
  const int num = r1 * (n + 1);
  if (num % r2 == 0) return log_factorial(num / r2 - 1);
  return std::lgamma(static_cast<double>(num) / r2);
}

double gamma_factor(int n, int r1, int r2) {
  if (n < 1) throw std::invalid_argument("gamma_factor: n >= 1 required");
  if (r1 == 0) return 1.0;
  const int num = r1 * (n + 1);
  if (num % r2 == 0) {
    double f = 1.0;
    for (int i = 2; i < num / r2; ++i) f *= i;
    return f;
  }
  return std::tgamma(static_cast<double>(num) / r2);
}

std::vector<cplx> t_samples(const ProblemSpec& p, int rays, int points) {
  if (rays < 1 || points < 1) throw std::invalid_argument("t_samples: rays, points >= 1 required");
  const double t_max = 0.9 * std::min(p.domain.r0, std::abs(p.domain.lambda));
  const double arg0 = std::arg(p.domain.lambda);
  std::vector<cplx> out;
  for (int r = 0; r < rays; ++r) {
    const double a = rays == 1 ? arg0 : arg0 - std::numbers::pi / 4 + r * (std::numbers::pi / 2) / (rays - 1);
    for (int k = 0; k < points; ++k) {
      const double e = points == 1 ? 0.0 : -3.0 * (points - 1 - k) / (points - 1);
      const cplx t = std::polar(t_max * std::pow(10.0, e), a);
      if (in_spiral_domain(t, p.domain, p.q, p.trunc.tail_tol).inside) out.push_back(t);
    }
  }
  return out;
}

RemainderProfile remainder_profile(const ProblemSpec& p, const SpiralGrid& W, const BivariateSeries& F, cplx z,
                                   int N, const std::vector<cplx>& ts, RemainderRoute route) {
  if (N < 1 || N > F.M()) throw std::invalid_argument("remainder_profile: 1 <= N <= M required");
  for (cplx t : ts)
    if (!in_spiral_domain(t, p.domain, p.q, p.trunc.tail_tol).inside) {
      std::ostringstream os;
      os << "remainder_profile: t = " << t << " is outside the spiral domain";
      throw DomainError(os.str());
    }
  RemainderProfile prof;
  prof.N = N;
  prof.z = z;
  prof.t = ts;
  prof.with_gamma = p.r1 != 0;
  prof.R.assign(static_cast<std::size_t>(N), std::vector<double>(ts.size(), 0.0));
  const int H = std::min(W.H(), F.H());

  if (route == RemainderRoute::stable) {
    const auto L = laplace_remainders(p, W, N, ts);
    for (std::size_t ti = 0; ti < ts.size(); ++ti)
      for (int n = 1; n <= N; ++n) {
        KahanSum sum;
        cplx zpow = 1.0;
        double last = 0;
        for (int h = 0; h <= H; ++h) {
          if (h > 0) zpow *= z / static_cast<double>(h);
          if (zpow == cplx{}) break;
          const cplx term = zpow * L[ti][static_cast<std::size_t>(n - 1) * (W.H() + 1) + h];
          sum.add(term);
          last = std::abs(term);
        }
        prof.R[static_cast<std::size_t>(n - 1)][ti] = std::abs(sum.value());
        prof.h_tail = std::max(prof.h_tail, last);
      }
  } else {
    std::vector<std::vector<double>> Rt(ts.size(), std::vector<double>(static_cast<std::size_t>(N)));
    std::vector<double> tails(ts.size());
    parallel_for(ts.size(), [&](std::size_t ti) {
      const cplx t = ts[ti];
      const EvalResult X = evaluate_X(p, W, t, z);
      tails[ti] = X.h_tail;
      cplx partial = 0;
      cplx tpow = 1.0;
      for (int n = 1; n <= N; ++n, tpow *= t) {
        // add the order n-1 terms of every h-column
        cplx zpow = 1.0;
        for (int h = 0; h <= H; ++h) {
          if (h > 0) zpow *= z / static_cast<double>(h);
          if (zpow == cplx{}) break;
          partial += F(n - 1, h) * tpow * zpow;
        }
        Rt[ti][static_cast<std::size_t>(n - 1)] = std::abs(X.value - partial);
      }
    });
    for (std::size_t ti = 0; ti < ts.size(); ++ti) {
      for (int n = 1; n <= N; ++n)
        prof.R[static_cast<std::size_t>(n - 1)][ti] = Rt[ti][static_cast<std::size_t>(n - 1)];
      prof.h_tail = std::max(prof.h_tail, tails[ti]);
    }
  }
  fill_rho(prof, p);
  return prof;
}

RemainderProfile single_series_profile(const ProblemSpec& p, const SpiralFunction& phi,
                                       const std::vector<cplx>& taylor, double radius, int N,
                                       const std::vector<cplx>& ts) {
  RemainderProfile prof;
  prof.N = N;
  prof.t = ts;
  prof.with_gamma = false;
  prof.R.assign(static_cast<std::size_t>(N), std::vector<double>(ts.size(), 0.0));
  const cplx q = p.q.value();
  parallel_for(ts.size(), [&](std::size_t ti) {
    for (int n = 1; n <= N; ++n) {
      RemainderOnSpiral rem(taylor, n, radius, p.domain.lambda, q);
      SpiralFunction f = [&rem, &phi](long m) { return rem(m, phi); };
      prof.R[static_cast<std::size_t>(n - 1)][ti] =
          std::abs(q_laplace_eval(f, ts[ti], p.domain, p.q, p.trunc.tail_tol));
    }
  });
  fill_rho(prof, p);
  return prof;
}

FitReport gevrey_fit(const RemainderProfile& profile) {
  FitReport rep;
  rep.with_gamma = profile.with_gamma;
  rep.n_hi = profile.N;
  for (double r : profile.rho)
    if (!std::isfinite(r) || r < 0) throw std::domain_error("gevrey_fit: non-finite normalized remainder");
  std::vector<double> xs, ys;
  for (int n = rep.n_lo; n <= profile.N; ++n) {
    const double r = profile.rho[static_cast<std::size_t>(n - 1)];
    if (r > 0) xs.push_back(n), ys.push_back(std::log(r));
  }
  if (xs.empty()) {
    rep.degenerate = std::all_of(profile.rho.begin(), profile.rho.end(), [](double r) { return r == 0; });
    if (!rep.degenerate)  // only n = 1 is non-zero
      rep.C_tilde = rep.C_fit = profile.rho[0];
    return rep;
  }
  const LinFit f = linear_fit(xs, ys);
  rep.C_fit = std::exp(f.intercept);
  rep.C_tilde = std::exp(f.intercept + f.max_pos_res);
  rep.D_tilde = std::exp(f.slope);
  rep.slope_residual = f.max_abs_res;
  for (int n = 1; n <= profile.N; ++n) {
    const double r = profile.rho[static_cast<std::size_t>(n - 1)];
    if (r > rep.C_tilde * std::pow(rep.D_tilde, n) * (1.0 + 1e-9)) ++rep.envelope_violations;
  }
  return rep;
}

void per_h_constants(const ProblemSpec& p, const SpiralGrid& W, const BivariateSeries& F, int N,
                     const std::vector<cplx>& ts, FitReport& report, int h_max) {
  if (h_max < 0 || h_max > W.H()) h_max = W.H();
  const double lq = p.q.log_modulus();
  const auto L = laplace_remainders(p, W, N, ts);
  report.per_h.clear();
  std::vector<double> xb, yb;
  std::vector<PerHFit> fitted;
  for (int h = 0; h <= h_max; ++h) {
    PerHFit ph;
    ph.h = h;
    std::vector<double> xs, ys;
    for (int n = 2; n <= N; ++n) {
      double best = 0;
      for (std::size_t ti = 0; ti < ts.size(); ++ti) {
        const double r = std::abs(L[ti][static_cast<std::size_t>(n - 1) * (W.H() + 1) + h]);
        if (r > 0) best = std::max(best, std::exp(std::log(r) - log_moment_scale(n, lq, ts[ti])));
      }
      if (best > 0) xs.push_back(n), ys.push_back(std::log(best));
    }
    if (xs.size() < 2) {
      ph.degenerate = true;
    } else {
      const LinFit f = linear_fit(xs, ys);
      ph.B = std::exp(f.slope);
      ph.D = std::exp(f.intercept + f.max_pos_res);
    }
    // Taylor rate A(h) of the Borel coefficients f_{n,h} / q^{n(n-1)/2}.
    std::vector<double> xa, ya;
    if (h <= F.H())
      for (int n = 1; n <= F.M(); ++n) {
        const double c = std::abs(F(n, h)) / std::exp(0.5 * n * (n - 1.0) * lq);
        if (c > 0) xa.push_back(n), ya.push_back(std::log(c));
      }
    if (xa.size() >= 2) {
      ph.A = std::exp(linear_fit(xa, ya).slope);
      const double x = std::log(1.0 / (2.0 * std::abs(p.domain.lambda) * ph.A)) / lq;
      ph.m_h = static_cast<long>(std::ceil(x)) - 1;
    }
    if (!ph.degenerate && h >= 1) {
      xb.push_back(std::log(h + 1.0));
      yb.push_back(std::log(ph.B));
      fitted.push_back(ph);
    }
    report.per_h.push_back(ph);
  }
  report.per_h_ok = xb.size() >= 3;
  if (!report.per_h_ok) return;
  const LinFit fb = linear_fit(xb, yb);
  report.B_exponent = fb.slope;
  report.A1 = std::exp(fb.intercept);
  std::vector<double> xd, yd;
  for (const auto& ph : fitted) {
    xd.push_back(ph.h);
    yd.push_back(std::log(ph.D) - fb.slope * std::log(ph.h + 1.0) - log_factorial(ph.h) + 0.25 * ph.h * ph.h * lq);
  }
  const LinFit fd = linear_fit(xd, yd);
  report.A2 = std::exp(fd.intercept);
  report.A3 = std::exp(fd.slope);
}

GrowthFit growth_fit(const WeightedGrid& w, double q_mod, int l_lo, int l_hi) {
  GrowthFit g;
  g.l_lo = std::max(l_lo, w.l_min());
  g.l_hi = std::min(l_hi, w.l_max());
  const double lq = std::log(q_mod);
  g.T = std::numeric_limits<double>::infinity();
  g.logC = -std::numeric_limits<double>::infinity();
  int fitted = 0;
  bool finite = true;
  for (int h = 0; h <= w.H(); ++h) {
    std::vector<double> xs, ys;
    for (int l = g.l_lo; l <= g.l_hi; ++l)
      if (w(l, h) > 0) xs.push_back(l), ys.push_back(std::log(w(l, h)) - 0.5 * l * l * lq);
    if (xs.size() < 2) continue;
    const LinFit f = linear_fit(xs, ys);
    const double T = std::exp(-f.slope);
    finite = finite && std::isfinite(T) && T > 0;
    g.T = std::min(g.T, T);
    g.logC = std::max(g.logC, f.intercept + f.max_pos_res);
    ++fitted;
  }
  g.ok = fitted > 0 && finite && std::isfinite(g.T) && g.T > 0;
  return g;
}

double auto_r0(const ProblemSpec& p, double T) {
  return std::abs(p.domain.lambda) * std::sqrt(p.q.modulus) * T / p.q.modulus;
}

}  // namespace qdde
