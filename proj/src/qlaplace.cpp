#include "qdde/qlaplace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace qdde {

namespace {

constexpr int kThetaSideCap = 4000;
constexpr int kSmallRun = 3;

cplx log_q(const QParameter& q) { return {q.log_modulus(), q.angle()}; }

// Direct bilateral sum with real weights |q|^{-n(n-1)/2} |x|^n, from the peak.
double real_theta(double ax, double log_mod, double tail_tol) {
  double lx = std::log(ax);
  long peak = std::lround(lx / log_mod + 0.5);
  double sum = 0, comp = 0;
  auto add = [&](double v) {
    double t = sum + v;
    comp += (std::abs(sum) >= std::abs(v)) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  };
  double first = std::exp(-0.5 * static_cast<double>(peak) * static_cast<double>(peak - 1) * log_mod +
                          static_cast<double>(peak) * lx);
  add(first);
  for (int dir : {1, -1}) {
    double term = first;
    long n = peak;
    int small = 0;
    for (int step = 0; step < kThetaSideCap && small < kSmallRun; ++step) {
      // term_{n+1} = term_n |x| |q|^{-n};  term_{n-1} = term_n |q|^{n-1} / |x|
      term = dir > 0 ? term * ax * std::exp(-static_cast<double>(n) * log_mod)
                     : term * std::exp(static_cast<double>(n - 1) * log_mod) / ax;
      n += dir;
      add(term);
      small = term <= tail_tol * (sum + comp) ? small + 1 : 0;
    }
  }
  return sum + comp;
}

// x = q^k x0 with 1 <= |x0| < |q|.
long reduce(cplx x, const QParameter& q, cplx& x0) {
  long k = static_cast<long>(std::floor(std::log(std::abs(x)) / q.log_modulus()));
  x0 = unscale(x, qpow(q.value(), k));
  return k;
}

}  // namespace

double QParameter::angle() const {
  if (b) return 2.0 * std::numbers::pi / (static_cast<double>(*b) * r2);
  return explicit_angle.value_or(0.0);
}

cplx QParameter::value() const {
  double th = angle();
  if (b && *b * r2 == 1) return {modulus, 0.0};
  if (th == 0.0) return {modulus, 0.0};
  return std::polar(modulus, th);
}

double QParameter::log_modulus() const { return std::log(modulus); }

SpiralGrid::SpiralGrid(std::vector<cplx> base_points, int l_min, int l_max, int H)
    : base_(std::move(base_points)), l_min_(l_min), l_max_(l_max), H_(H) {
  if (l_max < l_min || H < 0) throw std::invalid_argument("empty spiral grid window");
  data_.assign(base_.size() * static_cast<std::size_t>(l_max - l_min + 1) * static_cast<std::size_t>(H + 1),
               cplx{});
}

bool SpiralGrid::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

cplx theta_eval(cplx x, const QParameter& q, double tail_tol) {
  if (x == cplx{}) throw DomainError("theta_eval: x = 0");
  if (!(tail_tol > 0)) throw std::invalid_argument("theta_eval: tail_tol must be > 0");
  const cplx lq = log_q(q);
  const cplx qv = q.value();
  const cplx lx = std::log(x);
  long peak = std::lround(std::log(std::abs(x)) / q.log_modulus() + 0.5);
  cplx first = std::exp(-0.5 * static_cast<double>(peak) * static_cast<double>(peak - 1) * lq +
                        static_cast<double>(peak) * lx);
  KahanSum sum;
  sum.add(first);
  double max_term = std::abs(first);
  const double floor_rel = std::numeric_limits<double>::epsilon() * 1e-2;
  for (int dir : {1, -1}) {
    cplx term = first;
    long n = peak;
    int small = 0;
    int step = 0;
    for (; step < kThetaSideCap && small < kSmallRun; ++step) {
      term = dir > 0 ? unscale(term * x, qpow(qv, n)) : scale(term, qpow(qv, n - 1)) / x;
      n += dir;
      sum.add(term);
      double a = std::abs(term);
      max_term = std::max(max_term, a);
      bool tiny = a <= tail_tol * std::abs(sum.value()) || a <= floor_rel * max_term;
      small = tiny ? small + 1 : 0;
    }
    if (small < kSmallRun) throw TruncationWindowError("theta_eval: series did not settle", std::abs(term));
  }
  return sum.value();
}

cplx log_inv_theta_shift(long m, cplx y, cplx theta_y, const QParameter& q) {
  double mm = static_cast<double>(m);
  return -(0.5 * mm * (mm + 1.0) * log_q(q) + mm * std::log(y) + std::log(theta_y));
}

double theta_lower_envelope(int m, cplx lambda, cplx t, const QParameter& q, double delta, double tail_tol) {
  if (t == cplx{}) throw DomainError("theta_lower_envelope: t = 0");
  double ax = std::abs(lambda / t) * std::exp(static_cast<double>(m) * q.log_modulus());
  return delta * real_theta(ax, q.log_modulus(), tail_tol);
}

DomainCheck in_spiral_domain(cplx t, const DomainSpec& d, const QParameter& q, double tail_tol) {
  if (t == cplx{}) throw DomainError("in_spiral_domain: t = 0");
  const double lm = q.log_modulus();
  const cplx y = d.lambda / t;
  double kstar = std::log(std::abs(y)) / lm;
  long below, above;
  if (d.k_window > 0) {
    below = above = d.k_window;
  } else {
    // Past k* + above the perturbation |y q^{-k}| is below tail_tol; before
    // k* - below it exceeds 2, so the value is at least 1 there.
    above = static_cast<long>(std::ceil(std::log(1.0 / tail_tol) / lm)) + 1;
    below = static_cast<long>(std::ceil(std::log(2.0) / lm)) + 1;
  }
  long k_lo = static_cast<long>(std::floor(kstar)) - below;
  long k_hi = static_cast<long>(std::ceil(kstar)) + above;
  const cplx qv = q.value();
  double margin = 1.0;
  for (long k = k_lo; k <= k_hi; ++k) margin = std::min(margin, std::abs(1.0 + unscale(y, qpow(qv, k))));
  DomainCheck out;
  out.margin = margin;
  out.inside = margin > d.delta && std::abs(t) < d.r0;
  return out;
}

cplx q_laplace_eval(const SpiralFunction& phi, cplx t, const DomainSpec& d, const QParameter& q,
                    double tail_tol, LaplaceWindow window) {
  DomainCheck dc = in_spiral_domain(t, d, q, tail_tol);
  if (!dc.inside) {
    std::ostringstream os;
    os << "q_laplace_eval: t = " << t << " is outside the spiral domain (margin " << dc.margin << ")";
    throw DomainError(os.str());
  }
  cplx y0;
  const long k0 = reduce(d.lambda / t, q, y0);
  const cplx inv_theta0 = 1.0 / theta_eval(y0, q, tail_tol);
  const cplx lq = log_q(q);
  const cplx ly0 = std::log(y0);
  auto kernel = [&](long m) {
    double n = static_cast<double>(m + k0);
    return std::exp(-(0.5 * n * (n + 1.0) * lq + n * ly0)) * inv_theta0;
  };

  long start = std::clamp(-k0, window.m_min, window.m_max);
  KahanSum sum;
  double last = 0;
  for (int dir : {1, -1}) {
    long m = dir > 0 ? start : start - 1;
    int small = 0;
    double prev = std::numeric_limits<double>::infinity();
    for (; small < kSmallRun; m += dir) {
      if (m > window.m_max || m < window.m_min) {
        std::ostringstream os;
        os << "q_laplace_eval: tail has not settled at the window edge m = " << (m - dir);
        throw TruncationWindowError(os.str(), last);
      }
      cplx term = phi(m) * kernel(m);
      sum.add(term);
      double a = std::abs(term);
      last = a;
      bool tiny = a <= tail_tol * std::abs(sum.value()) && a <= prev;
      small = tiny ? small + 1 : 0;
      prev = a;
    }
  }
  return sum.value();
}

SpiralFunction on_spiral(const std::function<cplx(cplx)>& f, cplx lambda, const QParameter& q) {
  const cplx qv = q.value();
  return [f, lambda, qv](long m) { return f(scale(lambda, qpow(qv, m))); };
}

double shift_identity_check(const std::function<cplx(cplx)>& phi, cplx t, const DomainSpec& d,
                            const QParameter& q, double tail_tol) {
  const cplx qv = q.value();
  auto mphi = [&phi](cplx tau) { return tau * phi(tau); };
  cplx lhs = q_laplace_eval(on_spiral(mphi, d.lambda, q), t, d, q, tail_tol);
  cplx rhs = t * q_laplace_eval(on_spiral(phi, d.lambda, q), qv * t, d, q, tail_tol);
  return std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
}

double measure_K1(const std::vector<int>& ms, const std::vector<cplx>& ts, const DomainSpec& d,
                  const QParameter& q, double tail_tol) {
  double best = std::numeric_limits<double>::infinity();
  for (cplx t : ts) {
    if (!in_spiral_domain(t, d, q, tail_tol).inside) continue;
    for (int m : ms) {
      // Both sides scale by |q|^{k(k+1)/2}|x0|^k under x = q^k x0, so compare reduced arguments.
      cplx x = scale(d.lambda / t, qpow(q.value(), m));
      cplx x0;
      reduce(x, q, x0);
      double ratio = std::abs(theta_eval(x0, q, tail_tol)) /
                     (d.delta * real_theta(std::abs(x0), q.log_modulus(), tail_tol));
      best = std::min(best, ratio);
    }
  }
  return best;
}

}  // namespace qdde
