#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "qdde/core.hpp"

namespace qdde {

// q = |q| e^{i theta}; with b set, theta = 2 pi / (b r2).
struct QParameter {
  double modulus = 2.0;
  std::optional<int> b;
  std::optional<double> explicit_angle;
  int r2 = 1;

  double angle() const;
  cplx value() const;
  double log_modulus() const;
};

struct DomainSpec {
  cplx lambda{1.0, 0.0};
  double delta = 0.5;
  double r0 = 1.0;
  std::vector<cplx> V_sample;
  int k_window = 0;  // 0: derived from tail_tol
};

// Values W_h(x q^l) for x in base_points, l in [l_min, l_max], h in [0, H].
class SpiralGrid {
 public:
  SpiralGrid() = default;
  SpiralGrid(std::vector<cplx> base_points, int l_min, int l_max, int H);

  const std::vector<cplx>& base_points() const { return base_; }
  int l_min() const { return l_min_; }
  int l_max() const { return l_max_; }
  int H() const { return H_; }
  cplx operator()(std::size_t xi, int l, int h) const { return data_[idx(xi, l, h)]; }
  cplx& operator()(std::size_t xi, int l, int h) { return data_[idx(xi, l, h)]; }
  bool all_finite() const;

 private:
  std::size_t idx(std::size_t xi, int l, int h) const {
    std::size_t nl = static_cast<std::size_t>(l_max_ - l_min_ + 1);
    return (xi * nl + static_cast<std::size_t>(l - l_min_)) * static_cast<std::size_t>(H_ + 1) +
           static_cast<std::size_t>(h);
  }
  std::vector<cplx> base_;
  int l_min_ = 0, l_max_ = -1, H_ = -1;
  std::vector<cplx> data_;
};

// Theta(x) = sum_n q^{-n(n-1)/2} x^n, summed outward from the largest term.
cplx theta_eval(cplx x, const QParameter& q, double tail_tol);

// log(1/Theta(q^m y)) from Theta(y), via Theta(q^m y) = q^{m(m+1)/2} y^m Theta(y).
cplx log_inv_theta_shift(long m, cplx y, cplx theta_y, const QParameter& q);

// delta * sum_n |q|^{-n(n-1)/2} |q^m lambda / t|^n.
double theta_lower_envelope(int m, cplx lambda, cplx t, const QParameter& q, double delta,
                            double tail_tol = 1e-17);

struct DomainCheck {
  bool inside = false;
  double margin = 0;  // inf over k of |1 + lambda/(t q^k)|
};

DomainCheck in_spiral_domain(cplx t, const DomainSpec& d, const QParameter& q, double tail_tol = 1e-16);

// phi(m) is the value of the function at q^m lambda.
using SpiralFunction = std::function<cplx(long m)>;

struct LaplaceWindow {
  long m_min = -400;
  long m_max = 400;
};

// sum_m phi(q^m lambda) / Theta(q^m lambda / t).
cplx q_laplace_eval(const SpiralFunction& phi, cplx t, const DomainSpec& d, const QParameter& q,
                    double tail_tol, LaplaceWindow window = {});

// Evaluator for a closed form phi(tau) on the spiral through lambda.
SpiralFunction on_spiral(const std::function<cplx(cplx)>& f, cplx lambda, const QParameter& q);

// |L(tau phi)(t) - t L(phi)(q t)| / max(1, |L(tau phi)(t)|).
double shift_identity_check(const std::function<cplx(cplx)>& phi, cplx t, const DomainSpec& d,
                            const QParameter& q, double tail_tol);

// Empirical K1: min over the (m, t) grid of |Theta(q^m lambda/t)| / envelope.
double measure_K1(const std::vector<int>& ms, const std::vector<cplx>& ts, const DomainSpec& d,
                  const QParameter& q, double tail_tol);

}  // namespace qdde
