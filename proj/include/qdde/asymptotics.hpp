#pragma once

#include <vector>

#include "qdde/majorant.hpp"
#include "qdde/qlaplace.hpp"
#include "qdde/series.hpp"
#include "qdde/solver.hpp"

namespace qdde {

// Gamma(r1 (n+1) / r2) for r1 >= 1, exactly 1 for r1 = 0. Integer arguments use a factorial.
double gamma_factor(int n, int r1, int r2);
double log_gamma_factor(int n, int r1, int r2);

// Log-spaced moduli in [1e-3 t_max, t_max], t_max = 0.9 min(r0, |lambda|), on rays
// arg(lambda) + linspace(-pi/4, pi/4); points outside the domain are dropped.
std::vector<cplx> t_samples(const ProblemSpec& p, int rays, int points);

enum class RemainderRoute {
  stable,  // Laplace transform of W_h minus its Taylor polynomial, tail series near 0
  naive    // X(t, z) minus the partial sums of the formal solution
};

struct RemainderProfile {
  int N = 0;
  cplx z;
  std::vector<cplx> t;
  std::vector<std::vector<double>> R;  // R[n-1][ti]
  std::vector<double> rho;             // rho[n-1]
  std::vector<double> rho_no_gamma;    // same sup without the Gamma factor
  double h_tail = 0;                   // largest modulus of the last included h-term
  bool with_gamma = true;
};

// R_n(t) = |X(t,z) - sum_h sum_{m<n} f_{m,h} t^m z^h/h!| and
// rho_n = max_t R_n(t) / (|q|^{n(n-1)/2} |t|^n Gamma_factor(n)).
RemainderProfile remainder_profile(const ProblemSpec& p, const SpiralGrid& W, const BivariateSeries& F, cplx z,
                                   int N, const std::vector<cplx>& ts, RemainderRoute route = RemainderRoute::stable);

// Profile of a single Borel-side function given on the spiral and by its Taylor
// coefficients (all orders needed for the tail series), without any Gamma factor.
RemainderProfile single_series_profile(const ProblemSpec& p, const SpiralFunction& phi,
                                       const std::vector<cplx>& taylor, double radius, int N,
                                       const std::vector<cplx>& ts);

struct PerHFit {
  int h = 0;
  double B = 0;  // geometric rate in n
  double D = 0;  // prefactor
  double A = 0;  // Taylor-coefficient rate of W_h
  long m_h = 0;  // max{m : |q^m lambda| < 1 / (2 A)}
  bool degenerate = false;
};

struct FitReport {
  double C_tilde = 1;
  double D_tilde = 1;
  double C_fit = 1;  // exp(intercept) before lifting to an envelope
  double slope_residual = 0;
  int n_lo = 2;
  int n_hi = 0;              // largest n checked
  int envelope_violations = 0;  // n in [1, N] with rho_n > C_tilde D_tilde^n
  bool degenerate = false;   // every rho_n is zero: the expansion is exact
  bool with_gamma = true;

  std::vector<PerHFit> per_h;
  double B_exponent = 0;  // regression of log B(h) on log(h+1)
  double A1 = 0, A2 = 0, A3 = 0;
  bool per_h_ok = false;
};

// Least-squares affine fit of log rho_n over n in [2, N]; C_tilde is lifted by the
// largest positive residual so that the envelope holds on the fitted range.
FitReport gevrey_fit(const RemainderProfile& profile);

// Per-h fits of (B(h), D(h)) without the Gamma factor, the exponent of B(h) in h+1
// and the constants A1..A3 of B(h) = A1 (h+1)^e, D(h) = A2 (h+1)^e h! A3^h |q|^{-h^2/4}.
void per_h_constants(const ProblemSpec& p, const SpiralGrid& W, const BivariateSeries& F, int N,
                     const std::vector<cplx>& ts, FitReport& report, int h_max = -1);

struct GrowthFit {
  double T = 0;     // min over h of the per-h rates
  double logC = 0;  // max over h of the lifted intercepts
  int l_lo = 0, l_hi = 0;
  bool ok = false;
};

// Upper affine envelope of log w_{l,h} - (l^2/2) log|q| = logC - l log T over l in [l_lo, l_hi].
GrowthFit growth_fit(const WeightedGrid& w, double q_mod, int l_lo, int l_hi);

// |lambda| |q|^{1/2} T / |q|.
double auto_r0(const ProblemSpec& p, double T);

}  // namespace qdde
