#pragma once

#include <string>
#include <vector>

#include "qdde/qlaplace.hpp"
#include "qdde/series.hpp"

namespace qdde {

// b_k(z) (t sigma_q)^{m0} (d_z^k X)(t, z q^{-m1}) on the right-hand side.
struct OperatorTerm {
  int k = 0;
  int m0 = 0;
  int m1 = 0;
  Polynomial b;
};

// Initial datum for z-derivative order j, as a finite coefficient list on
// the t-side (X_j) or on the Borel side (W_j).
struct InitialDatum {
  enum class Side { t, borel };
  int j = 0;
  Side side = Side::t;
  std::vector<cplx> coeffs;
};

struct Truncation {
  int M = 24;
  int H = 24;
  int l_min = -40;
  int l_max = 40;
  double tail_tol = 1e-16;
};

struct FitConfig {
  int N = 12;
  int t_rays = 3;
  int t_points = 16;
};

struct ProblemSpec {
  QParameter q;
  int S = 1;
  int r1 = 0;
  int r2 = 1;
  std::vector<OperatorTerm> terms;
  std::vector<InitialDatum> initial;
  DomainSpec domain;
  bool r0_auto = false;
  double epsilon_sector = 0.1;
  std::vector<double> T0;  // per-j initial radii; empty means 1 for every j
  Truncation trunc;
  FitConfig fit;

  // Throws ProblemError on violated structural invariants.
  void check_invariants() const;
  double T0_of(int j) const;
  const InitialDatum& initial_for(int j) const;
};

// Borel-side coefficients of W_j (finite list, order-independent).
std::vector<cplx> initial_borel_coeffs(const ProblemSpec& p, int j);
// t-side coefficients of X_j.
std::vector<cplx> initial_t_coeffs(const ProblemSpec& p, int j);

struct Interval {
  double lo = 0;
  double hi = -1;
  bool empty() const { return !(lo <= hi); }
};

struct Witness {
  int k = 0;
  int s = 0;
  int j = -1;
  std::string inequality;
  double lhs = 0;
  double rhs = 0;
  bool ok = true;
};

struct AssumptionReport {
  bool A_ok = true;
  bool A2_ok = true;
  bool B_ok = false;
  std::vector<Witness> A_witnesses;
  std::vector<Witness> A2_witnesses;
  Interval T_set;
  Interval T1_set;
  double T1 = 0;  // the chosen point of T_set for which T1_set is non-empty
  bool geometry_ok = false;
  std::string geometry_mode;
  double spectral_gap = 0;
  bool spectral_gap_approximate = false;
  std::vector<double> disc_radii;
  double r_coupling = 1;  // max over base points and terms of |x|^{m0}
  std::vector<std::string> notes;

  bool all_ok() const { return A_ok && A2_ok && B_ok && geometry_ok; }
};

// All spiral base points: lambda first, then the V sample.
std::vector<cplx> spiral_base_points(const ProblemSpec& p);

struct GapResult {
  double value = 0;
  bool approximate = false;
};

// inf over x, l, h of |(h+1)^{r1} x^{r2} q^{r2 l} + 1|.
GapResult spectral_gap(const ProblemSpec& p, const std::vector<cplx>& points, int h_max);

AssumptionReport validate(const ProblemSpec& p);

BivariateSeries solve_formal(const ProblemSpec& p);

double residual_formal(const ProblemSpec& p, const BivariateSeries& F);

struct TaylorResult {
  BivariateSeries coeffs;  // Taylor coefficients of W_h, from the tau-recursion
  BivariateSeries from_formal;
  double discrepancy = 0;
};

// Taylor coefficients of W_h up to order M by the tau-recursion alone.
BivariateSeries wh_taylor_direct(const ProblemSpec& p, int M, int H);

// Both routes, compared; throws ConsistencyError beyond 1e-8.
TaylorResult wh_taylor(const ProblemSpec& p);

// Per-coefficient relative discrepancy with a column-scale floor.
double taylor_discrepancy(const BivariateSeries& a, const BivariateSeries& b);

SpiralGrid wh_spiral(const ProblemSpec& p, const AssumptionReport& report);

struct EvalResult {
  cplx value;
  double h_tail = 0;  // modulus of the last included h-term
};

EvalResult evaluate_X(const ProblemSpec& p, const SpiralGrid& W, cplx t, cplx z);

// L(W_h)(t) from the lambda column of the spiral grid.
cplx laplace_of_column(const ProblemSpec& p, const SpiralGrid& W, int h, cplx t);

}  // namespace qdde
