#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "qdde/qlaplace.hpp"
#include "qdde/series.hpp"
#include "qdde/solver.hpp"

namespace qdde {

enum class SpaceKind { E, H };

// Non-negative coefficients v_{l,h} of sum v_{l,h} xi^l x^h / h!.
// E grids are Laurent in xi (any l window); H grids start at l = 0.
class WeightedGrid {
 public:
  WeightedGrid() = default;
  WeightedGrid(SpaceKind kind, int l_min, int l_max, int H);

  SpaceKind kind() const { return kind_; }
  int l_min() const { return l_min_; }
  int l_max() const { return l_max_; }
  int H() const { return H_; }
  double operator()(int l, int h) const { return v_[idx(l, h)]; }
  double& operator()(int l, int h) { return v_[idx(l, h)]; }
  bool same_shape(const WeightedGrid& o) const;
  double max_abs() const;
  const std::vector<double>& values() const { return v_; }

 private:
  std::size_t idx(int l, int h) const {
    return static_cast<std::size_t>(l - l_min_) * static_cast<std::size_t>(H_ + 1) + static_cast<std::size_t>(h);
  }
  SpaceKind kind_ = SpaceKind::E;
  int l_min_ = 0, l_max_ = -1, H_ = -1;
  std::vector<double> v_;
};

struct NormParams {
  double T = 1;
  double X = 1;
  double q_mod = 2;
};

// 1/4 l^2 + 1/2 l h - 1/2 h^2 for l >= 0, and -1/2 h^2 for l < 0.
double weight_P(int l, int h);

// sum |v| q^{-P(l,h)} T^l X^h / h!
double norm_E(const WeightedGrid& V, const NormParams& p);
// sum |v| T^l q^{h^2/2} X^h / h!
double norm_H(const WeightedGrid& V, const NormParams& p);
double norm_of(const WeightedGrid& V, const NormParams& p);

// Coefficients of the majorant equation d_x^S V = sum_k a_k(x) (d_x^k V)(q^{m0} xi, x / q^{m1}),
// with a_k(x) = sum_s a_{ks} x^s, a_{ks} >= 0. For the H-space the xi-dilation is
// replaced by multiplication with R(xi) = sum 2^{l+1} xi^l.
struct MajorantTerm {
  int k = 0;
  int m0 = 0;
  int m1 = 0;
  std::vector<std::pair<int, double>> a;
};

struct MajorantSystem {
  int S = 1;
  double q_mod = 2;
  std::vector<MajorantTerm> terms;
};

// a_{ks} = |b_{ks}| r / gap.
MajorantSystem e_system(const ProblemSpec& p, const AssumptionReport& rep);
// c_{ks} = |b_{ks}|, no xi-dilation.
MajorantSystem h_system(const ProblemSpec& p);

// A(V) = sum_k a_k(x) (d_x^{k-S} V)(q^{m0} xi, x / q^{m1}); images beyond H are dropped.
WeightedGrid apply_A(const WeightedGrid& V, const MajorantSystem& sys);
// B(V) = sum_k c_k(x) R(xi) (d_x^{k-S} V)(xi, x / q^{m1}).
WeightedGrid apply_B(const WeightedGrid& V, const MajorantSystem& sys);
// D(V) = d_x^S V - sum_k a_k(x) (d_x^k V)(q^{m0} xi, x / q^{m1}); result has H - S rows.
WeightedGrid apply_D(const WeightedGrid& V, const MajorantSystem& sys);

// Exact weighted-l1 operator norm: the largest image-to-basis weight ratio over the
// basis elements in the window, images taken without truncation.
double operator_norm_A(const MajorantSystem& sys, const NormParams& np, int l_min, int l_max, int H);
double operator_norm_B(const MajorantSystem& sys, const NormParams& np, int H);

// Norm of V -> x^s (d_x^{-h2} V)(q^{h1} xi, x / q^{m1}) from (T, X) into (T', X')
// over the basis elements of the window.
double term_operator_norm_E(int s, int h2, int h1, int m1, double q_mod, NormParams from, NormParams to,
                            int l_min, int l_max, int H);

enum class OperatorKind { A, B };

struct ContractionResult {
  double ratio = 0;  // max over samples of |op(V)| / |V|
  int samples_used = 0;
};

// Random sparse non-negative grids (<= 32 non-zeros, entries in [0, 1]).
ContractionResult contraction_ratio(OperatorKind op, const MajorantSystem& sys, const NormParams& np, int samples,
                                    int l_min, int l_max, int H, std::uint64_t seed);

struct XSearch {
  double X = 1;
  double op_norm = 0;
  int halvings = 0;
  bool ok = false;
};

// Halves X from X0 (at most 60 times) until the operator norm is <= 1/2.
XSearch search_X(OperatorKind op, const MajorantSystem& sys, NormParams np, int l_min, int l_max, int H,
                 double X0 = 1.0);

// w_{l,h} = max over base points of |W_h(x q^l)|.
WeightedGrid spiral_sup(const SpiralGrid& W);

// The E-majorant by its coefficient recursion, with v_{l,j} = w_{l,j} for j < S.
WeightedGrid solve_majorant_E(const ProblemSpec& p, const AssumptionReport& rep, const WeightedGrid& w);

struct NeumannResult {
  WeightedGrid V;               // d_x^{-S} U + I
  int iterations = 0;
  double max_increment_ratio = 0;  // largest |U_{n+1} - U_n| / |U_n - U_{n-1}|
  double residual = 0;          // max |D(V)| / max |D(I)|
};

// Fixed point U = A(U) - D(I), then V = d_x^{-S} U + I.
NeumannResult solve_majorant_E_neumann(const MajorantSystem& sys, const WeightedGrid& initial, const NormParams& np);

// The H-majorant in series form u_{n,h} = v_{n,h} / n!, from initial columns u_{n,j}.
WeightedGrid solve_majorant_H(const ProblemSpec& p, const WeightedGrid& initial);

// u_{n,j} = sup over the disc of radius 1/(2(j+1)^{r1/r2}) of |d^n W_j| / (n! (j+1)^{r1 n / r2}),
// bounded from the polynomial initial data.
WeightedGrid h_initial_columns(const ProblemSpec& p, int N);

struct DerivativeBound {
  double C1 = 0;
  double T1 = 0;
  double X1 = 0;
  double op_norm = 0;
  int violations = 0;
  double worst_ratio = 0;  // max |c_{n,j}| / bound
};

// C1 from the H-norm of the majorant; checks
// |c_{n,j}| <= C1 T1^{-n} X1^{-j} j! (j+1)^{r1 n/r2} |q|^{-j^2/2} on the coefficient grid.
DerivativeBound derivative_bound(const ProblemSpec& p, const BivariateSeries& taylor, int n_max, int j_max);

// Count of grid points with w > v.
int domination_violations(const WeightedGrid& w, const WeightedGrid& v, int l_lo, int l_hi, int h_hi);

}  // namespace qdde
