#pragma once

#include <utility>
#include <vector>

#include "qdde/core.hpp"

namespace qdde {

// Truncated power series c_0 + c_1 t + ... + c_M t^M.
struct UnivariateSeries {
  std::vector<cplx> coeffs;

  UnivariateSeries() = default;
  explicit UnivariateSeries(int order) : coeffs(static_cast<std::size_t>(order) + 1) {}
  explicit UnivariateSeries(std::vector<cplx> c);

  int order() const { return static_cast<int>(coeffs.size()) - 1; }
  cplx operator[](int m) const { return coeffs[static_cast<std::size_t>(m)]; }
  cplx& operator[](int m) { return coeffs[static_cast<std::size_t>(m)]; }
  cplx eval(cplx t) const;
};

// Dense grid f_{m,h}, 0 <= m <= M, 0 <= h <= H, for the series
// sum f_{m,h} t^m z^h / h!. The stored value never includes the 1/h!.
class BivariateSeries {
 public:
  BivariateSeries() = default;
  BivariateSeries(int M, int H);

  int M() const { return M_; }
  int H() const { return H_; }
  cplx operator()(int m, int h) const { return data_[idx(m, h)]; }
  cplx& operator()(int m, int h) { return data_[idx(m, h)]; }

  UnivariateSeries column(int h) const;
  void set_column(int h, const UnivariateSeries& s);
  double max_abs() const;
  bool all_finite() const;

 private:
  std::size_t idx(int m, int h) const {
    return static_cast<std::size_t>(h) * static_cast<std::size_t>(M_ + 1) + static_cast<std::size_t>(m);
  }
  int M_ = -1, H_ = -1;
  std::vector<cplx> data_;
};

// sum_s b_s z^s with strictly increasing degrees.
struct Polynomial {
  std::vector<std::pair<int, cplx>> terms;

  Polynomial() = default;
  explicit Polynomial(std::vector<std::pair<int, cplx>> t);
  cplx coeff(int s) const;
  int degree() const { return terms.empty() ? -1 : terms.back().first; }
};

// P(z) F(t,z): z^s sends (m,h) to (m,h+s) with weight (h+s)!/h!.
BivariateSeries mul_poly_z(const Polynomial& P, const BivariateSeries& F);

// (t sigma_q)^p: c_m t^m -> q^{p m + p(p-1)/2} c_m t^{m+p}.
UnivariateSeries dilate_t(const UnivariateSeries& f, cplx q, int p);
BivariateSeries dilate_t(const BivariateSeries& F, cplx q, int p);

// (z d/dz + 1)^r: row h scaled by (h+1)^r.
BivariateSeries euler_z(const BivariateSeries& F, int r);

// d^k/dz^k: g_{m,h} = f_{m,h+k}; the result has H' = H - k.
BivariateSeries diff_z(const BivariateSeries& F, int k);

// z -> z q^{-m1}: g_{m,h} = q^{-m1 h} f_{m,h}.
BivariateSeries scale_z(const BivariateSeries& F, cplx q, int m1);

// f_n -> f_n / q^{n(n-1)/2} and its inverse.
UnivariateSeries borel_q_formal(const UnivariateSeries& f, cplx q);
UnivariateSeries laplace_q_formal(const UnivariateSeries& g, cplx q);

}  // namespace qdde
