#include "qdde/series.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qdde {

namespace {

void require_finite(const std::vector<cplx>& c) {
  for (const auto& v : c)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw std::invalid_argument("series coefficient is not finite");
}

// (h+s)!/h! as a double.
double rising(int h, int s) {
  double r = 1.0;
  for (int i = 1; i <= s; ++i) r *= static_cast<double>(h + i);
  return r;
}

}  // namespace

UnivariateSeries::UnivariateSeries(std::vector<cplx> c) : coeffs(std::move(c)) {
  if (coeffs.empty()) throw std::invalid_argument("series needs at least one coefficient");
  require_finite(coeffs);
}

cplx UnivariateSeries::eval(cplx t) const {
  cplx acc = 0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * t + *it;
  return acc;
}

BivariateSeries::BivariateSeries(int M, int H) : M_(M), H_(H) {
  if (M < 0 || H < 0) throw std::invalid_argument("series truncation must be non-negative");
  data_.assign(static_cast<std::size_t>(M + 1) * static_cast<std::size_t>(H + 1), cplx{});
}

UnivariateSeries BivariateSeries::column(int h) const {
  UnivariateSeries s(M_);
  for (int m = 0; m <= M_; ++m) s[m] = (*this)(m, h);
  return s;
}

void BivariateSeries::set_column(int h, const UnivariateSeries& s) {
  for (int m = 0; m <= M_; ++m) (*this)(m, h) = m <= s.order() ? s[m] : cplx{};
}

double BivariateSeries::max_abs() const {
  double best = 0;
  for (const auto& v : data_) best = std::max(best, std::abs(v));
  return best;
}

bool BivariateSeries::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

Polynomial::Polynomial(std::vector<std::pair<int, cplx>> t) : terms(std::move(t)) {
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].first < 0) throw std::invalid_argument("polynomial degree must be >= 0");
    if (i > 0 && terms[i].first <= terms[i - 1].first)
      throw std::invalid_argument("polynomial degrees must be strictly increasing");
  }
}

cplx Polynomial::coeff(int s) const {
  for (const auto& [deg, c] : terms)
    if (deg == s) return c;
  return {};
}

BivariateSeries mul_poly_z(const Polynomial& P, const BivariateSeries& F) {
  BivariateSeries G(F.M(), F.H());
  for (const auto& [s, b] : P.terms) {
    for (int h = 0; h + s <= F.H(); ++h) {
      double w = rising(h, s);
      for (int m = 0; m <= F.M(); ++m) G(m, h + s) += b * w * F(m, h);
    }
  }
  return G;
}

UnivariateSeries dilate_t(const UnivariateSeries& f, cplx q, int p) {
  if (p < 0) throw std::invalid_argument("dilation power must be >= 0");
  UnivariateSeries g(f.order());
  for (int m = 0; m + p <= f.order(); ++m)
    g[m + p] = scale(f[m], qpow(q, static_cast<long>(p) * m + static_cast<long>(p) * (p - 1) / 2));
  return g;
}

BivariateSeries dilate_t(const BivariateSeries& F, cplx q, int p) {
  BivariateSeries G(F.M(), F.H());
  for (int h = 0; h <= F.H(); ++h) G.set_column(h, dilate_t(F.column(h), q, p));
  return G;
}

BivariateSeries euler_z(const BivariateSeries& F, int r) {
  if (r < 0) throw std::invalid_argument("Euler power must be >= 0");
  BivariateSeries G = F;
  for (int h = 0; h <= F.H(); ++h) {
    double w = std::pow(static_cast<double>(h + 1), r);
    for (int m = 0; m <= F.M(); ++m) G(m, h) *= w;
  }
  return G;
}

BivariateSeries diff_z(const BivariateSeries& F, int k) {
  if (k < 0) throw std::invalid_argument("derivative order must be >= 0");
  if (k > F.H()) throw std::invalid_argument("derivative order exceeds the z-truncation; result is empty");
  BivariateSeries G(F.M(), F.H() - k);
  for (int h = 0; h <= G.H(); ++h)
    for (int m = 0; m <= F.M(); ++m) G(m, h) = F(m, h + k);
  return G;
}

BivariateSeries scale_z(const BivariateSeries& F, cplx q, int m1) {
  BivariateSeries G = F;
  for (int h = 0; h <= F.H(); ++h) {
    cplx f = qpow(q, -static_cast<long>(m1) * h);
    for (int m = 0; m <= F.M(); ++m) G(m, h) = scale(G(m, h), f);
  }
  return G;
}

UnivariateSeries borel_q_formal(const UnivariateSeries& f, cplx q) {
  UnivariateSeries g(f.order());
  for (int n = 0; n <= f.order(); ++n) g[n] = unscale(f[n], qpow_tri(q, n));
  return g;
}

UnivariateSeries laplace_q_formal(const UnivariateSeries& g, cplx q) {
  UnivariateSeries f(g.order());
  for (int n = 0; n <= g.order(); ++n) f[n] = scale(g[n], qpow_tri(q, n));
  return f;
}

}  // namespace qdde
