#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "qdde/solver.hpp"

namespace qdde::testing {

// S=1, one term k=0, m0=0, m1=1, b = 1, X_0 = 1, q = 2, lambda = 1.
inline ProblemSpec example_problem(int r1 = 1) {
  ProblemSpec p;
  p.q.modulus = 2.0;
  p.q.b = 1;
  p.q.r2 = 1;
  p.S = 1;
  p.r1 = r1;
  p.r2 = 1;
  p.terms.push_back({0, 0, 1, Polynomial({{0, cplx{1.0, 0.0}}})});
  p.initial.push_back({0, InitialDatum::Side::t, {cplx{1.0, 0.0}}});
  p.domain.lambda = 1.0;
  p.domain.delta = 0.5;
  p.domain.r0 = 1.0;
  p.domain.V_sample = {0.8, 0.9, 1.0, 1.1, 1.2};
  p.T0 = {2.0};
  p.check_invariants();
  return p;
}

inline cplx random_complex(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng)};
}

// Random problem satisfying (A) and (A2) with S <= 3. Only the formal and Borel-side
// recursions are meaningful for it; the domain is left at the example's.
inline ProblemSpec random_problem(std::mt19937_64& rng, int M = 16, int H = 16) {
  std::uniform_int_distribution<int> S_d(1, 3), r1_d(0, 2), r2_d(1, 2), coin(0, 1), s_d(0, 2), len_d(1, 3);
  std::uniform_real_distribution<double> qm_d(1.5, 3.0);
  ProblemSpec p;
  p.S = S_d(rng);
  p.r1 = r1_d(rng);
  p.r2 = r2_d(rng);
  p.q.modulus = qm_d(rng);
  p.q.b = 1 + coin(rng) * 2;
  p.q.r2 = p.r2;
  for (int k = 0; k < p.S; ++k) {
    if (k > 0 && coin(rng)) continue;
    std::vector<std::pair<int, cplx>> b;
    const int s0 = s_d(rng);
    b.emplace_back(s0, random_complex(rng));
    if (coin(rng)) b.emplace_back(s0 + 1 + coin(rng), random_complex(rng));
    int s_min = b.front().first, s_max = b.back().first;
    const int m1 = s_max + p.S - k + coin(rng);
    std::uniform_int_distribution<int> m0_d(0, (s_min + p.S - k) / 2);
    p.terms.push_back({k, m0_d(rng), m1, Polynomial(std::move(b))});
  }
  for (int j = 0; j < p.S; ++j) {
    InitialDatum d{j, coin(rng) ? InitialDatum::Side::t : InitialDatum::Side::borel, {}};
    const int n = len_d(rng);
    for (int i = 0; i < n; ++i) d.coeffs.push_back(random_complex(rng));
    p.initial.push_back(std::move(d));
  }
  p.domain.lambda = 1.0;
  p.domain.V_sample = {0.8, 1.2};
  p.trunc.M = M;
  p.trunc.H = std::max(H, p.S);
  p.fit.N = std::min(p.fit.N, M);
  p.check_invariants();
  return p;
}

// Random points of the spiral domain with |t| in [1e-3, 0.9 r0] and |arg t| <= pi/3.
inline std::vector<cplx> random_domain_points(std::mt19937_64& rng, const ProblemSpec& p, int count) {
  std::uniform_real_distribution<double> lr(std::log(1e-3), std::log(0.9 * std::min(p.domain.r0, 1.0)));
  std::uniform_real_distribution<double> ang(-1.0471975511965976, 1.0471975511965976);
  std::vector<cplx> out;
  while (static_cast<int>(out.size()) < count) {
    const cplx t = std::polar(std::exp(lr(rng)), ang(rng));
    if (in_spiral_domain(t, p.domain, p.q, p.trunc.tail_tol).inside) out.push_back(t);
  }
  return out;
}

inline double rel_err(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace qdde::testing
