#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "qdde/solver.hpp"
#include "support.hpp"

using namespace qdde;
using qdde::testing::example_problem;
using qdde::testing::random_problem;
using qdde::testing::rel_err;

namespace {

// W_h(tau) = q^{-h(h-1)/2} / prod_{j=1}^{h} (1 + j^{r1} tau) for the example problem.
cplx example_W(int h, cplx tau, int r1) {
  cplx den = 1.0;
  for (int j = 1; j <= h; ++j) den *= 1.0 + std::pow(double(j), r1) * tau;
  return 1.0 / (qpow_tri(2.0, h) * den);
}

}  // namespace

TEST_CASE("invariants reject malformed problems") {
  ProblemSpec p = example_problem();
  p.r2 = 0;
  p.q.r2 = 0;
  try {
    p.check_invariants();
    FAIL("r2 = 0 accepted");
  } catch (const ProblemError& e) {
    CHECK(e.field == "r2");
    CHECK(std::string(e.what()).find("r2 ≥ 1") != std::string::npos);
  }
  p = example_problem();
  p.domain.lambda = 2.0;  // outside the hull of V
  CHECK_THROWS_AS(p.check_invariants(), ProblemError);
  p = example_problem();
  p.trunc.M = 60;  // q^{M(M-1)/2} overflows
  CHECK_THROWS_AS(p.check_invariants(), ProblemError);
  p = example_problem();
  p.initial.clear();
  CHECK_THROWS_AS(p.check_invariants(), ProblemError);
}

TEST_CASE("formal solution of the example: spot values and closed form") {
  const ProblemSpec p = example_problem();
  const BivariateSeries F = solve_formal(p);
  CHECK(F(1, 1) == cplx(-1.0));
  CHECK(F(2, 1) == cplx(2.0));
  CHECK(F(0, 2) == cplx(0.5));
  // Frozen from the closed form (-1)^n q^{n(n-1)/2} q^{-h(h-1)/2} S(n+h, h).
  CHECK(rel_err(F(3, 2), -60.0) < 1e-15);
  CHECK(rel_err(F(5, 4), -124320.0) < 1e-15);
  CHECK(residual_formal(p, F) <= 1e-12);
}

TEST_CASE("formal solution with Borel-side initial data matches the t-side one") {
  ProblemSpec p = example_problem();
  ProblemSpec b = p;
  b.initial[0].side = InitialDatum::Side::borel;
  const BivariateSeries F = solve_formal(p), G = solve_formal(b);
  for (int m = 0; m <= F.M(); ++m)
    for (int h = 0; h <= F.H(); ++h) CHECK(F(m, h) == G(m, h));
}

TEST_CASE("property: uniqueness and sensitivity of the triangular system") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    ProblemSpec p = random_problem(rng);
    const BivariateSeries A = solve_formal(p), B = solve_formal(p);
    for (int m = 0; m <= A.M(); ++m)
      for (int h = 0; h <= A.H(); ++h) REQUIRE(A(m, h) == B(m, h));
    ProblemSpec pert = p;
    pert.initial[0].coeffs[0] += 1e-3;
    const BivariateSeries C = solve_formal(pert);
    bool changed = false;
    for (int m = 0; m <= A.M() && !changed; ++m)
      for (int h = 0; h <= A.H() && !changed; ++h) changed = A(m, h) != C(m, h);
    CHECK(changed);
  }
}

TEST_CASE("property: residual and Borel equivalence on random (A)+(A2) problems") {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 25; ++trial) {
    ProblemSpec p = random_problem(rng);
    CAPTURE(trial);
    const AssumptionReport rep = validate(p);
    CHECK(rep.A_ok);
    CHECK(rep.A2_ok);
    const BivariateSeries F = solve_formal(p);
    CHECK(residual_formal(p, F) <= 1e-12);
    const TaylorResult tr = wh_taylor(p);
    CHECK(tr.discrepancy <= 1e-10);
  }
}

TEST_CASE("assumption report of the example") {
  const AssumptionReport rep = validate(example_problem());
  CHECK(rep.A_ok);
  CHECK(rep.A2_ok);
  CHECK(rep.B_ok);
  CHECK(rep.geometry_ok);
  CHECK(rep.spectral_gap == doctest::Approx(1.0));
  CHECK(rep.T1 == doctest::Approx(2.0));
  CHECK(rep.r_coupling == 1.0);
}

TEST_CASE("assumption (A) failure names the offending pair") {
  ProblemSpec p = example_problem();
  p.terms[0].m1 = 0;
  const AssumptionReport rep = validate(p);
  CHECK_FALSE(rep.A_ok);
  bool found = false;
  for (const auto& w : rep.A_witnesses)
    if (!w.ok && w.k == 0 && w.s == 0) found = true;
  CHECK(found);
}

TEST_CASE("spectral gap sees the small divisor on the negative axis") {
  ProblemSpec p = example_problem();
  p.domain.V_sample = {-0.9, -1.1, {-1.0, 0.1}, {-1.0, -0.1}};
  p.domain.lambda = -1.0;
  const GapResult g = spectral_gap(p, spiral_base_points(p), p.trunc.H);
  CHECK(g.value < 0.2);
}

TEST_CASE("spiral values of the example") {
  for (int r1 : {0, 1}) {
    const ProblemSpec p = example_problem(r1);
    const AssumptionReport rep = validate(p);
    const SpiralGrid W = wh_spiral(p, rep);
    CHECK(W.all_finite());
    if (r1 == 1) {
      CHECK(W(0, 0, 1) == cplx(0.5));
      CHECK(std::abs(W(0, 1, 1) - 1.0 / 3.0) < 1e-16);
    }
    for (std::size_t xi = 0; xi < W.base_points().size(); ++xi)
      for (int l = -10; l <= 10; ++l)
        for (int h = 0; h <= 8; ++h) {
          const cplx tau = W.base_points()[xi] * std::pow(2.0, l);
          CHECK(rel_err(W(xi, l, h), example_W(h, tau, r1)) <= 1e-12);
        }
  }
}

TEST_CASE("Taylor route reproduces 1/(1+tau) on the first disc") {
  const ProblemSpec p = example_problem();
  const TaylorResult tr = wh_taylor(p);
  CHECK(tr.discrepancy <= 1e-10);
  const UnivariateSeries W1 = tr.coeffs.column(1);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> rad(0.0, 0.25), ang(-3.14159, 3.14159);
  for (int i = 0; i < 20; ++i) {
    const cplx tau = std::polar(rad(rng), ang(rng));
    CHECK(std::abs(W1.eval(tau) - 1.0 / (1.0 + tau)) <= 1e-12);
  }
}

TEST_CASE("evaluation: moment formula, linearity and the t -> 0 limit") {
  const ProblemSpec p = example_problem();
  const AssumptionReport rep = validate(p);
  const SpiralGrid W = wh_spiral(p, rep);
  for (cplx t : {cplx(0.05), cplx(0.3), std::polar(0.2, 0.6)}) {
    const EvalResult r = evaluate_X(p, W, t, 0.0);
    CHECK(std::abs(r.value - 1.0) <= 1e-8);
  }
  ProblemSpec twice = p;
  twice.initial[0].coeffs[0] *= 2.0;
  const SpiralGrid W2 = wh_spiral(twice, validate(twice));
  const cplx x1 = evaluate_X(p, W, 0.2, 1.0).value, x2 = evaluate_X(twice, W2, 0.2, 1.0).value;
  CHECK(std::abs(x2 - 2.0 * x1) <= 1e-12 * std::abs(x2));

  const BivariateSeries F = solve_formal(p);
  cplx limit = 0;
  double fact = 1;
  for (int h = 0; h <= F.H(); ++h) {
    if (h > 0) fact *= h;
    limit += F(0, h) / fact;
  }
  double prev = 1e300;
  for (double r : {1e-1, 1e-2, 1e-3}) {
    const double d = std::abs(evaluate_X(p, W, r, 1.0).value - limit);
    CHECK(d < prev);
    prev = d;
  }
  CHECK(prev < 1e-2);
}

TEST_CASE("evaluation outside the domain is rejected") {
  const ProblemSpec p = example_problem();
  const SpiralGrid W = wh_spiral(p, validate(p));
  CHECK_THROWS_AS(evaluate_X(p, W, -0.5, 0.0), DomainError);
}
