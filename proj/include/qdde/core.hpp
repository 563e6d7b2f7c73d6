#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>

namespace qdde {

using cplx = std::complex<double>;

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// A bilateral sum did not settle inside its index window.
struct TruncationWindowError : std::runtime_error {
  TruncationWindowError(const std::string& what, double last_term)
      : std::runtime_error(what), last_term(last_term) {}
  double last_term;
};

struct SmallDivisorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Two independent computations of the same object disagree.
struct ConsistencyError : std::runtime_error {
  ConsistencyError(const std::string& what, double discrepancy)
      : std::runtime_error(what), discrepancy(discrepancy) {}
  double discrepancy;
};

struct ProblemError : std::invalid_argument {
  ProblemError(const std::string& field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field(field) {}
  std::string field;
};

// q^n by binary exponentiation; n may be negative.
cplx qpow(cplx q, long n);
double qpow(double q, long n);

// q^{n(n-1)/2}, the order-one q-Gevrey weight.
cplx qpow_tri(cplx q, long n);
double qpow_tri(double q, long n);

// Multiplies by a q-power, staying in real arithmetic when the factor is real.
inline cplx scale(cplx v, cplx f) { return f.imag() == 0.0 ? v * f.real() : v * f; }
inline cplx unscale(cplx v, cplx f) { return f.imag() == 0.0 ? v / f.real() : v / f; }

// Compensated (Neumaier) accumulation, applied per component.
class KahanSum {
 public:
  void add(cplx x);
  cplx value() const { return {re_ + cre_, im_ + cim_}; }

 private:
  double re_ = 0, im_ = 0, cre_ = 0, cim_ = 0;
};

// Worker count: hardware concurrency capped by QDDE_THREADS when set.
unsigned worker_count();

// Runs fn(i) for i in [0, n). Each index writes only its own output slot,
// so results do not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

double log_factorial(int n);

}  // namespace qdde
