#include "qdde/core.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qdde {

namespace {

template <class T>
T pow_nonneg(T base, unsigned long e) {
  T acc(1);
  while (e) {
    if (e & 1u) acc *= base;
    e >>= 1u;
    if (e) base *= base;
  }
  return acc;
}

}  // namespace

cplx qpow(cplx q, long n) {
  if (q.imag() == 0.0) return qpow(q.real(), n);
  cplx p = pow_nonneg(q, static_cast<unsigned long>(n < 0 ? -n : n));
  return n < 0 ? 1.0 / p : p;
}

double qpow(double q, long n) {
  double p = pow_nonneg(q, static_cast<unsigned long>(n < 0 ? -n : n));
  return n < 0 ? 1.0 / p : p;
}

cplx qpow_tri(cplx q, long n) {
  long e = n * (n - 1) / 2;
  return qpow(q, e);
}

double qpow_tri(double q, long n) { return qpow(q, n * (n - 1) / 2); }

void KahanSum::add(cplx x) {
  auto step = [](double& s, double& c, double v) {
    double t = s + v;
    if (std::abs(s) >= std::abs(v))
      c += (s - t) + v;
    else
      c += (v - t) + s;
    s = t;
  };
  step(re_, cre_, x.real());
  step(im_, cim_, x.imag());
}

unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("QDDE_THREADS")) {
    long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) hw = std::min<unsigned>(hw, static_cast<unsigned>(cap));
  }
  return hw;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  unsigned workers = std::min<std::size_t>(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mu);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

}  // namespace qdde
