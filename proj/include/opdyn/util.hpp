#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>

namespace opdyn {

// Raised when an atom leaves the admissible region (y <= 0 or non-finite)
// during time integration.  Carries the step time and the offending atom.
struct IntegrationError : std::runtime_error {
    double time;
    std::size_t atom;
    IntegrationError(double t, std::size_t i, const std::string& msg)
        : std::runtime_error(msg), time(t), atom(i) {}
};

// Raised when a root bracket cannot be established or an iteration cap is hit.
struct SolveError : std::runtime_error {
    explicit SolveError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace util {

// Deterministic pairwise reduction.  Fixed association order, independent of
// thread count, so repeated runs produce bitwise-identical sums.
double pairwise_sum(const double* v, std::size_t n);

template <class F>
double pairwise_sum_f(std::size_t lo, std::size_t hi, F&& term) {
    const std::size_t n = hi - lo;
    if (n <= 16) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += term(i);
        return s;
    }
    const std::size_t mid = lo + n / 2;
    return pairwise_sum_f(lo, mid, term) + pairwise_sum_f(mid, hi, term);
}

// Worker cap: min(OPINION_THREADS, hardware_concurrency), at least 1.
unsigned worker_count();

// Static contiguous partition of [0, n).  Each chunk writes disjoint output
// slots, so results do not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

std::string format_double(double x);  // shortest round-trip decimal

}  // namespace util
}  // namespace opdyn
