#pragma once

#include <cstddef>
#include <functional>

#include "wdro/types.hpp"

namespace wdro {

struct ScalarMinimum {
    double x = 0.0;
    double value = 0.0;
    int evaluations = 0;
};

/// Golden-section search for a minimum of f on [lo, hi]. Stops when the
/// bracket is narrower than x_tol (absolute, in the units of x). Returns the
/// best point evaluated, endpoints included.
ScalarMinimum golden_section(const std::function<double(double)>& f, double lo, double hi, double x_tol,
                             int max_iter = 400);

struct SimplexOptions {
    double initial_step = 0.1;
    double f_tol = 1e-13;      // stop when simplex value spread falls below this (absolute + relative)
    double x_tol = 1e-10;      // and the simplex diameter falls below this
    int max_evaluations = 20000;
    int restarts = 3;          // re-seed the simplex around the best vertex this many times
};

struct SimplexResult {
    Vector x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
};

/// Nelder-Mead downhill simplex with restarts. Never returns a point worse
/// than the start.
SimplexResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& start,
                          const SimplexOptions& options = {});

/// Runs body(i) for i in [0, count) on up to `jobs` threads. Each index is
/// executed exactly once; callers write results into per-index slots.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

}  // namespace wdro
