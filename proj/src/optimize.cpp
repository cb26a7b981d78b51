#include "wdro/optimize.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>
#include <vector>

namespace wdro {

ScalarMinimum golden_section(const std::function<double(double)>& f, double lo, double hi, double x_tol,
                             int max_iter) {
    require(lo <= hi, "golden_section: empty bracket");
    constexpr double inv_phi = 0.6180339887498948482045868343656381177203;
    ScalarMinimum best;
    best.value = std::numeric_limits<double>::infinity();
    auto eval = [&](double x) {
        double v = f(x);
        ++best.evaluations;
        if (v < best.value) {
            best.value = v;
            best.x = x;
        }
        return v;
    };
    eval(lo);
    eval(hi);
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = eval(c), fd = eval(d);
    for (int it = 0; it < max_iter && (b - a) > x_tol; ++it) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d);
        }
    }
    return best;
}

namespace {

struct Simplex {
    std::vector<Vector> points;
    std::vector<double> values;

    void sort() {
        std::vector<std::size_t> idx(points.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
        std::vector<Vector> p;
        std::vector<double> v;
        for (std::size_t i : idx) {
            p.push_back(std::move(points[i]));
            v.push_back(values[i]);
        }
        points = std::move(p);
        values = std::move(v);
    }

    double diameter() const {
        double d = 0.0;
        for (std::size_t i = 1; i < points.size(); ++i)
            d = std::max(d, (points[i] - points[0]).lpNorm<Eigen::Infinity>());
        return d;
    }
};

// One Nelder-Mead run with the dimension-adaptive coefficients of Gao & Han.
SimplexResult nelder_mead_once(const std::function<double(const Vector&)>& f, const Vector& start,
                               double start_value, double step, const SimplexOptions& opt, int budget) {
    const auto n = static_cast<double>(start.size());
    const double alpha = 1.0;
    const double beta = n > 1 ? 1.0 + 2.0 / n : 2.0;
    const double gamma = n > 1 ? 0.75 - 1.0 / (2.0 * n) : 0.5;
    const double delta = n > 1 ? 1.0 - 1.0 / n : 0.5;

    int evals = 0;
    auto eval = [&](const Vector& x) {
        ++evals;
        double v = f(x);
        return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
    };

    Simplex s;
    s.points.push_back(start);
    s.values.push_back(start_value);
    for (Eigen::Index i = 0; i < start.size(); ++i) {
        Vector p = start;
        p[i] += (start[i] != 0.0 ? step * std::max(1.0, std::abs(start[i])) : step);
        s.points.push_back(p);
        s.values.push_back(eval(p));
    }

    bool converged = false;
    while (evals < budget) {
        s.sort();
        const double spread = s.values.back() - s.values.front();
        if (spread <= opt.f_tol * (1.0 + std::abs(s.values.front())) && s.diameter() <= opt.x_tol) {
            converged = true;
            break;
        }
        const std::size_t worst = s.points.size() - 1;
        Vector centroid = Vector::Zero(start.size());
        for (std::size_t i = 0; i < worst; ++i) centroid += s.points[i];
        centroid /= static_cast<double>(worst);

        Vector xr = centroid + alpha * (centroid - s.points[worst]);
        double fr = eval(xr);
        if (fr < s.values.front()) {
            Vector xe = centroid + beta * (xr - centroid);
            double fe = eval(xe);
            if (fe < fr) {
                s.points[worst] = xe;
                s.values[worst] = fe;
            } else {
                s.points[worst] = xr;
                s.values[worst] = fr;
            }
            continue;
        }
        if (fr < s.values[worst - 1]) {
            s.points[worst] = xr;
            s.values[worst] = fr;
            continue;
        }
        const bool outside = fr < s.values[worst];
        Vector xc = outside ? Vector(centroid + gamma * (xr - centroid))
                            : Vector(centroid - gamma * (centroid - s.points[worst]));
        double fc = eval(xc);
        if (fc < (outside ? fr : s.values[worst])) {
            s.points[worst] = xc;
            s.values[worst] = fc;
            continue;
        }
        for (std::size_t i = 1; i < s.points.size(); ++i) {
            s.points[i] = s.points[0] + delta * (s.points[i] - s.points[0]);
            s.values[i] = eval(s.points[i]);
        }
    }
    s.sort();
    return SimplexResult{s.points.front(), s.values.front(), evals, converged};
}

}  // namespace

SimplexResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& start,
                          const SimplexOptions& options) {
    require(start.size() >= 1, "nelder_mead: empty start vector");
    SimplexResult best{start, f(start), 1, false};
    if (std::isnan(best.value)) best.value = std::numeric_limits<double>::infinity();
    double step = options.initial_step;
    for (int round = 0; round <= options.restarts && best.evaluations < options.max_evaluations; ++round) {
        const int budget = options.max_evaluations - best.evaluations;
        SimplexResult r = nelder_mead_once(f, best.x, best.value, step, options, budget);
        best.evaluations += r.evaluations;
        const bool improved = r.value < best.value;
        if (improved) {
            best.x = r.x;
            best.value = r.value;
        }
        best.converged = r.converged;
        // A restart that changes nothing at a small step means we're done.
        if (!improved && r.converged && round > 0) break;
        step = std::max(options.x_tol * 10.0, step * 0.1);
    }
    return best;
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
    std::vector<std::exception_ptr> errors(count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        body(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        pool.clear();
    }
    // Lowest failing index wins so the reported error does not depend on scheduling.
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace wdro
