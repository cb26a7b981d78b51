#include "wdro/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "wdro/rng.hpp"

namespace wdro::oracle {

EmpiricalDist EmpiricalDist::uniform(Matrix X, Vector y) {
    EmpiricalDist d;
    const auto m = X.rows();
    d.X = std::move(X);
    d.y = std::move(y);
    d.w = Vector::Constant(m, 1.0 / static_cast<double>(m));
    d.validate();
    return d;
}

void EmpiricalDist::validate() const {
    require(X.rows() >= 1, "EmpiricalDist: no atoms");
    require(y.size() == X.rows() && w.size() == X.rows(), "EmpiricalDist: X, y, w lengths differ");
    require((w.array() >= 0.0).all(), "EmpiricalDist: negative weight");
    require(std::abs(w.sum() - 1.0) <= 1e-12, "EmpiricalDist: weights must sum to 1");
}

double EmpiricalDist::empirical_risk(const Vector& theta) const {
    const Vector r = y - X * theta;
    return w.dot(r.cwiseAbs2());
}

linreg::LinRegSetting EmpiricalDist::moments(double eps) const {
    linreg::LinRegSetting s;
    s.sigma = X.transpose() * w.asDiagonal() * X;
    s.sigma = 0.5 * (s.sigma + s.sigma.transpose());
    s.v = X.transpose() * w.cwiseProduct(y);
    s.sigma_y2 = w.dot(y.cwiseAbs2());
    s.eps = eps;
    return s;
}

namespace {

double weighted_transport(const Vector& w, const Matrix& delta) {
    return std::sqrt(w.dot(delta.rowwise().squaredNorm()));
}

void project(const Vector& w, double eps, Matrix& delta) {
    const double cost = weighted_transport(w, delta);
    if (cost > eps) delta *= (cost > 0.0 ? eps / cost : 0.0);
}

double primal_value(const EmpiricalDist& dist, const Vector& theta, const Matrix& delta) {
    const Vector r = dist.y - (dist.X + delta) * theta;
    return dist.w.dot(r.cwiseAbs2());
}

}  // namespace

PrimalResult primal_ar_quadratic(const EmpiricalDist& dist, const Vector& theta, double eps, int iters,
                                 int restarts, std::uint64_t seed) {
    dist.validate();
    require(theta.size() == dist.dim(), "primal_ar_quadratic: dimension mismatch");
    require(eps >= 0.0, "primal_ar_quadratic: eps must be >= 0");
    const auto m = dist.size();
    const auto d = dist.dim();

    PrimalResult best;
    best.perturbations = Matrix::Zero(m, d);
    best.value = dist.empirical_risk(theta);
    const double t2 = theta.squaredNorm();
    if (eps == 0.0 || t2 == 0.0) return best;

    // Steps in the w-weighted geometry: per-atom ascent direction -2 r_i theta.
    const double step = 0.25 / t2;
    for (int restart = 0; restart < restarts; ++restart) {
        Matrix delta = Matrix::Zero(m, d);
        if (restart > 0) {
            Rng rng(derive_seed(seed, {stream::restart, static_cast<std::uint64_t>(restart)}));
            std::normal_distribution<double> normal;
            for (Eigen::Index i = 0; i < m; ++i)
                for (Eigen::Index j = 0; j < d; ++j) delta(i, j) = normal(rng);
            const double cost = weighted_transport(dist.w, delta);
            delta *= eps / cost;
        }
        double run_best = -1.0;
        Matrix run_delta = delta;
        for (int it = 0; it < iters; ++it) {
            const Vector r = dist.y - (dist.X + delta) * theta;
            delta -= (2.0 * step) * r * theta.transpose();
            project(dist.w, eps, delta);
            const double value = primal_value(dist, theta, delta);
            if (value > run_best) {
                run_best = value;
                run_delta = delta;
            } else if (value <= run_best * (1.0 + 1e-15)) {
                // Monotone ascent has stalled.
                if (it > 50) break;
            }
        }
        // Deterministic reduction: strictly greater wins, ties keep the earlier restart.
        if (run_best > best.value) {
            best.value = run_best;
            best.perturbations = run_delta;
        }
    }
    best.transport_cost = weighted_transport(dist.w, best.perturbations);
    return best;
}

DualResult dual_ar_quadratic(const EmpiricalDist& dist, const Vector& theta, double eps) {
    dist.validate();
    require(theta.size() == dist.dim(), "dual_ar_quadratic: dimension mismatch");
    require(eps >= 0.0, "dual_ar_quadratic: eps must be >= 0");
    const double t2 = theta.squaredNorm();
    auto surrogate_mean = [&](double gamma) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < dist.size(); ++i)
            s += dist.w[i] * linreg::robust_surrogate_phi(theta, gamma, dist.X.row(i).transpose(), dist.y[i]);
        return s;
    };
    if (t2 == 0.0) return {surrogate_mean(0.0), 0.0};
    if (eps == 0.0) {
        // The infimum is approached as gamma -> infinity.
        return {dist.empirical_risk(theta), std::numeric_limits<double>::infinity()};
    }
    // gamma = t2 + exp(s).
    auto f = [&](double s) {
        const double gamma = t2 + std::exp(s);
        return gamma * eps * eps + surrogate_mean(gamma);
    };
    const double center = std::log(t2);
    double lo = center - 40.0, hi = center + 40.0;
    const int points = 161;
    double best_s = lo, best_f = std::numeric_limits<double>::infinity();
    int best_k = 0;
    for (int k = 0; k < points; ++k) {
        const double s = lo + (hi - lo) * k / (points - 1);
        const double v = f(s);
        if (v < best_f) {
            best_f = v;
            best_s = s;
            best_k = k;
        }
    }
    const double h = (hi - lo) / (points - 1);
    const double a = best_k > 0 ? best_s - h : best_s;
    const double b = best_k < points - 1 ? best_s + h : best_s;
    const ScalarMinimum m = golden_section(f, a, b, 1e-11);
    if (m.value < best_f) {
        best_f = m.value;
        best_s = m.x;
    }
    return {best_f, t2 + std::exp(best_s)};
}

McEstimate mc_expected_phi(double a, double b, double gamma, std::int64_t n_samples, std::uint64_t seed) {
    require(n_samples >= 2, "mc_expected_phi: need at least 2 samples");
    require(b > 0.0 && gamma > 0.0, "mc_expected_phi: b and gamma must be > 0");
    Rng rng(seed);
    std::normal_distribution<double> normal;
    const double half_bg = 0.5 * b * gamma;
    const double upper = std::sqrt(2.0 / (b * gamma)) - a;
    double sum = 0.0, sum2 = 0.0;
    for (std::int64_t i = 0; i < n_samples; ++i) {
        const double nu = normal(rng);
        double v = 0.0;
        if (nu <= -a) v = 1.0;
        else if (nu < upper) v = 1.0 - half_bg * (nu + a) * (nu + a);
        sum += v;
        sum2 += v * v;
    }
    const double n = static_cast<double>(n_samples);
    const double mean = sum / n;
    const double var = std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0));
    return {mean, std::sqrt(var / n)};
}

double fd_gradient_check(const std::function<double(const Vector&)>& objective,
                         const std::function<Vector(const Vector&)>& gradient, const Vector& theta, double h) {
    const Vector g = gradient(theta);
    require(g.size() == theta.size(), "fd_gradient_check: gradient has the wrong length");
    Vector fd(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        const double hi = h * (1.0 + std::abs(theta[i]));
        Vector up = theta, down = theta;
        up[i] += hi;
        down[i] -= hi;
        fd[i] = (objective(up) - objective(down)) / (2.0 * hi);
    }
    const double scale = std::max(g.lpNorm<Eigen::Infinity>(), fd.lpNorm<Eigen::Infinity>());
    if (scale == 0.0) return 0.0;
    return (g - fd).lpNorm<Eigen::Infinity>() / scale;
}

SimplexResult linreg_direct_minimum(const linreg::LinRegSetting& setting, double lambda) {
    auto f = [&](const Vector& theta) { return linreg::weighted_objective(setting, lambda, theta); };
    SimplexOptions opt;
    opt.initial_step = 0.5;
    opt.max_evaluations = 200000;
    opt.restarts = 12;
    opt.f_tol = 1e-15;
    opt.x_tol = 1e-11;
    SimplexResult best = nelder_mead(f, Vector::Zero(setting.dim()), opt);
    const Vector ls = setting.sigma.completeOrthogonalDecomposition().solve(setting.v);
    SimplexResult from_ls = nelder_mead(f, ls, opt);
    if (from_ls.value < best.value) best = from_ls;
    return best;
}

double grid_scan_ar_bin(double a, double b, double eps, double gamma_lo, double gamma_hi, int points) {
    require(points >= 2 && gamma_lo > 0.0 && gamma_hi > gamma_lo, "grid_scan_ar_bin: bad grid");
    const double llo = std::log(gamma_lo), lhi = std::log(gamma_hi);
    double best = 1.0;  // gamma = 0
    for (int k = 0; k < points; ++k) {
        const double gamma = std::exp(llo + (lhi - llo) * k / (points - 1));
        best = std::min(best, binclass::dual_objective(a, b, eps, gamma));
    }
    return best;
}

RandomSearchResult random_search_bin(const binclass::GaussMixSetting& setting, double lambda, int samples,
                                     int gamma_points, std::uint64_t seed) {
    require(samples >= 1, "random_search_bin: need at least one sample");
    const auto d = setting.dim();
    const double q = setting.q();
    Rng rng(seed);
    std::normal_distribution<double> normal;
    RandomSearchResult best;
    best.objective = std::numeric_limits<double>::infinity();
    Vector theta(d);
    for (int s = 0; s < samples; ++s) {
        for (Eigen::Index j = 0; j < d; ++j) theta[j] = normal(rng);
        theta.normalize();
        const double quad = theta.dot(setting.sigma * theta);
        if (!(quad > 0.0)) continue;
        const double qn = binclass::lp_norm(theta, q);
        const double a = setting.mu.dot(theta) / std::sqrt(quad);
        const double b = quad / (qn * qn);
        const double sr = 0.5 * std::erfc(a / std::sqrt(2.0));
        const double ar = setting.eps == 0.0 ? sr : grid_scan_ar_bin(a, b, setting.eps, 1e-8, 1e8, gamma_points);
        const double obj = lambda * sr + ar;
        if (obj < best.objective) {
            best.objective = obj;
            best.theta = theta;
        }
    }
    return best;
}

SimplexResult polish_rf(const rf::RFObjective& objective, double lambda, const Vector& theta, int evaluations) {
    auto f = [&](const Vector& t) { return objective.value(t, lambda); };
    SimplexOptions opt;
    opt.initial_step = 1e-2;
    opt.max_evaluations = evaluations;
    opt.restarts = 20;
    opt.f_tol = 1e-15;
    opt.x_tol = 1e-12;
    return nelder_mead(f, theta, opt);
}

}  // namespace wdro::oracle
