#pragma once

// Brute-force verifiers. Nothing here calls the closed forms it is meant to
// check; each routine takes the long way round.

#include <cstdint>
#include <functional>

#include "wdro/binclass.hpp"
#include "wdro/linreg.hpp"
#include "wdro/optimize.hpp"
#include "wdro/random_features.hpp"
#include "wdro/types.hpp"

namespace wdro::oracle {

/// Finitely supported distribution over (x, y).
struct EmpiricalDist {
    Matrix X;  // m x d
    Vector y;  // m
    Vector w;  // m, nonnegative, sums to 1

    static EmpiricalDist uniform(Matrix X, Vector y);
    void validate() const;
    Eigen::Index size() const { return X.rows(); }
    Eigen::Index dim() const { return X.cols(); }

    /// sum_i w_i (y_i - x_i^T theta)^2
    double empirical_risk(const Vector& theta) const;
    /// Second moments (Sigma, v, sigma_y2) of the distribution with budget eps.
    linreg::LinRegSetting moments(double eps) const;
};

struct PrimalResult {
    double value = 0.0;
    Matrix perturbations;        // m x d, one shift per atom
    double transport_cost = 0.0; // sqrt(sum_i w_i ||delta_i||^2)
};

/// Projected-gradient ascent over per-atom feature shifts under the weighted
/// l2 transport budget. Returns the best feasible iterate over all restarts,
/// a lower bound on the adversarial risk.
PrimalResult primal_ar_quadratic(const EmpiricalDist& dist, const Vector& theta, double eps, int iters = 10000,
                                 int restarts = 10, std::uint64_t seed = 0);

struct DualResult {
    double value = 0.0;
    double gamma = 0.0;
};

/// min over gamma > ||theta||^2 of gamma eps^2 + sum_i w_i phi_gamma(z_i), by
/// numerical 1-D search over log(gamma - ||theta||^2).
DualResult dual_ar_quadratic(const EmpiricalDist& dist, const Vector& theta, double eps);

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Monte Carlo over nu ~ N(0, 1) of the piecewise surrogate
///   1{nu <= -a} + (1 - (b gamma / 2)(nu + a)^2) 1{-a < nu < sqrt(2 / (b gamma)) - a}.
McEstimate mc_expected_phi(double a, double b, double gamma, std::int64_t n_samples, std::uint64_t seed);

/// Largest coordinate gap between an analytic gradient and central differences
/// with step h (1 + |theta_i|), relative to the larger of the two gradients'
/// infinity norms. Zero when both gradients vanish.
double fd_gradient_check(const std::function<double(const Vector&)>& objective,
                         const std::function<Vector(const Vector&)>& gradient, const Vector& theta, double h = 1e-6);

/// Derivative-free minimization of lambda SR + AR over theta in R^d, started
/// from zero and from the least-squares solution.
SimplexResult linreg_direct_minimum(const linreg::LinRegSetting& setting, double lambda);

/// Dense log-grid scan of the binary dual objective over gamma.
double grid_scan_ar_bin(double a, double b, double eps, double gamma_lo = 1e-8, double gamma_hi = 1e8,
                        int points = 100000);

struct RandomSearchResult {
    Vector theta;
    double objective = 0.0;
};

/// Best of `samples` random unit directions for lambda SR + AR, each AR taken
/// as the minimum over a coarse gamma grid.
RandomSearchResult random_search_bin(const binclass::GaussMixSetting& setting, double lambda, int samples,
                                     int gamma_points, std::uint64_t seed);

/// Long derivative-free refinement of the random-features objective from theta.
SimplexResult polish_rf(const rf::RFObjective& objective, double lambda, const Vector& theta, int evaluations);

}  // namespace wdro::oracle
