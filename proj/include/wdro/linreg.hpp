#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "wdro/types.hpp"

namespace wdro::linreg {

/// Second-moment description of (x, y) plus the adversary's budget.
struct LinRegSetting {
    Matrix sigma;          // E[x x^T]
    Vector v;              // E[y x]
    double sigma_y2 = 0.0; // E[y^2]
    double eps = 0.0;      // transport budget, l2 feature units

    Eigen::Index dim() const { return v.size(); }

    /// Throws InputError unless the joint second-moment matrix is PSD up to roundoff.
    void validate() const;
};

/// Linear data model y = x^T theta0 + w, w ~ N(0, noise_sigma^2), E[x x^T] = sigma.
struct GenerativeLinReg {
    Vector theta0;
    Matrix sigma;
    double noise_sigma = 1.0;

    LinRegSetting to_setting(double eps) const;
};

/// Sigma_ij = rho^|i-j|.
Matrix ar1_covariance(Eigen::Index d, double rho);

enum class Branch { zero, stationary };

std::string_view to_string(Branch b);

struct ParetoPoint {
    double lambda = 0.0;
    Vector theta;
    double gamma_star = 0.0;
    double sr = 0.0;
    double ar = 0.0;
    Branch branch = Branch::zero;
    double residual = 0.0;  // |gamma - RHS(gamma)| at the returned root; 0 on the zero branch
};

double standard_risk(const LinRegSetting& setting, const Vector& theta);

/// (sqrt(SR) + eps ||theta||)^2
double adversarial_risk(const LinRegSetting& setting, const Vector& theta);

/// sup_x (y0 - x^T theta)^2 - gamma ||x - x0||^2. +infinity when gamma < ||theta||^2.
double robust_surrogate_phi(const Vector& theta, double gamma, const Vector& x0, double y0);

/// lambda SR + AR
double weighted_objective(const LinRegSetting& setting, double lambda, const Vector& theta);

/// Gradient of weighted_objective; requires theta != 0 and SR(theta) > 0.
Vector weighted_objective_gradient(const LinRegSetting& setting, double lambda, const Vector& theta);

/// Ridge path theta(gamma) = (Sigma + gamma I)^{-1} v evaluated in the
/// eigenbasis of Sigma. Eigenvalues of Sigma + gamma I below the floor are
/// treated as zero (pseudo-inverse).
class RidgePath {
public:
    explicit RidgePath(const LinRegSetting& setting, double eigen_floor = 1e-12);

    Vector theta(double gamma) const;
    double theta_norm(double gamma) const;
    double standard_risk(double gamma) const;
    /// sqrt(SR(theta(gamma))) / ||theta(gamma)||, radicand clamped at zero.
    double a_factor(double gamma) const;
    /// (eps^2 + eps A) / (1 + lambda + eps / A), written in a form that stays finite at A = 0.
    double fixed_point_rhs(double gamma, double lambda) const;

    bool trivial() const { return trivial_; }

private:
    double sigma_y2_;
    double eps_;
    double floor_;
    Vector eigenvalues_;
    Matrix eigenvectors_;
    Vector coeffs_;  // eigenvectors^T v
    bool trivial_;   // v has no component in range(Sigma)
};

struct FixedPointOptions {
    double tol = 1e-12;        // residual tolerance, scaled by max(1, gamma)
    double damping = 0.5;
    int max_damped_iter = 2000;
    int max_bisect_iter = 400;
    double gamma_max = 1e12;
    int scan_points_per_decade = 8;
};

/// Pareto-optimal estimator minimizing lambda SR + AR: best of theta = 0 and
/// the ridge estimators at the roots of gamma = RHS(gamma).
ParetoPoint solve_pareto_point(const LinRegSetting& setting, double lambda, const FixedPointOptions& options = {});

/// One point per lambda, ordered by lambda. Solver failures are rethrown as
/// SweepError carrying the offending lambda.
std::vector<ParetoPoint> pareto_sweep(const LinRegSetting& setting, std::span<const double> lambdas,
                                      const FixedPointOptions& options = {}, int jobs = 1);

}  // namespace wdro::linreg
