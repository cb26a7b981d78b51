#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "wdro/gauss.hpp"
#include "wdro/types.hpp"

namespace wdro::binclass {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Dual exponent q with 1/r + 1/q = 1; r = 1 gives infinity and r = infinity gives 1.
double dual_exponent(double r);

/// x | y ~ N(y mu, Sigma), y = +-1, adversary moves features within an l_r Wasserstein-2 ball.
struct GaussMixSetting {
    Vector mu;
    Matrix sigma;
    double eps = 0.0;
    double r = 2.0;
    double prior_plus = 0.5;  // accepted for completeness; the risks do not depend on it

    Eigen::Index dim() const { return mu.size(); }
    double q() const { return dual_exponent(r); }
    void validate() const;
};

struct ThetaStats {
    double a = 0.0;  // mu^T theta / ||Sigma^{1/2} theta||
    double b = 1.0;  // ||Sigma^{1/2} theta||^2 / ||theta||_q^2
};

/// l_p norm with p in [1, infinity].
double lp_norm(const Vector& x, double p);

ThetaStats theta_stats(const GaussMixSetting& setting, const Vector& theta);

/// Phi(-a)
Probability standard_risk_bin(double a);

/// Closed form of E[phi_gamma] for the 0-1 loss under the mixture, with
/// delta = sqrt(2 / (b gamma)):
///   Phi(delta - a) + (b gamma / 2) { (a + delta) phi(a - delta) - a phi(a)
///                                    + (a^2 + 1) [Phi(a - delta) - Phi(a)] }
double expected_phi(double a, double b, double gamma);

/// F(theta, gamma) = gamma eps^2 / b + E[phi] at unit scale, the function whose
/// infimum over gamma is the adversarial risk.
double dual_objective(double a, double b, double eps, double gamma);

struct InnerMinimum {
    double value = 0.0;
    double gamma = 0.0;
    bool boundary = false;   // minimizer stayed at a bracket end after all expansions
    bool multimodal = false; // the coarse grid showed more than one local minimum
};

struct InnerOptions {
    double gamma_lo = 1e-8;
    double gamma_hi = 1e8;
    int grid_per_decade = 10;
    int max_expansions = 12;
    double log_tol = 1e-9;  // golden-section stopping width in log(gamma)
};

/// inf_{gamma >= 0} F(gamma), found by a log-grid scan followed by golden
/// section on log(gamma) around the best cell.
InnerMinimum adversarial_risk_bin(double a, double b, double eps, const InnerOptions& options = {});
InnerMinimum adversarial_risk_bin(const GaussMixSetting& setting, const Vector& theta,
                                  const InnerOptions& options = {});

struct BinParetoPoint {
    double lambda = 0.0;
    Vector theta;  // unit l2 norm
    double a = 0.0;
    double b = 1.0;
    double gamma_star = 0.0;
    double sr = 0.0;
    double ar = 0.0;
    double objective = 0.0;
    bool warning = false;
    std::string diagnostic;
};

struct OuterOptions {
    std::uint64_t seed = 0;
    int random_starts = 6;
    int max_evaluations = 6000;  // per start
    double initial_step = 0.2;
    InnerOptions inner{};
};

/// lambda Phi(-a) + AR(theta) for a given direction.
double weighted_objective_bin(const GaussMixSetting& setting, double lambda, const Vector& theta,
                              const InnerOptions& inner = {});

/// Minimizes lambda SR + AR over unit theta by multi-start simplex search on
/// tangent charts of the sphere. Extra starting directions may be supplied.
BinParetoPoint pareto_point_bin(const GaussMixSetting& setting, double lambda, const OuterOptions& options = {},
                                std::span<const Vector> extra_starts = {});

/// Sweep ordered by lambda. After the independent solves every point is
/// re-scored against every other point's direction and keeps the best, so the
/// returned set is mutually consistent.
std::vector<BinParetoPoint> pareto_sweep_bin(const GaussMixSetting& setting, std::span<const double> lambdas,
                                             const OuterOptions& options = {}, int jobs = 1);

}  // namespace wdro::binclass
