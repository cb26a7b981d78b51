#include "wdro/linreg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "wdro/optimize.hpp"

namespace wdro::linreg {

void LinRegSetting::validate() const {
    const auto d = v.size();
    require(d >= 1, "LinRegSetting: empty feature dimension");
    require(sigma.rows() == d && sigma.cols() == d, "LinRegSetting: Sigma must be d x d with d = len(v)");
    require(sigma.allFinite() && v.allFinite() && std::isfinite(sigma_y2), "LinRegSetting: non-finite entries");
    require(std::isfinite(eps) && eps >= 0.0, "LinRegSetting: eps must be finite and >= 0");
    const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
    require((sigma - sigma.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale, "LinRegSetting: Sigma not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
    require(es.eigenvalues().minCoeff() >= -1e-10 * scale, "LinRegSetting: Sigma not positive semidefinite");
    // Joint second moment of (x, y) must be PSD: sigma_y2 >= v^T Sigma^+ v and v in range(Sigma).
    const Vector c = es.eigenvectors().transpose() * v;
    double explained = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        const double lam = es.eigenvalues()[i];
        if (lam > 1e-12 * scale) {
            explained += c[i] * c[i] / lam;
        } else {
            require(std::abs(c[i]) <= 1e-8 * std::max(1.0, v.norm()),
                    "LinRegSetting: v has a component outside range(Sigma)");
        }
    }
    require(sigma_y2 - explained >= -1e-10 * std::max(1.0, sigma_y2),
            "LinRegSetting: sigma_y2 < v^T Sigma^+ v (joint second moment not PSD)");
}

LinRegSetting GenerativeLinReg::to_setting(double eps) const {
    require(theta0.size() == sigma.rows() && sigma.rows() == sigma.cols(), "GenerativeLinReg: dimension mismatch");
    require(noise_sigma >= 0.0, "GenerativeLinReg: noise_sigma must be >= 0");
    LinRegSetting s;
    s.sigma = sigma;
    s.v = sigma * theta0;
    s.sigma_y2 = noise_sigma * noise_sigma + theta0.dot(sigma * theta0);
    s.eps = eps;
    s.validate();
    return s;
}

Matrix ar1_covariance(Eigen::Index d, double rho) {
    require(d >= 1, "ar1_covariance: d must be >= 1");
    require(rho > -1.0 && rho < 1.0, "ar1_covariance: |rho| must be < 1");
    Matrix s(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            s(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
    return s;
}

std::string_view to_string(Branch b) {
    return b == Branch::zero ? "zero" : "stationary";
}

namespace {

void check_dims(const LinRegSetting& setting, const Vector& theta) {
    if (theta.size() != setting.dim()) {
        std::ostringstream msg;
        msg << "dimension mismatch: theta has " << theta.size() << " entries, setting has d = " << setting.dim();
        throw InputError(msg.str());
    }
}

}  // namespace

double standard_risk(const LinRegSetting& setting, const Vector& theta) {
    check_dims(setting, theta);
    const double sr = setting.sigma_y2 + theta.dot(setting.sigma * theta) - 2.0 * setting.v.dot(theta);
    return std::max(sr, 0.0);
}

double adversarial_risk(const LinRegSetting& setting, const Vector& theta) {
    const double root = std::sqrt(standard_risk(setting, theta)) + setting.eps * theta.norm();
    return root * root;
}

double robust_surrogate_phi(const Vector& theta, double gamma, const Vector& x0, double y0) {
    require(theta.size() == x0.size(), "robust_surrogate_phi: dimension mismatch");
    require(gamma >= 0.0, "robust_surrogate_phi: gamma must be >= 0");
    const double t2 = theta.squaredNorm();
    const double residual = y0 - x0.dot(theta);
    if (gamma < t2) return std::numeric_limits<double>::infinity();
    if (gamma == t2) return residual == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return gamma * residual * residual / (gamma - t2);
}

double weighted_objective(const LinRegSetting& setting, double lambda, const Vector& theta) {
    require(lambda >= 0.0, "weighted_objective: lambda must be >= 0");
    return lambda * standard_risk(setting, theta) + adversarial_risk(setting, theta);
}

Vector weighted_objective_gradient(const LinRegSetting& setting, double lambda, const Vector& theta) {
    check_dims(setting, theta);
    const double norm = theta.norm();
    const double sr = standard_risk(setting, theta);
    require(norm > 0.0 && sr > 0.0, "weighted_objective_gradient: undefined at theta = 0 or SR = 0");
    const double root = std::sqrt(sr);
    const double eps = setting.eps;
    const Vector sr_half_grad = setting.sigma * theta - setting.v;
    return 2.0 * (1.0 + lambda) * sr_half_grad + 2.0 * eps * eps * theta +
           2.0 * eps * (theta / norm * root + sr_half_grad * (norm / root));
}

RidgePath::RidgePath(const LinRegSetting& setting, double eigen_floor)
    : sigma_y2_(setting.sigma_y2), eps_(setting.eps), floor_(eigen_floor) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(setting.sigma);
    eigenvalues_ = es.eigenvalues().cwiseMax(0.0);
    eigenvectors_ = es.eigenvectors();
    coeffs_ = eigenvectors_.transpose() * setting.v;
    trivial_ = theta_norm(0.0) == 0.0;
}

Vector RidgePath::theta(double gamma) const {
    Vector w(coeffs_.size());
    for (Eigen::Index i = 0; i < coeffs_.size(); ++i) {
        const double denom = eigenvalues_[i] + gamma;
        w[i] = denom > floor_ ? coeffs_[i] / denom : 0.0;
    }
    return eigenvectors_ * w;
}

double RidgePath::theta_norm(double gamma) const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < coeffs_.size(); ++i) {
        const double denom = eigenvalues_[i] + gamma;
        if (denom > floor_) s += coeffs_[i] * coeffs_[i] / (denom * denom);
    }
    return std::sqrt(s);
}

double RidgePath::standard_risk(double gamma) const {
    // sigma_y2 + theta^T Sigma theta - 2 v^T theta along the path, in the eigenbasis.
    double s = sigma_y2_;
    for (Eigen::Index i = 0; i < coeffs_.size(); ++i) {
        const double denom = eigenvalues_[i] + gamma;
        if (denom > floor_) s -= coeffs_[i] * coeffs_[i] * (eigenvalues_[i] + 2.0 * gamma) / (denom * denom);
    }
    return std::max(s, 0.0);
}

double RidgePath::a_factor(double gamma) const {
    const double norm = theta_norm(gamma);
    if (norm == 0.0) return std::numeric_limits<double>::infinity();
    return std::sqrt(standard_risk(gamma)) / norm;
}

double RidgePath::fixed_point_rhs(double gamma, double lambda) const {
    if (eps_ == 0.0) return 0.0;
    const double a = a_factor(gamma);
    if (std::isinf(a)) return std::numeric_limits<double>::infinity();
    return a * eps_ * (eps_ + a) / (a * (1.0 + lambda) + eps_);
}

namespace {

struct Root {
    double gamma;
    double residual;
};

double residual_scale(double gamma) {
    return std::max(1.0, std::abs(gamma));
}

// Bisection on g over [lo, hi] with g(lo) < 0 < g(hi) (or the reverse).
Root bisect(const std::function<double(double)>& g, double lo, double hi, double glo, double tol, int max_iter) {
    Root best{lo, std::abs(glo)};
    for (int it = 0; it < max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if (std::abs(gm) < best.residual) best = {mid, std::abs(gm)};
        if (std::abs(gm) <= tol * residual_scale(mid) || mid <= lo || mid >= hi) break;
        if ((gm < 0.0) == (glo < 0.0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    return best;
}

}  // namespace

ParetoPoint solve_pareto_point(const LinRegSetting& setting, double lambda, const FixedPointOptions& options) {
    setting.validate();
    require(std::isfinite(lambda) && lambda >= 0.0, "solve_pareto_point: lambda must be finite and >= 0");
    require(options.tol > 0.0, "solve_pareto_point: tol must be > 0");

    ParetoPoint zero;
    zero.lambda = lambda;
    zero.theta = Vector::Zero(setting.dim());
    zero.sr = zero.ar = setting.sigma_y2;
    zero.branch = Branch::zero;
    const double zero_objective = (1.0 + lambda) * setting.sigma_y2;

    const RidgePath path(setting);
    if (path.trivial()) return zero;

    auto g = [&](double gamma) { return gamma - path.fixed_point_rhs(gamma, lambda); };

    std::vector<Root> roots;
    if (setting.eps == 0.0) {
        roots.push_back({0.0, 0.0});
    } else {
        // Damped iteration first; in well-behaved cases it lands on the intended root.
        double gamma = 0.0;
        for (int it = 0; it < options.max_damped_iter; ++it) {
            const double rhs = path.fixed_point_rhs(gamma, lambda);
            if (!std::isfinite(rhs)) break;
            if (std::abs(gamma - rhs) <= options.tol * residual_scale(gamma)) {
                roots.push_back({gamma, std::abs(gamma - rhs)});
                break;
            }
            gamma = (1.0 - options.damping) * gamma + options.damping * rhs;
        }

        // Bisection with an expanding upper bracket.
        const double g0 = g(0.0);
        double upper = 1.0;
        while (g(upper) < 0.0 && upper < options.gamma_max) upper = std::min(2.0 * upper, options.gamma_max);
        if (g0 < 0.0 && g(upper) >= 0.0) roots.push_back(bisect(g, 0.0, upper, g0, options.tol, options.max_bisect_iter));

        // Log-grid scan for further sign changes; every root found is a candidate.
        std::vector<double> grid{0.0};
        const int decades = static_cast<int>(std::ceil(std::log10(options.gamma_max) + 12.0));
        for (int k = 0; k <= decades * options.scan_points_per_decade; ++k) {
            const double x = std::pow(10.0, -12.0 + static_cast<double>(k) / options.scan_points_per_decade);
            if (x > options.gamma_max) break;
            grid.push_back(x);
        }
        double prev_x = grid.front();
        double prev_g = g(prev_x);
        for (std::size_t k = 1; k < grid.size(); ++k) {
            const double gx = g(grid[k]);
            if (prev_g == 0.0) roots.push_back({prev_x, 0.0});
            else if ((prev_g < 0.0) != (gx < 0.0) && gx != 0.0) roots.push_back(bisect(g, prev_x, grid[k], prev_g, options.tol, options.max_bisect_iter));
            prev_x = grid[k];
            prev_g = gx;
        }
    }

    std::vector<Root> accepted;
    double worst_residual = 0.0;
    for (const Root& r : roots) {
        if (r.residual <= options.tol * residual_scale(r.gamma)) accepted.push_back(r);
        else worst_residual = std::max(worst_residual, r.residual);
    }
    if (accepted.empty()) {
        if (!roots.empty()) {
            std::ostringstream msg;
            msg << "fixed point did not reach tolerance " << options.tol << " at lambda = " << lambda;
            throw SolverError(msg.str(), worst_residual);
        }
        // g never changes sign up to gamma_max: case (i).
        return zero;
    }

    ParetoPoint best = zero;
    double best_objective = zero_objective;
    for (const Root& r : accepted) {
        const double norm = path.theta_norm(r.gamma);
        const double sr = path.standard_risk(r.gamma);
        const double root_ar = std::sqrt(sr) + setting.eps * norm;
        const double objective = lambda * sr + root_ar * root_ar;
        if (objective < best_objective) {
            best_objective = objective;
            best.theta = path.theta(r.gamma);
            best.gamma_star = r.gamma;
            best.residual = r.residual;
            best.branch = Branch::stationary;
            // SR = A^2 ||theta||^2 and AR = (A + eps)^2 ||theta||^2.
            const double a = path.a_factor(r.gamma);
            best.sr = a * a * norm * norm;
            best.ar = (a + setting.eps) * (a + setting.eps) * norm * norm;
        }
    }
    return best;
}

std::vector<ParetoPoint> pareto_sweep(const LinRegSetting& setting, std::span<const double> lambdas,
                                      const FixedPointOptions& options, int jobs) {
    require(!lambdas.empty(), "pareto_sweep: empty lambda list");
    std::vector<double> sorted(lambdas.begin(), lambdas.end());
    for (double l : sorted) require(std::isfinite(l) && l >= 0.0, "pareto_sweep: every lambda must be finite and >= 0");
    std::stable_sort(sorted.begin(), sorted.end());
    setting.validate();

    std::vector<ParetoPoint> out(sorted.size());
    parallel_for(sorted.size(), jobs, [&](std::size_t i) {
        try {
            out[i] = solve_pareto_point(setting, sorted[i], options);
        } catch (const SolverError& e) {
            throw SweepError(e.what(), sorted[i], e.last_residual());
        }
    });
    return out;
}

}  // namespace wdro::linreg
