#include "wdro/binclass.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>

#include "wdro/optimize.hpp"
#include "wdro/rng.hpp"

namespace wdro::binclass {

double dual_exponent(double r) {
    require(r >= 1.0, "norm order r must be >= 1");
    if (r == 1.0) return kInf;
    if (std::isinf(r)) return 1.0;
    return r / (r - 1.0);
}

void GaussMixSetting::validate() const {
    const auto d = mu.size();
    require(d >= 1, "GaussMixSetting: empty mean vector");
    require(sigma.rows() == d && sigma.cols() == d, "GaussMixSetting: Sigma must be d x d with d = len(mu)");
    require(mu.allFinite() && sigma.allFinite(), "GaussMixSetting: non-finite entries");
    require(std::isfinite(eps) && eps >= 0.0, "GaussMixSetting: eps must be finite and >= 0");
    require(r >= 1.0, "GaussMixSetting: r must be >= 1");
    require(prior_plus >= 0.0 && prior_plus <= 1.0, "GaussMixSetting: prior_plus must lie in [0, 1]");
    const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
    require((sigma - sigma.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale, "GaussMixSetting: Sigma not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(sigma, Eigen::EigenvaluesOnly);
    require(es.eigenvalues().minCoeff() >= -1e-10 * scale, "GaussMixSetting: Sigma not positive semidefinite");
}

double lp_norm(const Vector& x, double p) {
    require(p >= 1.0, "lp_norm: p must be >= 1");
    if (std::isinf(p)) return x.lpNorm<Eigen::Infinity>();
    if (p == 1.0) return x.lpNorm<1>();
    if (p == 2.0) return x.norm();
    const double scale = x.lpNorm<Eigen::Infinity>();
    if (scale == 0.0) return 0.0;
    return scale * std::pow((x.cwiseAbs() / scale).array().pow(p).sum(), 1.0 / p);
}

ThetaStats theta_stats(const GaussMixSetting& setting, const Vector& theta) {
    require(theta.size() == setting.dim(), "theta_stats: dimension mismatch");
    const double quad = theta.dot(setting.sigma * theta);
    const double scale = std::max(1.0, setting.sigma.cwiseAbs().maxCoeff()) * theta.squaredNorm();
    if (!(quad > 1e-14 * scale)) throw DegenerateDirection("theta_stats: theta lies in the null space of Sigma");
    const double qn = lp_norm(theta, setting.q());
    return ThetaStats{setting.mu.dot(theta) / std::sqrt(quad), quad / (qn * qn)};
}

Probability standard_risk_bin(double a) {
    return std_normal_cdf(-a);
}

namespace {

// 16-point Gauss-Legendre nodes/weights on [-1, 1] (positive half).
constexpr std::array<double, 8> kGlNodes{0.0950125098376374401853193, 0.2816035507792589132304605,
                                          0.4580167776572273863424194, 0.6178762444026437484466718,
                                          0.7554044083550030338951012, 0.8656312023878317438804679,
                                          0.9445750230732325760779884, 0.9894009349916499325961542};
constexpr std::array<double, 8> kGlWeights{0.1894506104550684962853967, 0.1826034150449235888667637,
                                            0.1691565193950025381893121, 0.1495959888165767320815017,
                                            0.1246289712555338720524763, 0.0951585116824927848099251,
                                            0.0622535239386478928628438, 0.0271524594117540948517806};

// int_0^delta u^2 phi(u - a) du for small delta, where the closed form cancels badly.
double short_moment_integral(double a, double delta) {
    const double half = 0.5 * delta;
    double s = 0.0;
    for (std::size_t k = 0; k < kGlNodes.size(); ++k) {
        for (double sign : {-1.0, 1.0}) {
            const double u = half * (1.0 + sign * kGlNodes[k]);
            s += kGlWeights[k] * u * u * std_normal_pdf(u - a);
        }
    }
    return s * half;
}

constexpr double kShortIntervalCutoff = 0.1;

}  // namespace

double expected_phi(double a, double b, double gamma) {
    require(std::isfinite(a), "expected_phi: a must be finite");
    require(b > 0.0 && std::isfinite(b), "expected_phi: b must be > 0");
    require(gamma > 0.0, "expected_phi: gamma must be > 0");
    if (std::isinf(gamma)) return standard_risk_bin(a);
    const double delta = std::sqrt(2.0 / (b * gamma));
    const double head = std_normal_cdf(delta - a);
    double value;
    if (delta < kShortIntervalCutoff) {
        // Same quantity: Phi(delta - a) - (b gamma / 2) int_{-a}^{delta - a} (nu + a)^2 phi(nu) dnu.
        value = head - (b * gamma / 2.0) * short_moment_integral(a, delta);
    } else {
        const double bracket = (a + delta) * std_normal_pdf(a - delta) - a * std_normal_pdf(a) +
                               (a * a + 1.0) * std_normal_interval(a, a - delta);
        value = head + (b * gamma / 2.0) * bracket;
    }
    return std::clamp(value, 0.0, 1.0);
}

double dual_objective(double a, double b, double eps, double gamma) {
    require(b > 0.0, "dual_objective: b must be > 0");
    if (gamma <= 0.0) return 1.0;
    return gamma * eps * eps / b + expected_phi(a, 1.0, gamma);
}

InnerMinimum adversarial_risk_bin(double a, double b, double eps, const InnerOptions& options) {
    require(b > 0.0, "adversarial_risk_bin: b must be > 0");
    require(eps >= 0.0, "adversarial_risk_bin: eps must be >= 0");
    InnerMinimum out;
    const double sr = standard_risk_bin(a);
    if (eps == 0.0) {
        out.value = sr;
        out.gamma = kInf;
        return out;
    }
    auto f = [&](double log_gamma) { return dual_objective(a, b, eps, std::exp(log_gamma)); };

    const double step = std::log(10.0) / options.grid_per_decade;
    double lo = std::log(options.gamma_lo);
    double hi = std::log(options.gamma_hi);
    std::vector<double> xs, fs;
    for (double x = lo; x <= hi + 1e-12; x += step) {
        xs.push_back(x);
        fs.push_back(f(x));
    }
    auto best_index = [&] { return static_cast<std::size_t>(std::min_element(fs.begin(), fs.end()) - fs.begin()); };
    std::size_t i = best_index();
    for (int e = 0; e < options.max_expansions && (i == 0 || i + 1 == xs.size()); ++e) {
        // Extend the bracket by one decade on the side the minimum abuts.
        if (i == 0) {
            for (int k = 0; k < options.grid_per_decade; ++k) {
                xs.insert(xs.begin(), xs.front() - step);
                fs.insert(fs.begin(), f(xs.front()));
            }
        } else {
            for (int k = 0; k < options.grid_per_decade; ++k) {
                xs.push_back(xs.back() + step);
                fs.push_back(f(xs.back()));
            }
        }
        i = best_index();
    }
    int local_minima = 0;
    for (std::size_t k = 1; k + 1 < fs.size(); ++k)
        if (fs[k] < fs[k - 1] && fs[k] <= fs[k + 1]) ++local_minima;
    out.multimodal = local_minima > 1;

    out.value = fs[i];
    out.gamma = std::exp(xs[i]);
    if (i == 0 || i + 1 == xs.size()) {
        out.boundary = true;
    } else {
        const ScalarMinimum m = golden_section(f, xs[i - 1], xs[i + 1], options.log_tol);
        if (m.value < out.value) {
            out.value = m.value;
            out.gamma = std::exp(m.x);
        }
    }
    // gamma = 0 is feasible in the dual and gives the loss ceiling.
    if (out.value >= 1.0) {
        out.value = 1.0;
        out.gamma = 0.0;
        out.boundary = false;
    }
    out.value = std::max(out.value, static_cast<double>(sr));
    return out;
}

InnerMinimum adversarial_risk_bin(const GaussMixSetting& setting, const Vector& theta, const InnerOptions& options) {
    const ThetaStats st = theta_stats(setting, theta);
    return adversarial_risk_bin(st.a, st.b, setting.eps, options);
}

double weighted_objective_bin(const GaussMixSetting& setting, double lambda, const Vector& theta,
                              const InnerOptions& inner) {
    const ThetaStats st = theta_stats(setting, theta);
    return lambda * standard_risk_bin(st.a) + adversarial_risk_bin(st.a, st.b, setting.eps, inner).value;
}

namespace {

// Orthonormal basis of the complement of unit vector c, as columns.
Matrix tangent_basis(const Vector& c) {
    const auto d = c.size();
    Matrix m(d, d);
    m.col(0) = c;
    // Take the rest from the identity, swapping out the axis most aligned with c.
    Eigen::Index k;
    c.cwiseAbs().maxCoeff(&k);
    Eigen::Index col = 1;
    for (Eigen::Index j = 0; j < d; ++j) {
        if (j == k) continue;
        m.col(col++) = Vector::Unit(d, j);
    }
    Eigen::HouseholderQR<Matrix> qr(m);
    Matrix q = qr.householderQ();
    return q.rightCols(d - 1);
}

BinParetoPoint make_point(const GaussMixSetting& setting, double lambda, const Vector& theta,
                          const InnerOptions& inner) {
    BinParetoPoint p;
    p.lambda = lambda;
    p.theta = theta / theta.norm();
    const ThetaStats st = theta_stats(setting, p.theta);
    p.a = st.a;
    p.b = st.b;
    p.sr = standard_risk_bin(st.a);
    const InnerMinimum m = adversarial_risk_bin(st.a, st.b, setting.eps, inner);
    p.ar = m.value;
    p.gamma_star = m.gamma;
    p.objective = lambda * p.sr + p.ar;
    if (m.boundary) {
        p.warning = true;
        p.diagnostic = "inner gamma minimizer at bracket boundary";
    } else if (m.multimodal) {
        p.diagnostic = "inner objective multimodal on the gamma grid";
    }
    return p;
}

}  // namespace

BinParetoPoint pareto_point_bin(const GaussMixSetting& setting, double lambda, const OuterOptions& options,
                                std::span<const Vector> extra_starts) {
    setting.validate();
    require(std::isfinite(lambda) && lambda >= 0.0, "pareto_point_bin: lambda must be finite and >= 0");
    const auto d = setting.dim();

    auto objective = [&](const Vector& theta) {
        try {
            return weighted_objective_bin(setting, lambda, theta, options.inner);
        } catch (const DegenerateDirection&) {
            return kInf;
        }
    };

    std::vector<Vector> starts;
    if (setting.mu.norm() > 0.0) starts.push_back(setting.mu.normalized());
    {
        Eigen::LDLT<Matrix> ldlt(setting.sigma);
        Vector fisher = ldlt.solve(setting.mu);
        if (ldlt.info() != Eigen::Success || !fisher.allFinite() || fisher.norm() == 0.0)
            fisher = setting.sigma.completeOrthogonalDecomposition().pseudoInverse() * setting.mu;
        if (fisher.allFinite() && fisher.norm() > 0.0) starts.push_back(fisher.normalized());
    }
    for (int k = 0; k < options.random_starts; ++k) {
        Rng rng(derive_seed(options.seed, {stream::restart, static_cast<std::uint64_t>(k)}));
        std::normal_distribution<double> normal;
        Vector z(d);
        for (Eigen::Index j = 0; j < d; ++j) z[j] = normal(rng);
        starts.push_back(z.normalized());
    }
    for (const Vector& s : extra_starts)
        if (s.size() == d && s.norm() > 0.0) starts.push_back(s.normalized());

    Vector best_theta;
    double best_value = kInf;
    for (const Vector& start : starts) {
        Vector center = start;
        double center_value = objective(center);
        if (d > 1 && std::isfinite(center_value)) {
            for (int round = 0; round < 4; ++round) {
                const Matrix basis = tangent_basis(center);
                auto chart = [&](const Vector& z) { return objective(center + basis * z); };
                SimplexOptions so;
                so.initial_step = round == 0 ? options.initial_step : options.initial_step * 0.05;
                so.max_evaluations = options.max_evaluations;
                so.restarts = 2;
                so.f_tol = 1e-14;
                so.x_tol = 1e-9;
                const SimplexResult r = nelder_mead(chart, Vector::Zero(d - 1), so);
                const bool improved = r.value < center_value - 1e-15 * (1.0 + std::abs(center_value));
                if (r.value < center_value) {
                    center = (center + basis * r.x).normalized();
                    center_value = r.value;
                }
                if (!improved) break;
            }
        } else if (d == 1) {
            const double flipped = objective(-center);
            if (flipped < center_value) {
                center = -center;
                center_value = flipped;
            }
        }
        if (center_value < best_value) {
            best_value = center_value;
            best_theta = center;
        }
    }
    if (!std::isfinite(best_value)) {
        std::ostringstream msg;
        msg << "pareto_point_bin: every start failed at lambda = " << lambda;
        throw SolverError(msg.str(), best_value);
    }
    return make_point(setting, lambda, best_theta, options.inner);
}

std::vector<BinParetoPoint> pareto_sweep_bin(const GaussMixSetting& setting, std::span<const double> lambdas,
                                             const OuterOptions& options, int jobs) {
    require(!lambdas.empty(), "pareto_sweep_bin: empty lambda list");
    std::vector<double> sorted(lambdas.begin(), lambdas.end());
    for (double l : sorted) require(std::isfinite(l) && l >= 0.0, "pareto_sweep_bin: every lambda must be finite and >= 0");
    std::stable_sort(sorted.begin(), sorted.end());

    std::vector<BinParetoPoint> out(sorted.size());
    parallel_for(sorted.size(), jobs, [&](std::size_t i) {
        try {
            out[i] = pareto_point_bin(setting, sorted[i], options);
        } catch (const SolverError& e) {
            throw SweepError(e.what(), sorted[i], e.last_residual());
        }
    });

    // Cross-scoring: each direction's (SR, AR) is fixed, so the best of the pool
    // at weight lambda_i is argmin_j lambda_i SR_j + AR_j.
    const std::vector<BinParetoPoint> pool = out;
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (const BinParetoPoint& cand : pool) {
            const double value = sorted[i] * cand.sr + cand.ar;
            if (value < out[i].objective) {
                const double lambda = out[i].lambda;
                out[i] = cand;
                out[i].lambda = lambda;
                out[i].objective = value;
            }
        }
    }
    return out;
}

}  // namespace wdro::binclass
