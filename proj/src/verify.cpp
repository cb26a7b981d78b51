#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>

#include "wdro/binclass.hpp"
#include "wdro/cli.hpp"
#include "wdro/linreg.hpp"
#include "wdro/optimize.hpp"
#include "wdro/oracle.hpp"
#include "wdro/random_features.hpp"
#include "wdro/rng.hpp"

namespace wdro::cli {

namespace {

Matrix gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double sd) {
    std::normal_distribution<double> normal(0.0, sd);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
    return m;
}

Vector gaussian_vector(Rng& rng, Eigen::Index n, double sd) { return gaussian_matrix(rng, n, 1, sd).col(0); }

double relative_gap(double x, double reference) {
    return std::abs(x - reference) / std::max(std::abs(reference), std::numeric_limits<double>::min());
}

std::string label(const char* fmt, auto... args) {
    char buf[160];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

}  // namespace

std::vector<Check> verify_duality(std::uint64_t seed, int jobs) {
    constexpr int kInstances = 20;
    constexpr Eigen::Index kAtoms = 50;
    std::vector<std::vector<Check>> per(kInstances);
    parallel_for(kInstances, jobs, [&](std::size_t i) {
        const Eigen::Index d = (i % 2 == 0) ? 2 : 5;
        const double eps = (i / 2) % 2 == 0 ? 0.1 : 1.0;
        Rng rng(derive_seed(seed, {stream::instance, i}));
        const Matrix X = gaussian_matrix(rng, kAtoms, d, 1.0);
        const Vector theta0 = gaussian_vector(rng, d, 1.0 / std::sqrt(static_cast<double>(d)));
        const Vector y = X * theta0 + gaussian_vector(rng, kAtoms, 0.5);
        const Vector theta = gaussian_vector(rng, d, 1.0 / std::sqrt(static_cast<double>(d)));
        const oracle::EmpiricalDist dist = oracle::EmpiricalDist::uniform(X, y);

        const double closed = linreg::adversarial_risk(dist.moments(eps), theta);
        const oracle::DualResult dual = oracle::dual_ar_quadratic(dist, theta, eps);
        const oracle::PrimalResult primal =
            oracle::primal_ar_quadratic(dist, theta, eps, 10000, 10, derive_seed(seed, {stream::restart, i}));

        const std::string tag = label("duality/%02zu d=%ld eps=%g", i, static_cast<long>(d), eps);
        const double dual_gap = relative_gap(dual.value, closed);
        const double primal_gap = relative_gap(primal.value, closed);
        const double weak = (primal.value - dual.value) / dual.value;
        const double excess_cost = primal.transport_cost - eps;
        per[i] = {
            {tag + " dual vs closed form (rel)", dual_gap, 1e-8, dual_gap <= 1e-8},
            {tag + " primal vs closed form (rel)", primal_gap, 1e-3, primal_gap <= 1e-3},
            {tag + " weak duality primal - dual (rel)", weak, 1e-9, weak <= 1e-9},
            {tag + " transport cost - eps", excess_cost, 1e-8, excess_cost <= 1e-8},
        };
    });
    std::vector<Check> out;
    for (auto& v : per) out.insert(out.end(), v.begin(), v.end());
    return out;
}

std::vector<Check> verify_lemma1(std::uint64_t seed, std::int64_t samples, int jobs) {
    constexpr double as[] = {-0.5, 0.5, 1.5};
    constexpr double bs[] = {0.5, 1.0, 2.0};
    constexpr double gammas[] = {0.25, 1.0, 4.0};
    std::vector<Check> out(27);
    parallel_for(out.size(), jobs, [&](std::size_t i) {
        const double a = as[i / 9], b = bs[(i / 3) % 3], gamma = gammas[i % 3];
        const double exact = binclass::expected_phi(a, b, gamma);
        const oracle::McEstimate mc =
            oracle::mc_expected_phi(a, b, gamma, samples, derive_seed(seed, {stream::instance, i}));
        const double diff = std::abs(mc.mean - exact);
        const double z = mc.std_error > 0.0 ? diff / mc.std_error : (diff == 0.0 ? 0.0 : HUGE_VAL);
        out[i] = {label("lemma1/%02zu a=%g b=%g gamma=%g |mc - closed| / se", i, a, b, gamma), z, 3.0, z <= 3.0};
    });
    return out;
}

std::vector<Check> verify_gradients(std::uint64_t seed, int jobs) {
    constexpr int kPoints = 20;
    constexpr Eigen::Index kDim = 10, kWidth = 50, kSamples = 2000;
    const rf::QuadraticTarget target =
        rf::make_quadratic_target(kDim, 0.0, 1.0 / kDim, 1.0, derive_seed(seed, {stream::target}));
    const Matrix U = rf::sample_weights(kWidth, kDim, derive_seed(seed, {stream::weights}));
    const Matrix X = rf::sample_sphere(kDim, kSamples, derive_seed(seed, {stream::train_batch}));
    const rf::RFObjective objective(U, X, rf::target_eval_rows(target, X), 2.0, 0.3);

    std::vector<Check> out(kPoints + 10);
    parallel_for(out.size(), jobs, [&](std::size_t i) {
        Rng rng(derive_seed(seed, {stream::instance, i}));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double lambda = 10.0 * unit(rng);
        if (i < static_cast<std::size_t>(kPoints)) {
            const Vector theta = gaussian_vector(rng, kWidth, 1.0 / std::sqrt(static_cast<double>(kWidth)));
            const double err = oracle::fd_gradient_check(
                [&](const Vector& t) { return objective.value(t, lambda); },
                [&](const Vector& t) {
                    Vector g;
                    objective.value_and_gradient(t, lambda, g);
                    return g;
                },
                theta);
            out[i] = {label("gradients/rf/%02zu lambda=%.3f max rel error", i, lambda), err, 1e-5, err <= 1e-5};
            return;
        }
        const Eigen::Index d = 2 + static_cast<Eigen::Index>(i % 5);
        const Matrix B = gaussian_matrix(rng, d, d, 1.0);
        const Vector theta0 = gaussian_vector(rng, d, 1.0);
        const linreg::LinRegSetting s =
            linreg::GenerativeLinReg{theta0, B * B.transpose() + 0.1 * Matrix::Identity(d, d), 1.0}.to_setting(0.5);
        const Vector theta = gaussian_vector(rng, d, 1.0);
        const double err = oracle::fd_gradient_check(
            [&](const Vector& t) { return linreg::weighted_objective(s, lambda, t); },
            [&](const Vector& t) { return linreg::weighted_objective_gradient(s, lambda, t); }, theta);
        out[i] = {label("gradients/linreg/%02zu d=%ld max rel error", i - kPoints, static_cast<long>(d)), err, 1e-5,
                  err <= 1e-5};
    });
    return out;
}

int verify_command(std::string_view suite, std::uint64_t seed, int jobs, std::ostream& out, std::ostream& err) {
    const bool all = suite == "all";
    if (!all && suite != "duality" && suite != "lemma1" && suite != "gradients") {
        err << "unknown suite '" << suite << "'; expected duality, lemma1, gradients or all\n";
        return kExitInvalidConfig;
    }
    std::vector<Check> checks;
    auto append = [&](std::vector<Check> more) { checks.insert(checks.end(), more.begin(), more.end()); };
    if (all || suite == "duality") append(verify_duality(seed, jobs));
    if (all || suite == "lemma1") append(verify_lemma1(seed, 10'000'000, jobs));
    if (all || suite == "gradients") append(verify_gradients(seed, jobs));
    int failed = 0;
    for (const Check& c : checks) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3e (tol %.1e)", c.measured, c.tolerance);
        out << (c.pass ? "PASS " : "FAIL ") << c.name << " = " << buf << '\n';
        failed += c.pass ? 0 : 1;
    }
    out << checks.size() - static_cast<std::size_t>(failed) << "/" << checks.size() << " checks passed\n";
    return failed == 0 ? kExitOk : kExitVerifyFailed;
}

}  // namespace wdro::cli
