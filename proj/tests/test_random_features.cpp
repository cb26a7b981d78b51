#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <random>
#include <vector>

#include "wdro/oracle.hpp"
#include "wdro/random_features.hpp"
#include "wdro/rng.hpp"

using namespace wdro;
using namespace wdro::rf;

namespace {

struct Fixture {
    RFSetting setting;
    QuadraticTarget target;
    Matrix U;
    SampleBatch batch;
};

Fixture make_fixture(Eigen::Index d, Eigen::Index width, Eigen::Index n, double noise, double eps, std::uint64_t seed) {
    Fixture f;
    f.setting.d = d;
    f.setting.width = width;
    f.setting.noise_sigma = noise;
    f.setting.eps = eps;
    f.target = make_quadratic_target(d, 0.3, 1.0 / static_cast<double>(d), 1.0, derive_seed(seed, {stream::target}));
    f.U = sample_weights(width, d, derive_seed(seed, {stream::weights}));
    f.batch = sample_batch(f.target, n, noise, derive_seed(seed, {stream::train_batch}));
    return f;
}

Vector random_theta(std::uint64_t seed, Eigen::Index width) {
    Rng rng(seed);
    std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(static_cast<double>(width)));
    Vector t(width);
    for (Eigen::Index i = 0; i < width; ++i) t[i] = n(rng);
    return t;
}

RFObjective objective_of(const Fixture& f) {
    return RFObjective(f.U, f.batch.X, target_eval_rows(f.target, f.batch.X), f.setting.noise_sigma, f.setting.eps);
}

}  // namespace

TEST(RFSampling, SphereRowsHaveRadiusSqrtD) {
    const Matrix X = sample_sphere(7, 1000, 1);
    for (Eigen::Index i = 0; i < X.rows(); ++i) EXPECT_NEAR(X.row(i).norm(), std::sqrt(7.0), 1e-10);
    EXPECT_THROW(sample_sphere(1, 10, 1), InputError);
    EXPECT_THROW(sample_sphere(3, 0, 1), InputError);
}

TEST(RFSampling, SphereMomentsAtScale) {
    const Eigen::Index n = 1'000'000, d = 10;
    const Matrix X = sample_sphere(d, n, 2);
    const Vector mean = X.colwise().mean();
    for (Eigen::Index j = 0; j < d; ++j) EXPECT_LE(std::abs(mean[j]), 3.0 / std::sqrt(static_cast<double>(n)));
    const Matrix cov = X.transpose() * X / static_cast<double>(n);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
            const Vector prod = X.col(i).cwiseProduct(X.col(j));
            const double var = (prod.array() - prod.mean()).square().sum() / static_cast<double>(n - 1);
            const double se = std::sqrt(var / static_cast<double>(n));
            EXPECT_NEAR(cov(i, j), i == j ? 1.0 : 0.0, 3 * se) << i << "," << j;
        }
}

TEST(RFSampling, WeightsHaveUnitRows) {
    const Matrix U = sample_weights(40, 6, 3);
    for (Eigen::Index i = 0; i < U.rows(); ++i) EXPECT_NEAR(U.row(i).norm(), 1.0, 1e-12);
}

TEST(RFSampling, BatchNoiseStatistics) {
    const QuadraticTarget t = make_quadratic_target(5, 0.0, 0.2, 1.0, 4);
    const SampleBatch b = sample_batch(t, 200000, 2.0, 5);
    const Vector resid = b.y - target_eval_rows(t, b.X);
    const double var = resid.squaredNorm() / static_cast<double>(resid.size());
    EXPECT_NEAR(var, 4.0, 4.0 * 3.0 * std::sqrt(2.0 / 200000.0));
}

TEST(RFTarget, LinearAndCenteredCases) {
    QuadraticTarget t = make_quadratic_target(6, 0.0, 1.0, 0.0, 6);
    const Matrix X = sample_sphere(6, 50, 7);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const Vector x = X.row(i).transpose();
        EXPECT_NEAR(target_eval(t, x), x.dot(t.beta1), 1e-13);
    }
    t.fstar = 2.5;
    t.G = Matrix::Identity(6, 6);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const Vector x = X.row(i).transpose();
        EXPECT_NEAR(target_eval(t, x), x.dot(t.beta1), 1e-12);
    }
}

TEST(RFTarget, MatchesExtendedPrecisionAndRowForm) {
    using boost::multiprecision::cpp_bin_float_50;
    const QuadraticTarget t = make_quadratic_target(8, -0.4, 0.125, 1.7, 8);
    const Matrix X = sample_sphere(8, 20, 9);
    const Vector rows = target_eval_rows(t, X);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        cpp_bin_float_50 lin = 0, quad = 0, tr = 0;
        for (int a = 0; a < 8; ++a) {
            lin += cpp_bin_float_50(X(i, a)) * t.beta1[a];
            tr += t.G(a, a);
            for (int b = 0; b < 8; ++b) quad += cpp_bin_float_50(X(i, a)) * t.G(a, b) * X(i, b);
        }
        const double ref = static_cast<double>(cpp_bin_float_50(t.beta0) + lin + cpp_bin_float_50(t.fstar) / 8 * (quad - tr));
        EXPECT_NEAR(target_eval(t, X.row(i).transpose()), ref, 1e-12);
        EXPECT_NEAR(rows[i], ref, 1e-12);
    }
}

TEST(RFRisk, NullModelGivesNoise) {
    Fixture f = make_fixture(5, 10, 500, 1.5, 0.2, 10);
    f.target.beta0 = 0.0;
    f.target.beta1.setZero();
    f.target.fstar = 0.0;
    const RFModel m{f.U, Vector::Zero(10)};
    EXPECT_NEAR(sr_empirical(f.setting, m, f.target, f.batch), 2.25, 1e-15);
    EXPECT_NEAR(ar_firstorder(f.setting, m, f.target, f.batch), 2.25, 1e-15);
}

TEST(RFRisk, IndependentImplementationsAgree) {
    const Fixture f = make_fixture(10, 50, 3000, 2.0, 0.1, 11);
    const Vector theta = random_theta(11, 50);
    const RFModel m{f.U, theta};
    const RFObjective::Parts p = objective_of(f).parts(theta);
    EXPECT_NEAR(sr_empirical(f.setting, m, f.target, f.batch), p.sr, 1e-12);
    EXPECT_NEAR(ar_firstorder(f.setting, m, f.target, f.batch), p.ar, 1e-12);
}

TEST(RFRisk, ZeroEpsAndZeroTheta) {
    Fixture f = make_fixture(6, 12, 800, 0.5, 0.0, 12);
    const RFModel m{f.U, random_theta(12, 12)};
    EXPECT_DOUBLE_EQ(ar_firstorder(f.setting, m, f.target, f.batch), sr_empirical(f.setting, m, f.target, f.batch));
    f.setting.eps = 0.3;
    const RFModel zero{f.U, Vector::Zero(12)};
    EXPECT_DOUBLE_EQ(ar_firstorder(f.setting, zero, f.target, f.batch),
                     sr_empirical(f.setting, zero, f.target, f.batch));
    EXPECT_GE(ar_firstorder(f.setting, m, f.target, f.batch), sr_empirical(f.setting, m, f.target, f.batch));
}

TEST(RFRisk, GradientIdentityForCorrection) {
    // (r^2 + s^2) ||U^T D theta||^2 = ||grad_x loss||^2 / 4 + s^2 ||U^T D theta||^2,
    // with grad_x of (y - theta^T relu(U x))^2 taken at fixed y.
    const Fixture f = make_fixture(3, 5, 200, 0.7, 0.2, 13);
    const Vector theta = random_theta(13, 5);
    const double s2 = 0.49;
    double from_grad = 0.0, from_fd = 0.0;
    for (Eigen::Index i = 0; i < f.batch.X.rows(); ++i) {
        const Vector x = f.batch.X.row(i).transpose();
        const double y = target_eval(f.target, x);
        auto loss = [&](const Vector& z) {
            const double r = y - theta.dot((f.U * z).unaryExpr(&relu));
            return r * r;
        };
        const Vector pre = f.U * x;
        Vector grad = Vector::Zero(3);
        for (Eigen::Index k = 0; k < 5; ++k)
            if (pre[k] > 0.0) grad += theta[k] * f.U.row(k).transpose();
        const double pred = theta.dot(pre.unaryExpr(&relu));
        const Vector g_loss = 2.0 * (pred - y) * grad;
        from_grad += 0.25 * g_loss.squaredNorm() + s2 * grad.squaredNorm();
        Vector fd(3);
        for (int k = 0; k < 3; ++k) {
            Vector up = x, dn = x;
            up[k] += 1e-6;
            dn[k] -= 1e-6;
            fd[k] = (loss(up) - loss(dn)) / 2e-6;
        }
        from_fd += 0.25 * fd.squaredNorm() + s2 * grad.squaredNorm();
    }
    const double n = static_cast<double>(f.batch.X.rows());
    const double moment = objective_of(f).parts(theta).moment;
    EXPECT_NEAR(from_grad / n, moment, 1e-12 * std::max(1.0, moment));
    EXPECT_NEAR(from_fd / n, moment, 1e-6 * std::max(1.0, moment));
}

TEST(RFObjective, GradientMatchesFiniteDifferences) {
    const Fixture f = make_fixture(10, 50, 2000, 2.0, 0.1, 14);
    const RFObjective obj = objective_of(f);
    const Matrix pre = f.batch.X * f.U.transpose();
    EXPECT_GT(pre.cwiseAbs().minCoeff(), 1e-6);  // no sample sits on a kink
    for (int i = 0; i < 20; ++i) {
        const Vector theta = random_theta(100 + i, 50);
        const double lambda = 0.5 * i;
        const double err = oracle::fd_gradient_check([&](const Vector& t) { return obj.value(t, lambda); },
                                                     [&](const Vector& t) {
                                                         Vector g;
                                                         obj.value_and_gradient(t, lambda, g);
                                                         return g;
                                                     },
                                                     theta);
        EXPECT_LE(err, 1e-5) << i;
    }
}

TEST(RFObjective, ConvexityProbe) {
    const Fixture f = make_fixture(10, 50, 2000, 2.0, 0.3, 15);
    const RFObjective obj = objective_of(f);
    int violations = 0;
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const Vector t1 = 3.0 * random_theta(200 + i, 50), t2 = 3.0 * random_theta(300 + i, 50);
        for (double s : {0.25, 0.5, 0.75}) {
            const double lhs = obj.value(s * t1 + (1 - s) * t2, 1.0);
            const double rhs = s * obj.value(t1, 1.0) + (1 - s) * obj.value(t2, 1.0);
            worst = std::max(worst, lhs - rhs);
            if (lhs > rhs + 1e-9) ++violations;
        }
    }
    EXPECT_EQ(violations, 0) << "worst excess " << worst;
}

TEST(RFSolve, ZeroEpsIsLeastSquares) {
    const Fixture f = make_fixture(10, 50, 4000, 2.0, 0.0, 16);
    const RFObjective obj = objective_of(f);
    const Vector ls = obj.least_squares();
    const RFSolveResult r = minimize_rf(obj, 2.0, Vector::Zero(50));
    EXPECT_LE(r.objective - obj.value(ls, 2.0), 1e-8);
    EXPECT_LE(obj.value(ls, 2.0) - r.objective, 1e-8);
}

TEST(RFSolve, FirstOrderOptimality) {
    const Fixture f = make_fixture(10, 50, 4000, 2.0, 0.1, 17);
    const RFObjective obj = objective_of(f);
    for (double lambda : {0.0, 1.0, 100.0}) {
        const RFSolveResult r = minimize_rf(obj, lambda, obj.least_squares());
        Vector g;
        const double v = obj.value_and_gradient(r.theta, lambda, g);
        EXPECT_LE(g.norm(), 1e-5 * (1.0 + v)) << lambda;
    }
}

TEST(RFSolve, WeightOrdering) {
    RFSetting s;
    s.d = 10;
    s.width = 50;
    s.noise_sigma = 2.0;
    s.eps = 0.1;
    s.n_mc = 5000;
    s.n_eval = 5000;
    const QuadraticTarget t = make_quadratic_target(10, 0.0, 0.1, 1.0, 18);
    const Matrix U = sample_weights(50, 10, 18);
    const RFSolveResult lo = solve_pareto_rf(s, U, t, 0.0, 19);
    const RFSolveResult hi = solve_pareto_rf(s, U, t, 1000.0, 19);
    EXPECT_LE(hi.sr, lo.sr);
    EXPECT_GE(hi.ar, lo.ar);
}

TEST(RFSolve, PolishCannotImproveMuch) {
    const Fixture f = make_fixture(10, 20, 1000, 2.0, 0.1, 20);
    const RFObjective obj = objective_of(f);
    const RFSolveResult r = minimize_rf(obj, 1.0, obj.least_squares());
    const SimplexResult polished = oracle::polish_rf(obj, 1.0, r.theta, 40000);
    EXPECT_GE(polished.value, r.objective - 1e-4);
}

TEST(RFSolve, IterationBudgetExhaustionThrows) {
    const Fixture f = make_fixture(10, 50, 2000, 2.0, 0.3, 21);
    const RFObjective obj = objective_of(f);
    RFSolveOptions o;
    o.max_iter = 1;
    o.grad_tol = 1e-14;
    EXPECT_THROW(minimize_rf(obj, 1.0, Vector::Zero(50), o), SolverError);
}

TEST(RFSweep, SingleCellMatchesDirectSolve) {
    RFSetting s;
    s.d = 10;
    s.width = 30;
    s.noise_sigma = 1.0;
    s.eps = 0.1;
    s.n_mc = 3000;
    s.n_eval = 3000;
    const QuadraticTarget t = make_quadratic_target(10, 0.0, 0.1, 1.0, 22);
    const std::vector<double> lambdas = {1.0};
    const std::vector<Eigen::Index> widths = {30};
    const std::vector<RFRecord> recs = pareto_sweep_rf(s, t, lambdas, widths, 1, 23);
    ASSERT_EQ(recs.size(), 1u);
    const std::uint64_t rseed = realization_seed(23, 0);
    const Matrix U = sample_weights(30, 10, weights_seed(rseed, 30));
    const RFSolveResult direct = solve_pareto_rf(s, U, t, 1.0, rseed);
    EXPECT_NEAR(recs[0].sr, direct.sr, 1e-9);
    EXPECT_NEAR(recs[0].ar, direct.ar, 1e-9);
}

TEST(RFSweep, ZeroEpsAndDeterminism) {
    RFSetting s;
    s.d = 10;
    s.width = 20;
    s.noise_sigma = 1.0;
    s.eps = 0.0;
    s.n_mc = 2000;
    s.n_eval = 2000;
    const QuadraticTarget t = make_quadratic_target(10, 0.0, 0.1, 1.0, 24);
    const std::vector<double> lambdas = {0.0, 1.0, 10.0};
    const std::vector<Eigen::Index> widths = {10, 20};
    const std::vector<RFRecord> a = pareto_sweep_rf(s, t, lambdas, widths, 2, 25, {}, 1);
    const std::vector<RFRecord> b = pareto_sweep_rf(s, t, lambdas, widths, 2, 25, {}, 3);
    ASSERT_EQ(a.size(), 12u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].sr, b[i].sr);
        EXPECT_EQ(a[i].ar, b[i].ar);
        EXPECT_DOUBLE_EQ(a[i].sr, a[i].ar);
    }
}

TEST(RFSweep, FailuresAreRecordedNotThrown) {
    RFSetting s;
    s.d = 10;
    s.width = 20;
    s.noise_sigma = 1.0;
    s.eps = 0.3;
    s.n_mc = 1000;
    s.n_eval = 1000;
    const QuadraticTarget t = make_quadratic_target(10, 0.0, 0.1, 1.0, 26);
    RFSolveOptions o;
    o.max_iter = 1;
    o.grad_tol = 1e-14;
    const std::vector<double> lambdas = {0.0, 1.0};
    const std::vector<Eigen::Index> widths = {20};
    const std::vector<RFRecord> recs = pareto_sweep_rf(s, t, lambdas, widths, 1, 27, o);
    ASSERT_EQ(recs.size(), 2u);
    for (const RFRecord& r : recs) {
        EXPECT_FALSE(r.ok);
        EXPECT_NE(r.status.find("solver_error"), std::string::npos);
        EXPECT_TRUE(std::isfinite(r.sr));
    }
}

TEST(RFSetting, LargeEpsFlagAndValidation) {
    RFSetting s;
    s.eps = 0.6;
    EXPECT_TRUE(s.large_eps());
    s.eps = 0.5;
    EXPECT_FALSE(s.large_eps());
    s.eps = -0.1;
    EXPECT_THROW(s.validate(), InputError);
}
