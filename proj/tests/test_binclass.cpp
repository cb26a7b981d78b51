#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <random>
#include <vector>

#include "wdro/binclass.hpp"
#include "wdro/linreg.hpp"
#include "wdro/oracle.hpp"
#include "wdro/rng.hpp"

using namespace wdro;
using namespace wdro::binclass;

namespace {

Vector random_vector(Rng& rng, Eigen::Index d, double sd = 1.0) {
    std::normal_distribution<double> n(0.0, sd);
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = n(rng);
    return v;
}

double angle(const Vector& x, const Vector& y) {
    return std::acos(std::clamp(x.dot(y) / (x.norm() * y.norm()), -1.0, 1.0));
}

GaussMixSetting isotropic(std::uint64_t seed, Eigen::Index d, double eps, double r) {
    Rng rng(seed);
    GaussMixSetting s;
    s.mu = random_vector(rng, d, 1.0 / std::sqrt(static_cast<double>(d)));
    s.sigma = Matrix::Identity(d, d);
    s.eps = eps;
    s.r = r;
    return s;
}

}  // namespace

TEST(BinSetting, DualExponent) {
    EXPECT_EQ(dual_exponent(2.0), 2.0);
    EXPECT_EQ(dual_exponent(1.0), kInf);
    EXPECT_EQ(dual_exponent(kInf), 1.0);
    EXPECT_NEAR(dual_exponent(3.0), 1.5, 1e-15);
    EXPECT_THROW(dual_exponent(0.5), InputError);
}

TEST(BinSetting, ValidateRejects) {
    GaussMixSetting s = isotropic(1, 3, 0.1, 2.0);
    EXPECT_NO_THROW(s.validate());
    s.r = 0.9;
    EXPECT_THROW(s.validate(), InputError);
    s.r = 2.0;
    s.eps = -0.1;
    EXPECT_THROW(s.validate(), InputError);
    s.eps = 0.1;
    s.sigma(0, 0) = -1.0;
    EXPECT_THROW(s.validate(), InputError);
}

TEST(BinStats, IdentityAlongMean) {
    const GaussMixSetting s = isotropic(2, 6, 0.1, 2.0);
    const ThetaStats st = theta_stats(s, s.mu);
    EXPECT_NEAR(st.a, s.mu.norm(), 1e-14);
    EXPECT_DOUBLE_EQ(st.b, 1.0);
}

TEST(BinStats, ScaleInvariant) {
    GaussMixSetting s = isotropic(3, 5, 0.2, kInf);
    s.sigma = linreg::ar1_covariance(5, 0.4);
    Rng rng(3);
    const Vector theta = random_vector(rng, 5);
    const ThetaStats x = theta_stats(s, theta), y = theta_stats(s, 3.0 * theta);
    EXPECT_NEAR(x.a, y.a, 1e-14);
    EXPECT_NEAR(x.b, y.b, 1e-14);
    const InnerMinimum u = adversarial_risk_bin(s, theta), v = adversarial_risk_bin(s, 3.0 * theta);
    EXPECT_NEAR(u.value, v.value, 1e-12);
}

TEST(BinStats, ExtendedPrecisionLInfCase) {
    using boost::multiprecision::cpp_bin_float_50;
    Rng rng(4);
    GaussMixSetting s;
    s.mu = random_vector(rng, 4);
    const Matrix B = Eigen::MatrixXd::Random(4, 4);
    s.sigma = B * B.transpose() + 0.5 * Matrix::Identity(4, 4);
    s.r = kInf;
    const Vector theta = random_vector(rng, 4);
    cpp_bin_float_50 quad = 0, mt = 0, l1 = 0;
    for (int i = 0; i < 4; ++i) {
        mt += cpp_bin_float_50(s.mu[i]) * theta[i];
        l1 += abs(cpp_bin_float_50(theta[i]));
        for (int j = 0; j < 4; ++j) quad += cpp_bin_float_50(theta[i]) * s.sigma(i, j) * theta[j];
    }
    const ThetaStats st = theta_stats(s, theta);
    EXPECT_NEAR(st.a, static_cast<double>(mt / sqrt(quad)), 1e-14);
    EXPECT_NEAR(st.b, static_cast<double>(quad / (l1 * l1)), 1e-14);
}

TEST(BinStats, CauchySchwarzBound) {
    GaussMixSetting s = isotropic(5, 6, 0.1, 2.0);
    s.sigma = linreg::ar1_covariance(6, 0.7);
    const double bound = std::sqrt(s.mu.dot(s.sigma.ldlt().solve(s.mu)));
    Rng rng(5);
    for (int i = 0; i < 200; ++i) EXPECT_LE(std::abs(theta_stats(s, random_vector(rng, 6)).a), bound + 1e-10);
    const ThetaStats fisher = theta_stats(s, s.sigma.ldlt().solve(s.mu));
    EXPECT_NEAR(fisher.a, bound, 1e-12);
}

TEST(BinStats, DegenerateDirectionThrows) {
    GaussMixSetting s = isotropic(6, 3, 0.1, 2.0);
    s.sigma = Matrix::Zero(3, 3);
    s.sigma(0, 0) = 1.0;
    Vector theta = Vector::Zero(3);
    theta[2] = 1.0;
    EXPECT_THROW(theta_stats(s, theta), DegenerateDirection);
    EXPECT_THROW(theta_stats(s, Vector::Zero(3)), DegenerateDirection);
}

TEST(BinRisk, StandardRiskValues) {
    EXPECT_EQ(standard_risk_bin(0.0).value(), 0.5);
    const GaussMixSetting s = isotropic(7, 4, 0.0, 2.0);
    EXPECT_NEAR(standard_risk_bin(theta_stats(s, s.mu).a), std_normal_cdf(-s.mu.norm()), 1e-16);
}

TEST(BinRisk, StandardRiskMatchesSimulation) {
    Rng rng(8);
    GaussMixSetting s;
    s.mu = random_vector(rng, 5, 0.5);
    s.sigma = linreg::ar1_covariance(5, 0.3);
    const Vector theta = random_vector(rng, 5);
    const Matrix L = s.sigma.llt().matrixL();
    std::normal_distribution<double> n;
    std::bernoulli_distribution coin(0.5);
    const int samples = 1'000'000;
    int errors = 0;
    Vector z(5);
    for (int i = 0; i < samples; ++i) {
        const double y = coin(rng) ? 1.0 : -1.0;
        for (int k = 0; k < 5; ++k) z[k] = n(rng);
        const Vector x = y * s.mu + L * z;
        if (y * x.dot(theta) <= 0.0) ++errors;
    }
    const double p = static_cast<double>(errors) / samples;
    const double se = std::sqrt(p * (1 - p) / samples);
    EXPECT_NEAR(standard_risk_bin(theta_stats(s, theta).a), p, 3 * se);
}

TEST(BinPhi, Limits) {
    for (double a : {-1.0, 0.0, 0.7, 2.0}) {
        EXPECT_NEAR(expected_phi(a, 1.0, 1e12), std_normal_cdf(-a), 1e-5) << a;
        EXPECT_NEAR(expected_phi(a, 1.0, 1e-12), 1.0, 1e-5) << a;
    }
}

TEST(BinPhi, RejectsNonpositive) {
    EXPECT_THROW(expected_phi(1.0, 0.0, 1.0), InputError);
    EXPECT_THROW(expected_phi(1.0, 1.0, 0.0), InputError);
    EXPECT_THROW(expected_phi(1.0, -1.0, 1.0), InputError);
}

TEST(BinPhi, BoundedAndDecreasingInMargin) {
    for (double b : {0.1, 1.0, 5.0})
        for (double gamma : {1e-6, 0.01, 1.0, 100.0, 1e8}) {
            double prev = 2.0;
            for (double a = -8.0; a <= 12.0; a += 0.05) {
                const double v = expected_phi(a, b, gamma);
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 1.0 + 1e-10);
                EXPECT_LE(v, prev + 1e-14) << a << " " << b << " " << gamma;
                prev = v;
            }
        }
}

TEST(BinPhi, MatchesMonteCarloAtReferencePoint) {
    const oracle::McEstimate mc = oracle::mc_expected_phi(1.0, 1.0, 2.0, 10'000'000, 99);
    EXPECT_NEAR(expected_phi(1.0, 1.0, 2.0), mc.mean, 3 * mc.std_error);
}

TEST(BinPhi, SmallDeltaBranchIsContinuous) {
    // delta = sqrt(2 / (b gamma)) crosses the quadrature switch near gamma = 200.
    for (double a : {-0.5, 0.3, 2.0}) {
        // A jump at the switch would show up in the second difference.
        const double lo = expected_phi(a, 1.0, 200.0 - 1e-6), hi = expected_phi(a, 1.0, 200.0 + 1e-6);
        const double mid = expected_phi(a, 1.0, 200.0);
        EXPECT_LE(std::abs(lo - 2 * mid + hi), 1e-12) << a;
        EXPECT_GE(lo, mid - 1e-15);
        EXPECT_GE(mid, hi - 1e-15);
    }
}

TEST(BinAr, ZeroEpsIsStandardRisk) {
    const InnerMinimum m = adversarial_risk_bin(0.8, 0.5, 0.0);
    EXPECT_EQ(m.value, std_normal_cdf(-0.8).value());
}

TEST(BinAr, SeparatedClasses) {
    // Flipping mass p across a margin of 20 costs about 400 p / 2, so the
    // budget 0.01 buys a risk of order 1e-5 to 1e-4.
    const InnerMinimum m = adversarial_risk_bin(20.0, 1.0, 0.1);
    EXPECT_GT(m.value, 1e-5);
    EXPECT_LE(m.value, 1e-4);
    EXPECT_NEAR(m.value / oracle::grid_scan_ar_bin(20.0, 1.0, 0.1, 1e-6, 1e2, 200001), 1.0, 1e-4);
    EXPECT_LE(standard_risk_bin(20.0).value(), 1e-6);
}

TEST(BinAr, MatchesDenseGrid) {
    const InnerMinimum m = adversarial_risk_bin(1.0, 1.0, 0.5);
    const double grid = oracle::grid_scan_ar_bin(1.0, 1.0, 0.5, 1e-8, 1e8, 100000);
    EXPECT_NEAR(m.value, grid, 1e-6);
    EXPECT_LE(m.value, grid + 1e-12);
}

TEST(BinAr, BetweenStandardRiskAndOneAndMonotoneInEps) {
    for (double a : {-0.5, 0.5, 1.5, 3.0})
        for (double b : {0.2, 1.0}) {
            double prev = standard_risk_bin(a);
            for (double eps : {0.0, 0.05, 0.1, 0.3, 0.6, 1.0, 2.0}) {
                const double ar = adversarial_risk_bin(a, b, eps).value;
                EXPECT_GE(ar, standard_risk_bin(a) - 1e-15);
                EXPECT_LE(ar, 1.0);
                EXPECT_GE(ar, prev - 1e-9) << a << " " << b << " " << eps;
                prev = ar;
            }
        }
}

TEST(BinAr, ObjectiveDecreasesInMargin) {
    // lambda Phi(-a) + AR(a, b) at fixed b, gamma optimized.
    const double lambda = 0.5, b = 0.7, eps = 0.3, h = 1e-4;
    for (double a = -1.0; a <= 3.0; a += 0.25) {
        auto R = [&](double x) { return lambda * standard_risk_bin(x) + adversarial_risk_bin(x, b, eps).value; };
        EXPECT_LT((R(a + h) - R(a - h)) / (2 * h), 0.0) << a;
    }
}

TEST(BinPareto, EuclideanCostPicksMeanDirection) {
    const GaussMixSetting s = isotropic(9, 10, 0.5, 2.0);
    for (double lambda : {0.0, 1.0, 50.0}) {
        OuterOptions o;
        o.seed = 9;
        const BinParetoPoint p = pareto_point_bin(s, lambda, o);
        EXPECT_LE(angle(p.theta, s.mu), 1e-3);
        EXPECT_NEAR(p.sr, std_normal_cdf(-s.mu.norm()), 1e-8);
        EXPECT_NEAR(p.theta.norm(), 1.0, 1e-12);
    }
}

TEST(BinPareto, ZeroEpsFindsFisherDirection) {
    GaussMixSetting s = isotropic(10, 5, 0.0, kInf);
    s.sigma = linreg::ar1_covariance(5, 0.6);
    const Vector fisher = s.sigma.ldlt().solve(s.mu);
    for (double lambda : {0.5, 4.0}) {
        const BinParetoPoint p = pareto_point_bin(s, lambda);
        EXPECT_LE(angle(p.theta, fisher), 1e-3);
        EXPECT_NEAR(p.sr, std_normal_cdf(-std::sqrt(s.mu.dot(fisher))), 1e-8);
        EXPECT_DOUBLE_EQ(p.sr, p.ar);
    }
}

TEST(BinPareto, BeatsRandomSearch) {
    const GaussMixSetting s = isotropic(11, 10, 0.5, kInf);
    const BinParetoPoint p = pareto_point_bin(s, 1.0);
    const oracle::RandomSearchResult rs = oracle::random_search_bin(s, 1.0, 100000, 161, 11);
    EXPECT_LE(p.objective, rs.objective + 1e-4);
    EXPECT_NEAR(p.objective, weighted_objective_bin(s, 1.0, p.theta), 1e-12);
}

TEST(BinPareto, NoWorseThanItsStarts) {
    GaussMixSetting s = isotropic(12, 6, 0.3, kInf);
    s.sigma = linreg::ar1_covariance(6, 0.5);
    Rng rng(12);
    std::vector<Vector> extra;
    for (int i = 0; i < 3; ++i) extra.push_back(random_vector(rng, 6).normalized());
    const BinParetoPoint p = pareto_point_bin(s, 2.0, {}, extra);
    for (const Vector& start :
         {Vector(s.mu.normalized()), Vector(s.sigma.ldlt().solve(s.mu).normalized()), extra[0], extra[1], extra[2]})
        EXPECT_LE(p.objective, weighted_objective_bin(s, 2.0, start) + 1e-12);
}

TEST(BinSweep, MonotoneAndOrdered) {
    const GaussMixSetting s = isotropic(13, 10, 0.3, kInf);
    const std::vector<double> lambdas = {100.0, 0.0, 0.1, 1.0, 10.0};
    const std::vector<BinParetoPoint> pts = pareto_sweep_bin(s, lambdas, {}, 2);
    ASSERT_EQ(pts.size(), 5u);
    for (std::size_t i = 1; i < pts.size(); ++i) {
        EXPECT_GT(pts[i].lambda, pts[i - 1].lambda);
        EXPECT_LE(pts[i].sr, pts[i - 1].sr + 1e-9);
        EXPECT_GE(pts[i].ar, pts[i - 1].ar - 1e-9);
    }
    for (const auto& p : pts) EXPECT_GE(p.ar, p.sr);
}

TEST(BinSweep, EuclideanCostCollapse) {
    const GaussMixSetting s = isotropic(14, 10, 0.5, 2.0);
    const std::vector<double> lambdas = {0.0, 0.1, 1.0, 10.0};
    const std::vector<BinParetoPoint> pts = pareto_sweep_bin(s, lambdas);
    for (const auto& p : pts) {
        EXPECT_NEAR(p.sr, pts[0].sr, 1e-6);
        EXPECT_NEAR(p.ar, pts[0].ar, 1e-6);
    }
}

TEST(BinSweep, ZeroEpsEquality) {
    const GaussMixSetting s = isotropic(15, 4, 0.0, 1.0);
    const std::vector<double> lambdas = {0.0, 1.0};
    for (const auto& p : pareto_sweep_bin(s, lambdas)) EXPECT_DOUBLE_EQ(p.sr, p.ar);
}

TEST(BinSweep, RejectsBadLambda) {
    const GaussMixSetting s = isotropic(16, 3, 0.1, 2.0);
    const std::vector<double> bad = {-1.0};
    EXPECT_THROW(pareto_sweep_bin(s, bad), InputError);
}
