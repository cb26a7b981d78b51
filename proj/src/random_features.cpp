#include "wdro/random_features.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <sstream>

#include "wdro/optimize.hpp"
#include "wdro/rng.hpp"

namespace wdro::rf {

void RFSetting::validate() const {
    require(d >= 2, "RFSetting: d must be >= 2");
    require(width >= 1, "RFSetting: width must be >= 1");
    require(n_mc >= 1 && n_eval >= 1, "RFSetting: batch sizes must be >= 1");
    require(noise_sigma >= 0.0 && std::isfinite(noise_sigma), "RFSetting: noise_sigma must be >= 0");
    require(eps >= 0.0 && std::isfinite(eps), "RFSetting: eps must be >= 0");
}

QuadraticTarget make_quadratic_target(Eigen::Index d, double beta0, double beta1_variance, double fstar,
                                      std::uint64_t seed) {
    require(d >= 1, "make_quadratic_target: d must be >= 1");
    require(beta1_variance >= 0.0, "make_quadratic_target: beta1 variance must be >= 0");
    Rng rng(seed);
    std::normal_distribution<double> normal;
    QuadraticTarget t;
    t.beta0 = beta0;
    t.fstar = fstar;
    t.beta1.resize(d);
    const double sd = std::sqrt(beta1_variance);
    for (Eigen::Index i = 0; i < d; ++i) t.beta1[i] = sd * normal(rng);
    t.G.resize(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) t.G(i, j) = normal(rng);
    return t;
}

double target_eval(const QuadraticTarget& target, const Vector& x) {
    require(x.size() == target.dim() && target.G.rows() == target.dim() && target.G.cols() == target.dim(),
            "target_eval: dimension mismatch");
    const double d = static_cast<double>(target.dim());
    return target.beta0 + x.dot(target.beta1) + target.fstar / d * (x.dot(target.G * x) - target.G.trace());
}

Vector target_eval_rows(const QuadraticTarget& target, const Matrix& X) {
    require(X.cols() == target.dim(), "target_eval_rows: dimension mismatch");
    const double d = static_cast<double>(target.dim());
    const Matrix XG = X * target.G.transpose();  // row i: (G x_i)^T
    const Vector quad = (XG.array() * X.array()).rowwise().sum().matrix();
    return (Vector::Constant(X.rows(), target.beta0) + X * target.beta1 +
            (target.fstar / d) * (quad.array() - target.G.trace()).matrix());
}

Matrix sample_sphere(Eigen::Index d, Eigen::Index n, std::uint64_t seed) {
    require(d >= 2, "sample_sphere: d must be >= 2");
    require(n >= 1, "sample_sphere: n must be >= 1");
    Rng rng(seed);
    std::normal_distribution<double> normal;
    Matrix X(n, d);
    const double radius = std::sqrt(static_cast<double>(d));
    for (Eigen::Index i = 0; i < n; ++i) {
        double norm2 = 0.0;
        do {
            for (Eigen::Index j = 0; j < d; ++j) X(i, j) = normal(rng);
            norm2 = X.row(i).squaredNorm();
        } while (norm2 == 0.0);
        X.row(i) *= radius / std::sqrt(norm2);
    }
    return X;
}

Matrix sample_weights(Eigen::Index width, Eigen::Index d, std::uint64_t seed) {
    Matrix U = sample_sphere(d, width, seed);
    U.rowwise().normalize();
    return U;
}

SampleBatch sample_batch(const QuadraticTarget& target, Eigen::Index n, double noise_sigma, std::uint64_t seed) {
    SampleBatch b;
    b.X = sample_sphere(target.dim(), n, seed);
    b.y = target_eval_rows(target, b.X);
    Rng rng(derive_seed(seed, {stream::noise}));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < n; ++i) b.y[i] += noise_sigma * normal(rng);
    return b;
}

namespace {

void check_model(const RFSetting& setting, const RFModel& model, const QuadraticTarget& target,
                 const SampleBatch& batch) {
    require(model.U.cols() == target.dim() && batch.X.cols() == target.dim(), "random features: dimension mismatch");
    require(model.theta.size() == model.U.rows(), "random features: theta length must equal width");
    require(batch.X.rows() >= 1, "random features: empty batch");
    (void)setting;
}

}  // namespace

double sr_empirical(const RFSetting& setting, const RFModel& model, const QuadraticTarget& target,
                    const SampleBatch& batch) {
    check_model(setting, model, target, batch);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < batch.X.rows(); ++i) {
        const Vector x = batch.X.row(i).transpose();
        const Vector z = model.U * x;
        const double pred = model.theta.dot(z.unaryExpr(&relu));
        const double r = target_eval(target, x) - pred;
        sum += r * r;
    }
    return sum / static_cast<double>(batch.X.rows()) + setting.noise_sigma * setting.noise_sigma;
}

double ar_firstorder(const RFSetting& setting, const RFModel& model, const QuadraticTarget& target,
                     const SampleBatch& batch) {
    check_model(setting, model, target, batch);
    const double noise2 = setting.noise_sigma * setting.noise_sigma;
    double sr_sum = 0.0;
    double moment_sum = 0.0;
    for (Eigen::Index i = 0; i < batch.X.rows(); ++i) {
        const Vector x = batch.X.row(i).transpose();
        const Vector z = model.U * x;
        const double r = target_eval(target, x) - model.theta.dot(z.unaryExpr(&relu));
        const Vector masked = model.theta.cwiseProduct(z.unaryExpr(&relu_derivative));
        const double g2 = (model.U.transpose() * masked).squaredNorm();
        sr_sum += r * r;
        moment_sum += (r * r + noise2) * g2;
    }
    const double n = static_cast<double>(batch.X.rows());
    return sr_sum / n + noise2 + 2.0 * setting.eps * std::sqrt(moment_sum / n);
}

RFObjective::RFObjective(const Matrix& U, const Matrix& X, const Vector& f_values, double noise_sigma, double eps)
    : U_(U), f_(f_values), noise2_(noise_sigma * noise_sigma), eps_(eps) {
    require(U.cols() == X.cols(), "RFObjective: U and X disagree on d");
    require(f_values.size() == X.rows(), "RFObjective: one target value per row of X");
    const Matrix Z = X * U.transpose();
    features_ = Z.unaryExpr(&relu);
    mask_ = Z.unaryExpr(&relu_derivative);
    sr_hessian_ = (2.0 / static_cast<double>(X.rows())) * (features_.transpose() * features_);
}

RFObjective::Parts RFObjective::parts(const Vector& theta) const {
    const double n = static_cast<double>(features_.rows());
    const Vector r = f_ - features_ * theta;
    const Matrix G = (mask_.array().rowwise() * theta.transpose().array()).matrix() * U_;
    const Vector q = G.rowwise().squaredNorm();
    Parts p;
    p.sr = r.squaredNorm() / n + noise2_;
    p.moment = ((r.array().square() + noise2_) * q.array()).sum() / n;
    p.ar = p.sr + 2.0 * eps_ * std::sqrt(p.moment);
    return p;
}

double RFObjective::value(const Vector& theta, double lambda) const {
    const Parts p = parts(theta);
    return (1.0 + lambda) * p.sr + (eps_ == 0.0 ? 0.0 : 2.0 * eps_ * std::sqrt(p.moment + kSqrtSmoothing));
}

double RFObjective::value_and_gradient(const Vector& theta, double lambda, Vector& grad) const {
    const double n = static_cast<double>(features_.rows());
    const Vector r = f_ - features_ * theta;
    const double sr = r.squaredNorm() / n + noise2_;
    grad = (-2.0 * (1.0 + lambda) / n) * (features_.transpose() * r);
    if (eps_ == 0.0) return (1.0 + lambda) * sr;

    const Matrix masked = (mask_.array().rowwise() * theta.transpose().array()).matrix();
    const Matrix G = masked * U_;  // row i: (U^T D_i theta)^T
    const Vector q = G.rowwise().squaredNorm();
    const Vector w = (r.array().square() + noise2_).matrix();
    const double moment = w.dot(q) / n;
    const double root = std::sqrt(moment + kSqrtSmoothing);
    const Matrix H = G * U_.transpose();  // row i: (U g_i)^T
    const Vector dmoment = (-2.0 / n) * (features_.transpose() * r.cwiseProduct(q)) +
                           (2.0 / n) * ((mask_.array() * H.array()).matrix().transpose() * w);
    grad += (eps_ / root) * dmoment;
    return (1.0 + lambda) * sr + 2.0 * eps_ * root;
}

Vector RFObjective::least_squares() const {
    const double n = static_cast<double>(features_.rows());
    Matrix gram = features_.transpose() * features_ / n;
    const double ridge = 1e-13 * std::max(1.0, gram.trace() / static_cast<double>(gram.rows()));
    gram.diagonal().array() += ridge;
    const Vector rhs = features_.transpose() * f_ / n;
    return gram.ldlt().solve(rhs);
}

RFSolveResult minimize_rf(const RFObjective& objective, double lambda, const Vector& start,
                          const RFSolveOptions& options) {
    require(lambda >= 0.0 && std::isfinite(lambda), "minimize_rf: lambda must be finite and >= 0");
    require(start.size() == objective.width(), "minimize_rf: start has the wrong length");
    const auto N = objective.width();

    Matrix precond = (1.0 + lambda) * objective.sr_hessian();
    precond.diagonal().array() += 1e-10 * std::max(1e-300, precond.trace() / static_cast<double>(N)) + 1e-14;
    const Eigen::LLT<Matrix> llt(precond);
    require(llt.info() == Eigen::Success, "minimize_rf: preconditioner factorization failed");

    Vector x = start;
    Vector g;
    double fx = objective.value_and_gradient(x, lambda, g);
    std::deque<std::pair<Vector, Vector>> memory;  // (s, y)

    auto converged = [&] { return g.norm() <= options.grad_tol * (1.0 + std::abs(fx)); };

    RFSolveResult result;
    int it = 0;
    int failures = 0;
    for (; it < options.max_iter && !converged(); ++it) {
        // Two-loop recursion with H0 = scale * P^{-1}.
        Vector q = g;
        std::vector<double> alphas(memory.size());
        for (std::size_t k = memory.size(); k-- > 0;) {
            const auto& [s, y] = memory[k];
            alphas[k] = s.dot(q) / y.dot(s);
            q -= alphas[k] * y;
        }
        Vector dir = llt.solve(q);
        if (!memory.empty()) {
            const auto& [s, y] = memory.back();
            dir *= s.dot(y) / y.dot(llt.solve(y));
        }
        for (std::size_t k = 0; k < memory.size(); ++k) {
            const auto& [s, y] = memory[k];
            const double beta = y.dot(dir) / y.dot(s);
            dir += (alphas[k] - beta) * s;
        }
        dir = -dir;
        double slope = g.dot(dir);
        if (!(slope < 0.0)) {
            memory.clear();
            dir = -llt.solve(g);
            slope = g.dot(dir);
        }

        double step = 1.0;
        Vector x_new, g_new;
        double f_new = fx;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = x + step * dir;
            f_new = objective.value_and_gradient(x_new, lambda, g_new);
            if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (memory.empty() || ++failures > 3) break;
            memory.clear();
            continue;
        }
        Vector s = x_new - x;
        Vector y = g_new - g;
        if (s.dot(y) > 1e-16 * s.norm() * y.norm()) {
            memory.emplace_back(std::move(s), std::move(y));
            if (static_cast<int>(memory.size()) > options.memory) memory.pop_front();
        }
        x = std::move(x_new);
        g = std::move(g_new);
        fx = f_new;
    }
    result.theta = x;
    result.objective = fx;
    result.grad_norm = g.norm();
    result.iterations = it;
    if (!converged()) {
        std::ostringstream msg;
        msg << "minimize_rf: gradient norm " << result.grad_norm << " above tolerance after " << it
            << " iterations at lambda = " << lambda;
        throw SolverError(msg.str(), result.grad_norm);
    }
    return result;
}

std::uint64_t realization_seed(std::uint64_t master, int realization) {
    return derive_seed(master, {stream::instance, static_cast<std::uint64_t>(realization)});
}

std::uint64_t weights_seed(std::uint64_t realization, Eigen::Index width) {
    return derive_seed(realization, {stream::weights, static_cast<std::uint64_t>(width)});
}

namespace {

struct Batches {
    Matrix train_x, eval_x;
    Vector train_f, eval_f;
};

Batches draw_batches(const RFSetting& setting, const QuadraticTarget& target, std::uint64_t seed) {
    Batches b;
    b.train_x = sample_sphere(setting.d, setting.n_mc, derive_seed(seed, {stream::train_batch}));
    b.eval_x = sample_sphere(setting.d, setting.n_eval, derive_seed(seed, {stream::eval_batch}));
    b.train_f = target_eval_rows(target, b.train_x);
    b.eval_f = target_eval_rows(target, b.eval_x);
    return b;
}

}  // namespace

RFSolveResult solve_pareto_rf(const RFSetting& setting, const Matrix& U, const QuadraticTarget& target,
                              double lambda, std::uint64_t seed, const RFSolveOptions& options) {
    setting.validate();
    require(U.cols() == setting.d && target.dim() == setting.d, "solve_pareto_rf: dimension mismatch");
    const Batches b = draw_batches(setting, target, seed);
    const RFObjective train(U, b.train_x, b.train_f, setting.noise_sigma, setting.eps);
    const RFObjective eval(U, b.eval_x, b.eval_f, setting.noise_sigma, setting.eps);
    RFSolveResult r = minimize_rf(train, lambda, train.least_squares(), options);
    const RFObjective::Parts p = eval.parts(r.theta);
    r.sr = p.sr;
    r.ar = p.ar;
    return r;
}

std::vector<RFRecord> pareto_sweep_rf(const RFSetting& setting, const QuadraticTarget& target,
                                      std::span<const double> lambdas, std::span<const Eigen::Index> widths,
                                      int realizations, std::uint64_t seed, const RFSolveOptions& options,
                                      int jobs) {
    setting.validate();
    require(realizations >= 1, "pareto_sweep_rf: realizations must be >= 1");
    require(!lambdas.empty() && !widths.empty(), "pareto_sweep_rf: empty lambda or width list");
    require(target.dim() == setting.d, "pareto_sweep_rf: target dimension differs from d");
    std::vector<double> sorted(lambdas.begin(), lambdas.end());
    for (double l : sorted) require(std::isfinite(l) && l >= 0.0, "pareto_sweep_rf: every lambda must be finite and >= 0");
    std::stable_sort(sorted.begin(), sorted.end());
    for (Eigen::Index w : widths) require(w >= 1, "pareto_sweep_rf: widths must be >= 1");

    const std::size_t groups = widths.size() * static_cast<std::size_t>(realizations);
    std::vector<std::vector<RFRecord>> per_group(groups);

    parallel_for(groups, jobs, [&](std::size_t gi) {
        const Eigen::Index width = widths[gi / static_cast<std::size_t>(realizations)];
        const int realization = static_cast<int>(gi % static_cast<std::size_t>(realizations));
        const std::uint64_t rseed = realization_seed(seed, realization);
        const Matrix U = sample_weights(width, setting.d, weights_seed(rseed, width));
        const Batches b = draw_batches(setting, target, rseed);
        const RFObjective train(U, b.train_x, b.train_f, setting.noise_sigma, setting.eps);
        const RFObjective eval(U, b.eval_x, b.eval_f, setting.noise_sigma, setting.eps);
        const Vector ls = train.least_squares();

        std::vector<RFRecord>& records = per_group[gi];
        std::vector<Vector> thetas(sorted.size());
        std::vector<double> objectives(sorted.size());
        records.resize(sorted.size());

        auto solve_from = [&](std::size_t i, const Vector& start) {
            RFRecord& rec = records[i];
            try {
                const RFSolveResult r = minimize_rf(train, sorted[i], start, options);
                thetas[i] = r.theta;
                objectives[i] = r.objective;
                rec.ok = true;
                rec.status = "ok";
            } catch (const SolverError& e) {
                thetas[i] = start;
                objectives[i] = train.value(start, sorted[i]);
                rec.ok = false;
                rec.status = std::string("solver_error: ") + e.what();
            }
        };

        for (std::size_t i = 0; i < sorted.size(); ++i) {
            Vector start = ls;
            if (i > 0 && train.value(thetas[i - 1], sorted[i]) < train.value(ls, sorted[i])) start = thetas[i - 1];
            solve_from(i, start);
        }
        // Restart any lambda whose solution is beaten by another lambda's solution.
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            std::size_t best = i;
            double best_value = objectives[i];
            for (std::size_t j = 0; j < sorted.size(); ++j) {
                const double v = train.value(thetas[j], sorted[i]);
                if (v < best_value) {
                    best_value = v;
                    best = j;
                }
            }
            if (best != i) {
                const Vector start = thetas[best];
                solve_from(i, start);
            }
        }
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            const RFObjective::Parts p = eval.parts(thetas[i]);
            RFRecord& rec = records[i];
            rec.width = width;
            rec.realization = realization;
            rec.lambda = sorted[i];
            rec.sr = p.sr;
            rec.ar = p.ar;
            rec.theta_norm = thetas[i].norm();
            rec.train_objective = objectives[i];
        }
    });

    std::vector<RFRecord> out;
    out.reserve(groups * sorted.size());
    for (auto& g : per_group)
        for (auto& r : g) out.push_back(std::move(r));
    return out;
}

}  // namespace wdro::rf
