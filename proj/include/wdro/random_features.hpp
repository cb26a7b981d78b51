#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wdro/types.hpp"

namespace wdro::rf {

enum class Activation { relu };

struct RFSetting {
    Eigen::Index d = 10;
    Eigen::Index width = 50;   // number of random features N
    double noise_sigma = 0.0;  // sigma of the additive response noise
    double eps = 0.0;
    Eigen::Index n_mc = 20000;    // training batch size
    Eigen::Index n_eval = 20000;  // held-out evaluation batch size
    Activation activation = Activation::relu;

    /// The first-order adversarial risk is only trustworthy for small budgets.
    bool large_eps() const { return eps > 0.5; }
    void validate() const;
};

/// f(x) = beta0 + x^T beta1 + (fstar / d) [x^T G x - tr(G)]
struct QuadraticTarget {
    double beta0 = 0.0;
    Vector beta1;
    double fstar = 0.0;
    Matrix G;

    Eigen::Index dim() const { return beta1.size(); }
};

/// beta1 ~ N(0, beta1_variance I), G with i.i.d. N(0, 1) entries.
QuadraticTarget make_quadratic_target(Eigen::Index d, double beta0, double beta1_variance, double fstar,
                                      std::uint64_t seed);

double target_eval(const QuadraticTarget& target, const Vector& x);
/// Row-wise evaluation over an n x d point matrix.
Vector target_eval_rows(const QuadraticTarget& target, const Matrix& X);

/// n i.i.d. points uniform on the sphere of radius sqrt(d), as rows.
Matrix sample_sphere(Eigen::Index d, Eigen::Index n, std::uint64_t seed);

/// N x d first-layer weights with unit-norm rows.
Matrix sample_weights(Eigen::Index width, Eigen::Index d, std::uint64_t seed);

struct RFModel {
    Matrix U;      // N x d
    Vector theta;  // N
};

struct SampleBatch {
    Matrix X;  // n x d, rows on the sphere of radius sqrt(d)
    Vector y;  // f(x) + w
};

SampleBatch sample_batch(const QuadraticTarget& target, Eigen::Index n, double noise_sigma, std::uint64_t seed);

inline double relu(double t) { return t > 0.0 ? t : 0.0; }
/// sigma'(0) is taken to be 0.
inline double relu_derivative(double t) { return t > 0.0 ? 1.0 : 0.0; }

/// mean (f(x) - theta^T relu(U x))^2 + noise_sigma^2
double sr_empirical(const RFSetting& setting, const RFModel& model, const QuadraticTarget& target,
                    const SampleBatch& batch);

/// SR + 2 eps sqrt(mean[((f - theta^T relu(U x))^2 + sigma^2) ||U^T diag(relu'(U x)) theta||^2]),
/// the first-order adversarial risk with the O(eps^2) remainder dropped.
double ar_firstorder(const RFSetting& setting, const RFModel& model, const QuadraticTarget& target,
                     const SampleBatch& batch);

/// Weighted objective (1 + lambda) SR + 2 eps sqrt(m + smoothing) over a fixed
/// batch and fixed first-layer weights. Precomputes features, activation masks
/// and target values once so that many lambdas can share them.
class RFObjective {
public:
    RFObjective(const Matrix& U, const Matrix& X, const Vector& f_values, double noise_sigma, double eps);

    struct Parts {
        double sr = 0.0;        // mean residual^2 + sigma^2
        double moment = 0.0;    // m = mean[(r^2 + sigma^2) ||U^T D theta||^2]
        double ar = 0.0;        // sr + 2 eps sqrt(m)
    };

    Parts parts(const Vector& theta) const;
    double value(const Vector& theta, double lambda) const;
    /// Value and gradient together; the gradient uses the smoothed square root.
    double value_and_gradient(const Vector& theta, double lambda, Vector& grad) const;

    const Matrix& features() const { return features_; }
    Eigen::Index width() const { return U_.rows(); }
    double eps() const { return eps_; }

    /// Minimizer of (1 + lambda) SR, i.e. least squares on the features.
    Vector least_squares() const;
    /// (2 / n) S^T S, the Hessian of SR.
    const Matrix& sr_hessian() const { return sr_hessian_; }

    static constexpr double kSqrtSmoothing = 1e-12;

private:
    Matrix U_;
    Matrix features_;  // n x N, relu(X U^T)
    Matrix mask_;      // n x N, relu'(X U^T)
    Vector f_;
    double noise2_;
    double eps_;
    Matrix sr_hessian_;
};

struct RFSolveOptions {
    double grad_tol = 1e-5;  // stop when ||grad|| <= grad_tol (1 + objective)
    int max_iter = 5000;
    int memory = 12;
};

struct RFSolveResult {
    Vector theta;
    double objective = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    double sr = 0.0;  // held-out evaluation batch
    double ar = 0.0;  // held-out evaluation batch, first order
};

/// Preconditioned L-BFGS with backtracking line search on the weighted
/// objective. The preconditioner is the Hessian of (1 + lambda) SR.
RFSolveResult minimize_rf(const RFObjective& objective, double lambda, const Vector& start,
                          const RFSolveOptions& options = {});

/// Draws the training and evaluation batches from `seed`, solves for lambda
/// and reports SR / first-order AR on the evaluation batch.
RFSolveResult solve_pareto_rf(const RFSetting& setting, const Matrix& U, const QuadraticTarget& target,
                              double lambda, std::uint64_t seed, const RFSolveOptions& options = {});

/// Seed of realization k within a sweep; batches for that realization come from it.
std::uint64_t realization_seed(std::uint64_t master, int realization);
/// Seed of the first-layer weights for a given width within a realization.
std::uint64_t weights_seed(std::uint64_t realization, Eigen::Index width);

struct RFRecord {
    Eigen::Index width = 0;
    int realization = 0;
    double lambda = 0.0;
    double sr = 0.0;
    double ar = 0.0;
    double theta_norm = 0.0;
    double train_objective = 0.0;
    bool ok = true;
    std::string status = "ok";
};

/// Sweep over widths x realizations x lambdas. For each realization the
/// training/evaluation batches are shared across widths and lambdas; U is
/// drawn per (width, realization). Records are ordered by (width,
/// realization, lambda) and do not depend on `jobs`.
std::vector<RFRecord> pareto_sweep_rf(const RFSetting& setting, const QuadraticTarget& target,
                                      std::span<const double> lambdas, std::span<const Eigen::Index> widths,
                                      int realizations, std::uint64_t seed, const RFSolveOptions& options = {},
                                      int jobs = 1);

}  // namespace wdro::rf
