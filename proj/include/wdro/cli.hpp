#pragma once

// Batch front end: configuration schema, sweep execution, CSV and sidecar
// output, and the verification suites behind `wdro verify`.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wdro/types.hpp"

namespace wdro::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "1.0.0";
/// Stand-in for lambda = infinity.
inline constexpr double kLambdaInf = 1e6;

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitIoError = 1;
inline constexpr int kExitInvalidConfig = 2;
inline constexpr int kExitSolverFailure = 3;

/// Invalid configuration. The message starts with "<source>:<line>: ".
class ConfigError : public InputError {
public:
    ConfigError(const std::string& what, int line) : InputError(what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

enum class SettingKind { linreg, binclass, rf };
std::string_view to_string(SettingKind kind);

/// Vector given either literally or as a generative rule.
struct VectorSpec {
    enum class Kind { literal, constant, gaussian } kind = Kind::constant;
    Vector values;         // literal
    double constant = 0.0; // every entry equal to this
    double variance = 0.0; // i.i.d. N(0, variance) entries, drawn per realization
    bool random() const { return kind == Kind::gaussian; }
};

struct LinRegParams {
    // Generative form: y = x^T theta0 + w.
    Eigen::Index d = 0;
    double rho = 0.0;
    double noise_sigma = 1.0;
    std::optional<VectorSpec> theta0;
    // Moment form, mutually exclusive with theta0 / rho / noise_sigma.
    std::optional<Matrix> sigma;
    std::optional<Vector> v;
    std::optional<double> sigma_y2;
};

struct BinClassParams {
    Eigen::Index d = 0;
    double rho = 0.0;
    std::optional<Matrix> sigma;  // overrides rho
    double r = 2.0;
    double prior_plus = 0.5;
    VectorSpec mu;
};

struct RFParams {
    Eigen::Index d = 10;
    std::vector<Eigen::Index> widths;
    double noise_sigma = 0.0;
    Eigen::Index n_mc = 20000;
    Eigen::Index n_eval = 20000;
    double beta0 = 0.0;
    double beta1_variance = 0.0;  // defaults to 1 / d
    double fstar = 1.0;
};

struct Tolerances {
    double fixed_point_tol = 1e-12;
    double gamma_max = 1e12;
    double inner_log_tol = 1e-9;
    int random_starts = 6;
    int max_evaluations = 6000;
    double grad_tol = 1e-5;
    int max_iter = 5000;
};

struct SweepConfig {
    SettingKind kind = SettingKind::linreg;
    std::optional<std::uint64_t> seed;
    int realizations = 1;
    std::string output;
    std::vector<double> eps;
    std::vector<double> lambdas;  // finite, strictly increasing
    bool lambda_inf = false;      // append kLambdaInf
    Tolerances tolerances;
    LinRegParams linreg;
    BinClassParams binclass;
    RFParams rf;

    /// The grid actually solved, lambda_inf included.
    std::vector<double> lambda_grid() const;
    /// True when some quantity is drawn at random and a seed is required.
    bool stochastic() const;
};

/// Parses and validates a JSON configuration. A metadata sidecar written by
/// `run` is accepted as well. Errors carry the line of the offending value.
SweepConfig parse_config(std::string_view text, std::string_view source = "<config>");
SweepConfig load_config(const std::string& path);

/// Fully resolved configuration in the input schema; parse_config(to_json(c)) == c.
Json to_json(const SweepConfig& config);

struct CsvRow {
    std::string setting;
    double eps = 0.0;
    double lambda = 0.0;
    int realization = 0;
    double sr = 0.0;
    double ar = 0.0;
    std::optional<double> gamma_star;
    std::optional<double> a;
    std::optional<double> b;
    std::string branch;
    std::optional<double> theta_norm;
    std::string status = "ok";
    Eigen::Index width = 0;  // sort key for random features, not a column
};

struct SweepResult {
    std::vector<CsvRow> rows;  // sorted by (eps, lambda, realization, width)
    std::vector<std::string> failures;
    std::vector<std::string> warnings;  // diagnostics that do not fail the run
    bool ok() const { return failures.empty(); }
};

SweepResult execute(const SweepConfig& config, int jobs = 1);

inline constexpr const char* kCsvHeader = "setting,eps,lambda,realization,sr,ar,gamma_star,a,b,branch,theta_norm";
/// CSV text; a trailing status column is added when any cell failed.
std::string format_csv(const SweepResult& result);

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    int jobs = 1;
};

/// The `run` verb: load, execute, write CSV and `<csv>.json`. Returns the exit code.
int run_command(const std::string& config_path, const RunOverrides& overrides, std::ostream& out,
                std::ostream& err);

struct Check {
    std::string name;
    double measured = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// 20 empirical instances (m = 50, d in {2, 5}, eps in {0.1, 1}): primal
/// ascent, 1-D dual and closed form.
std::vector<Check> verify_duality(std::uint64_t seed, int jobs = 1);
/// Closed-form E[phi] against Monte Carlo on a 27-point (a, b, gamma) grid,
/// measured in standard errors.
std::vector<Check> verify_lemma1(std::uint64_t seed, std::int64_t samples = 10'000'000, int jobs = 1);
/// Analytic gradients against central differences: random-features objective
/// at 20 random points (d = 10, N = 50) and the linear-regression objective.
std::vector<Check> verify_gradients(std::uint64_t seed, int jobs = 1);

/// The `verify` verb. Prints one line per check; returns 0 iff all pass.
int verify_command(std::string_view suite, std::uint64_t seed, int jobs, std::ostream& out, std::ostream& err);

}  // namespace wdro::cli
