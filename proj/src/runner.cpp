#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <tuple>

#include "wdro/binclass.hpp"
#include "wdro/cli.hpp"
#include "wdro/linreg.hpp"
#include "wdro/optimize.hpp"
#include "wdro/random_features.hpp"
#include "wdro/rng.hpp"

namespace wdro::cli {

namespace {

Vector realize(const VectorSpec& spec, Eigen::Index d, std::uint64_t seed) {
    switch (spec.kind) {
        case VectorSpec::Kind::literal: return spec.values;
        case VectorSpec::Kind::constant: return Vector::Constant(d, spec.constant);
        case VectorSpec::Kind::gaussian: {
            Rng rng(seed);
            std::normal_distribution<double> normal(0.0, std::sqrt(spec.variance));
            Vector v(d);
            for (Eigen::Index i = 0; i < d; ++i) v[i] = normal(rng);
            return v;
        }
    }
    return {};
}

std::uint64_t instance_seed(std::uint64_t master, int realization) {
    return derive_seed(master, {stream::instance, static_cast<std::uint64_t>(realization)});
}

linreg::LinRegSetting linreg_setting(const SweepConfig& c, double eps, int realization) {
    const LinRegParams& p = c.linreg;
    if (p.v) return linreg::LinRegSetting{*p.sigma, *p.v, *p.sigma_y2, eps};
    const Matrix sigma = p.sigma ? *p.sigma : linreg::ar1_covariance(p.d, p.rho);
    const Vector theta0 = realize(*p.theta0, p.d, instance_seed(c.seed.value_or(0), realization));
    return linreg::GenerativeLinReg{theta0, sigma, p.noise_sigma}.to_setting(eps);
}

binclass::GaussMixSetting binclass_setting(const SweepConfig& c, double eps, int realization) {
    const BinClassParams& p = c.binclass;
    binclass::GaussMixSetting s;
    s.mu = realize(p.mu, p.d, instance_seed(c.seed.value_or(0), realization));
    s.sigma = p.sigma ? *p.sigma : linreg::ar1_covariance(p.d, p.rho);
    s.eps = eps;
    s.r = p.r;
    s.prior_plus = p.prior_plus;
    return s;
}

std::string cell_name(const CsvRow& r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s eps=%.17g lambda=%.17g realization=%d", r.setting.c_str(), r.eps, r.lambda,
                  r.realization);
    return buf;
}

void execute_linreg(const SweepConfig& c, const std::vector<double>& grid, int jobs, SweepResult& out) {
    linreg::FixedPointOptions fp;
    fp.tol = c.tolerances.fixed_point_tol;
    fp.max_damped_iter = std::min(fp.max_damped_iter, c.tolerances.max_iter);
    fp.max_bisect_iter = std::min(fp.max_bisect_iter, c.tolerances.max_iter);
    fp.gamma_max = c.tolerances.gamma_max;
    const std::size_t nl = grid.size();
    const std::size_t nk = static_cast<std::size_t>(c.realizations);
    std::vector<CsvRow> rows(c.eps.size() * nk * nl);
    parallel_for(rows.size(), jobs, [&](std::size_t idx) {
        const std::size_t ei = idx / (nk * nl);
        const int k = static_cast<int>((idx / nl) % nk);
        const double lambda = grid[idx % nl];
        CsvRow& row = rows[idx];
        row.setting = "linreg";
        row.eps = c.eps[ei];
        row.lambda = lambda;
        row.realization = k;
        const linreg::LinRegSetting s = linreg_setting(c, c.eps[ei], k);
        try {
            const linreg::ParetoPoint p = linreg::solve_pareto_point(s, lambda, fp);
            row.sr = p.sr;
            row.ar = p.ar;
            row.gamma_star = p.gamma_star;
            row.branch = std::string(linreg::to_string(p.branch));
            row.theta_norm = p.theta.norm();
        } catch (const SolverError& e) {
            row.sr = row.ar = std::numeric_limits<double>::quiet_NaN();
            row.status = std::string("solver_error: ") + e.what();
        }
    });
    out.rows = std::move(rows);
}

void execute_binclass(const SweepConfig& c, const std::vector<double>& grid, int jobs, SweepResult& out) {
    const std::size_t nk = static_cast<std::size_t>(c.realizations);
    const std::size_t groups = c.eps.size() * nk;
    std::vector<std::vector<CsvRow>> per_group(groups);
    std::vector<std::vector<std::string>> warnings(groups);
    parallel_for(groups, jobs, [&](std::size_t g) {
        const double eps = c.eps[g / nk];
        const int k = static_cast<int>(g % nk);
        const binclass::GaussMixSetting s = binclass_setting(c, eps, k);
        binclass::OuterOptions opt;
        opt.seed = derive_seed(c.seed.value_or(0), {stream::restart, static_cast<std::uint64_t>(k)});
        opt.random_starts = c.tolerances.random_starts;
        opt.max_evaluations = c.tolerances.max_evaluations;
        opt.inner.log_tol = c.tolerances.inner_log_tol;
        std::vector<CsvRow>& rows = per_group[g];
        try {
            for (const binclass::BinParetoPoint& p : binclass::pareto_sweep_bin(s, grid, opt, 1)) {
                CsvRow row;
                row.setting = "binclass";
                row.eps = eps;
                row.lambda = p.lambda;
                row.realization = k;
                row.sr = p.sr;
                row.ar = p.ar;
                row.gamma_star = p.gamma_star;
                row.a = p.a;
                row.b = p.b;
                row.theta_norm = p.theta.norm();
                if (p.warning) warnings[g].push_back(cell_name(row) + ": " + p.diagnostic);
                rows.push_back(std::move(row));
            }
        } catch (const SolverError& e) {
            rows.clear();
            for (double lambda : grid) {
                CsvRow row;
                row.setting = "binclass";
                row.eps = eps;
                row.lambda = lambda;
                row.realization = k;
                row.sr = row.ar = std::numeric_limits<double>::quiet_NaN();
                row.status = std::string("solver_error: ") + e.what();
                rows.push_back(std::move(row));
            }
        }
    });
    for (std::size_t g = 0; g < groups; ++g) {
        for (auto& r : per_group[g]) out.rows.push_back(std::move(r));
        for (auto& w : warnings[g]) out.warnings.push_back(std::move(w));
    }
}

constexpr double kNormGrowthFlag = 10.0;

void execute_rf(const SweepConfig& c, const std::vector<double>& grid, int jobs, SweepResult& out) {
    const RFParams& p = c.rf;
    const std::uint64_t seed = c.seed.value_or(0);
    const rf::QuadraticTarget target =
        rf::make_quadratic_target(p.d, p.beta0, p.beta1_variance, p.fstar, derive_seed(seed, {stream::target}));
    rf::RFSolveOptions opt;
    opt.grad_tol = c.tolerances.grad_tol;
    opt.max_iter = c.tolerances.max_iter;
    for (double eps : c.eps) {
        rf::RFSetting s;
        s.d = p.d;
        s.width = p.widths.front();
        s.noise_sigma = p.noise_sigma;
        s.eps = eps;
        s.n_mc = p.n_mc;
        s.n_eval = p.n_eval;
        if (s.large_eps()) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "rf eps=%.17g: first-order adversarial risk is unreliable above 0.5", eps);
            out.warnings.emplace_back(buf);
        }
        // Records arrive ordered by (width, realization, lambda). The norm should stay
        // bounded in lambda; a tenfold rise over the smallest-lambda norm is flagged.
        double reference_norm = 0.0;
        bool flagged = false;
        for (const rf::RFRecord& r : rf::pareto_sweep_rf(s, target, grid, p.widths, c.realizations, seed, opt, jobs)) {
            if (r.lambda == grid.front()) {
                reference_norm = r.theta_norm;
                flagged = false;
            } else if (r.ok && !flagged && r.theta_norm > kNormGrowthFlag * reference_norm) {
                char buf[160];
                std::snprintf(buf, sizeof buf, "rf/N=%ld eps=%.17g realization %d: ||theta|| grew from %.6g to %.6g",
                              static_cast<long>(r.width), eps, r.realization, reference_norm, r.theta_norm);
                out.warnings.emplace_back(buf);
                flagged = true;
            }
            CsvRow row;
            row.setting = "rf/N=" + std::to_string(r.width);
            row.width = r.width;
            row.eps = eps;
            row.lambda = r.lambda;
            row.realization = r.realization;
            row.sr = r.sr;
            row.ar = r.ar;
            row.theta_norm = r.theta_norm;
            row.status = r.ok ? "ok" : r.status;
            out.rows.push_back(std::move(row));
        }
    }
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string format_optional(const std::optional<double>& x) { return x ? format_double(*x) : std::string(); }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

std::string iso_time_utc(std::chrono::system_clock::time_point t) {
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

SweepResult execute(const SweepConfig& config, int jobs) {
    require(!config.stochastic() || config.seed.has_value(), "execute: a seed is required for stochastic settings");
    const std::vector<double> grid = config.lambda_grid();
    SweepResult out;
    switch (config.kind) {
        case SettingKind::linreg: execute_linreg(config, grid, jobs, out); break;
        case SettingKind::binclass: execute_binclass(config, grid, jobs, out); break;
        case SettingKind::rf: execute_rf(config, grid, jobs, out); break;
    }
    std::stable_sort(out.rows.begin(), out.rows.end(), [](const CsvRow& x, const CsvRow& y) {
        return std::tie(x.eps, x.lambda, x.realization, x.width) < std::tie(y.eps, y.lambda, y.realization, y.width);
    });
    for (const CsvRow& r : out.rows)
        if (r.status != "ok") out.failures.push_back(cell_name(r) + ": " + r.status);
    return out;
}

std::string format_csv(const SweepResult& result) {
    const bool with_status = !result.ok();
    std::string text = kCsvHeader;
    if (with_status) text += ",status";
    text += '\n';
    for (const CsvRow& r : result.rows) {
        text += csv_field(r.setting) + ',' + format_double(r.eps) + ',' + format_double(r.lambda) + ',' +
                std::to_string(r.realization) + ',' + format_double(r.sr) + ',' + format_double(r.ar) + ',' +
                format_optional(r.gamma_star) + ',' + format_optional(r.a) + ',' + format_optional(r.b) + ',' +
                r.branch + ',' + format_optional(r.theta_norm);
        if (with_status) text += ',' + csv_field(r.status);
        text += '\n';
    }
    return text;
}

int run_command(const std::string& config_path, const RunOverrides& overrides, std::ostream& out,
                std::ostream& err) {
    SweepConfig config;
    try {
        config = load_config(config_path);
    } catch (const ConfigError& e) {
        err << e.what() << '\n';
        return kExitInvalidConfig;
    }
    if (overrides.seed) config.seed = overrides.seed;
    if (overrides.out) config.output = *overrides.out;
    if (config.output.empty()) {
        err << config_path << ":1: output: no output path; set 'output' or pass --out\n";
        return kExitInvalidConfig;
    }
    if (config.stochastic() && !config.seed) {
        err << config_path << ":1: seed: required because the setting draws random quantities; set 'seed' or pass --seed\n";
        return kExitInvalidConfig;
    }

    const auto started = std::chrono::system_clock::now();
    const auto t0 = std::chrono::steady_clock::now();
    SweepResult result;
    try {
        result = execute(config, std::max(1, overrides.jobs));
    } catch (const InputError& e) {
        err << config_path << ": invalid setting: " << e.what() << '\n';
        return kExitInvalidConfig;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    Json meta;
    meta["seed"] = config.seed ? Json(*config.seed) : Json(nullptr);
    meta["version"] = kVersion;
    meta["started_at"] = iso_time_utc(started);
    meta["wall_clock_seconds"] = seconds;
    meta["lambda_inf"] = Json{{"requested", config.lambda_inf}, {"substituted_lambda", kLambdaInf}};
    meta["rows"] = result.rows.size();
    meta["failed_cells"] = result.failures.size();
    meta["warnings"] = result.warnings;
    Json sidecar;
    sidecar["config"] = to_json(config);
    sidecar["metadata"] = std::move(meta);

    try {
        write_file(config.output, format_csv(result));
        write_file(config.output + ".json", sidecar.dump(2) + "\n");
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitIoError;
    }
    for (const std::string& w : result.warnings) err << "warning: " << w << '\n';
    out << "wrote " << result.rows.size() << " rows to " << config.output << '\n';
    if (!result.ok()) {
        err << result.failures.size() << " cell(s) failed:\n";
        for (const std::string& f : result.failures) err << "  " << f << '\n';
        return kExitSolverFailure;
    }
    return kExitOk;
}

}  // namespace wdro::cli
