#include <cmath>
#include <fstream>
#include <initializer_list>
#include <map>
#include <set>
#include <sstream>

#include "wdro/binclass.hpp"
#include "wdro/cli.hpp"
#include "wdro/linreg.hpp"

namespace wdro::cli {

std::string_view to_string(SettingKind kind) {
    switch (kind) {
        case SettingKind::linreg: return "linreg";
        case SettingKind::binclass: return "binclass";
        case SettingKind::rf: return "rf";
    }
    return "unknown";
}

std::vector<double> SweepConfig::lambda_grid() const {
    std::vector<double> grid = lambdas;
    if (lambda_inf) grid.push_back(kLambdaInf);
    return grid;
}

bool SweepConfig::stochastic() const {
    switch (kind) {
        case SettingKind::linreg: return linreg.theta0 && linreg.theta0->random();
        case SettingKind::binclass: return binclass.mu.random();
        case SettingKind::rf: return true;
    }
    return true;
}

namespace {

int line_of_offset(std::string_view text, std::size_t offset) {
    offset = std::min(offset, text.size());
    int line = 1;
    for (std::size_t i = 0; i < offset; ++i)
        if (text[i] == '\n') ++line;
    return line;
}

std::string escape_pointer_token(const std::string& key) {
    std::string out;
    for (char c : key) {
        if (c == '~') out += "~0";
        else if (c == '/') out += "~1";
        else out += c;
    }
    return out;
}

// Maps JSON pointers to the line on which their value starts. Runs on text
// that has already parsed successfully, so it only has to track structure.
class LineIndex {
public:
    explicit LineIndex(std::string_view text) : text_(text) {
        skip_ws();
        if (pos_ < text_.size()) value("");
    }

    int line(std::string pointer) const {
        while (true) {
            auto it = lines_.find(pointer);
            if (it != lines_.end()) return it->second;
            if (pointer.empty()) return 1;
            pointer.erase(pointer.rfind('/'));
        }
    }

private:
    void skip_ws() {
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (c == '\n') ++line_;
            if (c != ' ' && c != '\t' && c != '\n' && c != '\r') break;
            ++pos_;
        }
    }

    std::string string_token() {
        std::string out;
        ++pos_;  // opening quote
        while (pos_ < text_.size() && text_[pos_] != '"') {
            if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
                out += text_[pos_ + 1];
                pos_ += 2;
                continue;
            }
            out += text_[pos_++];
        }
        ++pos_;  // closing quote
        return out;
    }

    void value(const std::string& pointer) {
        skip_ws();
        lines_[pointer] = line_;
        if (pos_ >= text_.size()) return;
        const char c = text_[pos_];
        if (c == '{') {
            ++pos_;
            skip_ws();
            if (text_[pos_] == '}') {
                ++pos_;
                return;
            }
            while (pos_ < text_.size()) {
                skip_ws();
                const std::string key = string_token();
                skip_ws();
                ++pos_;  // ':'
                value(pointer + "/" + escape_pointer_token(key));
                skip_ws();
                if (text_[pos_++] == '}') return;
            }
        } else if (c == '[') {
            ++pos_;
            skip_ws();
            if (text_[pos_] == ']') {
                ++pos_;
                return;
            }
            for (int i = 0; pos_ < text_.size(); ++i) {
                value(pointer + "/" + std::to_string(i));
                skip_ws();
                if (text_[pos_++] == ']') return;
            }
        } else if (c == '"') {
            string_token();
        } else {
            while (pos_ < text_.size() && std::string_view(",]} \t\r\n").find(text_[pos_]) == std::string_view::npos)
                ++pos_;
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    std::map<std::string, int> lines_;
};

std::string display_path(const std::string& pointer) {
    std::string out;
    std::size_t i = 1;
    while (i <= pointer.size()) {
        const std::size_t next = pointer.find('/', i);
        std::string token = pointer.substr(i, next == std::string::npos ? std::string::npos : next - i);
        const bool index = !token.empty() && token.find_first_not_of("0123456789") == std::string::npos;
        if (index) out += "[" + token + "]";
        else out += (out.empty() ? "" : ".") + token;
        if (next == std::string::npos) break;
        i = next + 1;
    }
    return out;
}

class Reader {
public:
    Reader(const LineIndex& lines, std::string source) : lines_(lines), source_(std::move(source)) {}

    [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
        const int line = lines_.line(pointer);
        const std::string where = display_path(pointer);
        throw ConfigError(source_ + ":" + std::to_string(line) + ": " + (where.empty() ? "" : where + ": ") + message,
                          line);
    }

    static std::string child(const std::string& pointer, const std::string& key) {
        return pointer + "/" + escape_pointer_token(key);
    }

    void expect_object(const Json& j, const std::string& pointer) const {
        if (!j.is_object()) fail(pointer, "expected an object");
    }

    void check_keys(const Json& obj, const std::string& pointer, std::initializer_list<const char*> allowed) const {
        const std::set<std::string> keys(allowed.begin(), allowed.end());
        for (auto it = obj.begin(); it != obj.end(); ++it)
            if (!keys.count(it.key())) fail(child(pointer, it.key()), "unknown key");
    }

    double number(const Json& j, const std::string& pointer) const {
        if (!j.is_number()) fail(pointer, "expected a number");
        const double x = j.get<double>();
        if (!std::isfinite(x)) fail(pointer, "expected a finite number");
        return x;
    }

    double nonnegative(const Json& j, const std::string& pointer) const {
        const double x = number(j, pointer);
        if (x < 0.0) fail(pointer, "must be >= 0");
        return x;
    }

    double positive(const Json& j, const std::string& pointer) const {
        const double x = number(j, pointer);
        if (!(x > 0.0)) fail(pointer, "must be > 0");
        return x;
    }

    long long integer(const Json& j, const std::string& pointer, long long lo) const {
        if (!j.is_number_integer()) fail(pointer, "expected an integer");
        if (j.is_number_unsigned() && j.get<std::uint64_t>() > static_cast<std::uint64_t>(INT32_MAX))
            fail(pointer, "integer out of range");
        const long long x = j.get<long long>();
        if (x < lo) fail(pointer, "must be >= " + std::to_string(lo));
        if (x > INT32_MAX) fail(pointer, "integer out of range");
        return x;
    }

    std::uint64_t unsigned64(const Json& j, const std::string& pointer) const {
        if (j.is_number_unsigned()) return j.get<std::uint64_t>();
        if (j.is_number_integer()) {
            if (j.get<long long>() < 0) fail(pointer, "must be >= 0");
            return static_cast<std::uint64_t>(j.get<long long>());
        }
        fail(pointer, "expected a nonnegative integer");
    }

    bool boolean(const Json& j, const std::string& pointer) const {
        if (!j.is_boolean()) fail(pointer, "expected true or false");
        return j.get<bool>();
    }

    std::string string(const Json& j, const std::string& pointer) const {
        if (!j.is_string()) fail(pointer, "expected a string");
        return j.get<std::string>();
    }

    Vector vector(const Json& j, const std::string& pointer) const {
        if (!j.is_array() || j.empty()) fail(pointer, "expected a nonempty array of numbers");
        Vector v(static_cast<Eigen::Index>(j.size()));
        for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], pointer + "/" + std::to_string(i));
        return v;
    }

    Matrix matrix(const Json& j, const std::string& pointer) const {
        if (!j.is_array() || j.empty()) fail(pointer, "expected a nonempty array of rows");
        const auto n = static_cast<Eigen::Index>(j.size());
        Matrix m(n, n);
        for (std::size_t i = 0; i < j.size(); ++i) {
            const std::string row = pointer + "/" + std::to_string(i);
            const Vector r = vector(j[i], row);
            if (r.size() != n) fail(row, "matrix must be square");
            m.row(static_cast<Eigen::Index>(i)) = r.transpose();
        }
        return m;
    }

    VectorSpec vector_spec(const Json& j, const std::string& pointer) const {
        VectorSpec spec;
        if (j.is_array()) {
            spec.kind = VectorSpec::Kind::literal;
            spec.values = vector(j, pointer);
            return spec;
        }
        if (!j.is_object() || j.size() != 1)
            fail(pointer, "expected an array or an object with exactly one of 'constant', 'variance'");
        check_keys(j, pointer, {"constant", "variance"});
        if (j.contains("constant")) {
            spec.kind = VectorSpec::Kind::constant;
            spec.constant = number(j["constant"], child(pointer, "constant"));
        } else {
            spec.kind = VectorSpec::Kind::gaussian;
            spec.variance = positive(j["variance"], child(pointer, "variance"));
        }
        return spec;
    }

    double r_value(const Json& j, const std::string& pointer) const {
        if (j.is_string()) {
            if (j.get<std::string>() == "inf") return binclass::kInf;
            fail(pointer, "expected a number >= 1 or \"inf\"");
        }
        const double r = number(j, pointer);
        if (r < 1.0) fail(pointer, "must be >= 1");
        return r;
    }

private:
    const LineIndex& lines_;
    std::string source_;
};

std::vector<double> parse_lambda(const Reader& rd, const Json& j, const std::string& pointer) {
    std::vector<double> grid;
    if (j.is_array()) {
        if (j.empty()) rd.fail(pointer, "lambda grid must be nonempty");
        for (std::size_t i = 0; i < j.size(); ++i) grid.push_back(rd.nonnegative(j[i], pointer + "/" + std::to_string(i)));
        for (std::size_t i = 1; i < grid.size(); ++i)
            if (!(grid[i] > grid[i - 1])) rd.fail(pointer + "/" + std::to_string(i), "lambda grid must be strictly increasing");
        return grid;
    }
    if (!j.is_object()) rd.fail(pointer, "expected an array or {\"min\", \"max\", \"count\"}");
    rd.check_keys(j, pointer, {"min", "max", "count"});
    for (const char* key : {"min", "max", "count"})
        if (!j.contains(key)) rd.fail(pointer, std::string("geometric grid needs '") + key + "'");
    const double lo = rd.positive(j["min"], Reader::child(pointer, "min"));
    const double hi = rd.positive(j["max"], Reader::child(pointer, "max"));
    const long long count = rd.integer(j["count"], Reader::child(pointer, "count"), 1);
    if (count == 1) {
        if (lo != hi) rd.fail(Reader::child(pointer, "count"), "a one-point grid needs min == max");
        return {lo};
    }
    if (!(hi > lo)) rd.fail(Reader::child(pointer, "max"), "must exceed min");
    const double ratio = std::log(hi / lo);
    for (long long k = 0; k < count; ++k)
        grid.push_back(k == count - 1 ? hi : lo * std::exp(ratio * static_cast<double>(k) / static_cast<double>(count - 1)));
    return grid;
}

Tolerances parse_tolerances(const Reader& rd, const Json& j, const std::string& pointer) {
    rd.expect_object(j, pointer);
    rd.check_keys(j, pointer,
                  {"fixed_point_tol", "gamma_max", "inner_log_tol", "random_starts", "max_evaluations", "grad_tol",
                   "max_iter"});
    Tolerances t;
    auto at = [&](const char* key) { return Reader::child(pointer, key); };
    if (j.contains("fixed_point_tol")) t.fixed_point_tol = rd.positive(j["fixed_point_tol"], at("fixed_point_tol"));
    if (j.contains("gamma_max")) t.gamma_max = rd.positive(j["gamma_max"], at("gamma_max"));
    if (j.contains("inner_log_tol")) t.inner_log_tol = rd.positive(j["inner_log_tol"], at("inner_log_tol"));
    if (j.contains("random_starts")) t.random_starts = static_cast<int>(rd.integer(j["random_starts"], at("random_starts"), 0));
    if (j.contains("max_evaluations"))
        t.max_evaluations = static_cast<int>(rd.integer(j["max_evaluations"], at("max_evaluations"), 1));
    if (j.contains("grad_tol")) t.grad_tol = rd.positive(j["grad_tol"], at("grad_tol"));
    if (j.contains("max_iter")) t.max_iter = static_cast<int>(rd.integer(j["max_iter"], at("max_iter"), 1));
    return t;
}

Eigen::Index resolve_dim(const Reader& rd, const Json& block, const std::string& pointer, Eigen::Index from_data,
                         const char* data_key) {
    if (block.contains("d")) {
        const auto d = static_cast<Eigen::Index>(rd.integer(block["d"], Reader::child(pointer, "d"), 1));
        if (from_data > 0 && d != from_data)
            rd.fail(Reader::child(pointer, data_key), "length " + std::to_string(from_data) + " differs from d = " +
                                                          std::to_string(d));
        return d;
    }
    if (from_data == 0) rd.fail(pointer, "'d' is required unless a literal vector or matrix fixes the dimension");
    return from_data;
}

double parse_rho(const Reader& rd, const Json& block, const std::string& pointer) {
    if (!block.contains("rho")) return 0.0;
    const double rho = rd.number(block["rho"], Reader::child(pointer, "rho"));
    if (!(std::abs(rho) < 1.0)) rd.fail(Reader::child(pointer, "rho"), "must satisfy |rho| < 1");
    return rho;
}

LinRegParams parse_linreg(const Reader& rd, const Json& j, const std::string& pointer) {
    rd.expect_object(j, pointer);
    rd.check_keys(j, pointer, {"d", "rho", "noise_sigma", "theta0", "sigma", "v", "sigma_y2"});
    LinRegParams p;
    auto at = [&](const char* key) { return Reader::child(pointer, key); };
    const bool moments = j.contains("v") || j.contains("sigma_y2");
    if (moments) {
        for (const char* key : {"sigma", "v", "sigma_y2"})
            if (!j.contains(key)) rd.fail(pointer, std::string("moment form needs '") + key + "'");
        for (const char* key : {"theta0", "rho", "noise_sigma"})
            if (j.contains(key)) rd.fail(at(key), "not allowed together with 'v' / 'sigma_y2'");
        p.sigma = rd.matrix(j["sigma"], at("sigma"));
        p.v = rd.vector(j["v"], at("v"));
        p.sigma_y2 = rd.nonnegative(j["sigma_y2"], at("sigma_y2"));
        if (p.v->size() != p.sigma->rows()) rd.fail(at("v"), "length differs from the size of sigma");
        p.d = resolve_dim(rd, j, pointer, p.v->size(), "v");
        return p;
    }
    if (!j.contains("theta0")) rd.fail(pointer, "needs 'theta0' (generative form) or 'sigma', 'v', 'sigma_y2'");
    p.theta0 = rd.vector_spec(j["theta0"], at("theta0"));
    Eigen::Index from_data = p.theta0->kind == VectorSpec::Kind::literal ? p.theta0->values.size() : 0;
    const char* data_key = "theta0";
    if (j.contains("sigma")) {
        if (j.contains("rho")) rd.fail(at("rho"), "not allowed together with 'sigma'");
        p.sigma = rd.matrix(j["sigma"], at("sigma"));
        if (from_data > 0 && from_data != p.sigma->rows()) rd.fail(at("sigma"), "size differs from theta0");
        if (from_data == 0) {
            from_data = p.sigma->rows();
            data_key = "sigma";
        }
    }
    p.d = resolve_dim(rd, j, pointer, from_data, data_key);
    p.rho = parse_rho(rd, j, pointer);
    if (j.contains("noise_sigma")) p.noise_sigma = rd.nonnegative(j["noise_sigma"], at("noise_sigma"));
    return p;
}

BinClassParams parse_binclass(const Reader& rd, const Json& j, const std::string& pointer) {
    rd.expect_object(j, pointer);
    rd.check_keys(j, pointer, {"d", "rho", "sigma", "r", "prior_plus", "mu"});
    BinClassParams p;
    auto at = [&](const char* key) { return Reader::child(pointer, key); };
    if (!j.contains("mu")) rd.fail(pointer, "needs 'mu'");
    p.mu = rd.vector_spec(j["mu"], at("mu"));
    Eigen::Index from_data = p.mu.kind == VectorSpec::Kind::literal ? p.mu.values.size() : 0;
    const char* data_key = "mu";
    if (j.contains("sigma")) {
        if (j.contains("rho")) rd.fail(at("rho"), "not allowed together with 'sigma'");
        p.sigma = rd.matrix(j["sigma"], at("sigma"));
        if (from_data > 0 && from_data != p.sigma->rows()) rd.fail(at("sigma"), "size differs from mu");
        if (from_data == 0) {
            from_data = p.sigma->rows();
            data_key = "sigma";
        }
    }
    p.d = resolve_dim(rd, j, pointer, from_data, data_key);
    p.rho = parse_rho(rd, j, pointer);
    if (j.contains("r")) p.r = rd.r_value(j["r"], at("r"));
    if (j.contains("prior_plus")) {
        p.prior_plus = rd.number(j["prior_plus"], at("prior_plus"));
        if (!(p.prior_plus > 0.0 && p.prior_plus < 1.0)) rd.fail(at("prior_plus"), "must lie in (0, 1)");
    }
    return p;
}

RFParams parse_rf(const Reader& rd, const Json& j, const std::string& pointer) {
    rd.expect_object(j, pointer);
    rd.check_keys(j, pointer, {"d", "widths", "noise_sigma", "n_mc", "n_eval", "beta0", "beta1_variance", "fstar"});
    RFParams p;
    auto at = [&](const char* key) { return Reader::child(pointer, key); };
    if (j.contains("d")) p.d = static_cast<Eigen::Index>(rd.integer(j["d"], at("d"), 1));
    if (!j.contains("widths")) rd.fail(pointer, "needs 'widths'");
    const Json& w = j["widths"];
    if (!w.is_array() || w.empty()) rd.fail(at("widths"), "expected a nonempty array of integers");
    for (std::size_t i = 0; i < w.size(); ++i) {
        const std::string wp = at("widths") + "/" + std::to_string(i);
        p.widths.push_back(static_cast<Eigen::Index>(rd.integer(w[i], wp, 1)));
        if (i > 0 && p.widths[i] <= p.widths[i - 1]) rd.fail(wp, "widths must be strictly increasing");
    }
    if (j.contains("noise_sigma")) p.noise_sigma = rd.nonnegative(j["noise_sigma"], at("noise_sigma"));
    if (j.contains("n_mc")) p.n_mc = static_cast<Eigen::Index>(rd.integer(j["n_mc"], at("n_mc"), 2));
    if (j.contains("n_eval")) p.n_eval = static_cast<Eigen::Index>(rd.integer(j["n_eval"], at("n_eval"), 2));
    if (j.contains("beta0")) p.beta0 = rd.number(j["beta0"], at("beta0"));
    p.beta1_variance = 1.0 / static_cast<double>(p.d);
    if (j.contains("beta1_variance")) p.beta1_variance = rd.nonnegative(j["beta1_variance"], at("beta1_variance"));
    if (j.contains("fstar")) p.fstar = rd.number(j["fstar"], at("fstar"));
    return p;
}

Json matrix_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

Json vector_json(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

Json spec_json(const VectorSpec& s) {
    switch (s.kind) {
        case VectorSpec::Kind::literal: return vector_json(s.values);
        case VectorSpec::Kind::constant: return Json{{"constant", s.constant}};
        case VectorSpec::Kind::gaussian: return Json{{"variance", s.variance}};
    }
    return {};
}

}  // namespace

SweepConfig parse_config(std::string_view text, std::string_view source) {
    const std::string src(source);
    Json doc;
    try {
        doc = Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        const int line = line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1);
        throw ConfigError(src + ":" + std::to_string(line) + ": malformed JSON: " + e.what(), line);
    }
    const LineIndex lines(text);
    const Reader rd(lines, src);

    std::string root;
    const Json* cfg = &doc;
    if (doc.is_object() && doc.contains("config") && doc.contains("metadata")) {
        rd.check_keys(doc, "", {"config", "metadata"});
        cfg = &doc["config"];
        root = "/config";
    }
    const Json& j = *cfg;
    rd.expect_object(j, root);
    rd.check_keys(j, root,
                  {"setting", "seed", "realizations", "output", "eps", "lambda", "lambda_inf", "tolerances", "linreg",
                   "binclass", "rf"});
    auto at = [&](const char* key) { return Reader::child(root, key); };

    SweepConfig c;
    if (!j.contains("setting")) rd.fail(root, "missing 'setting'");
    const std::string kind = rd.string(j["setting"], at("setting"));
    if (kind == "linreg") c.kind = SettingKind::linreg;
    else if (kind == "binclass") c.kind = SettingKind::binclass;
    else if (kind == "rf") c.kind = SettingKind::rf;
    else rd.fail(at("setting"), "expected one of linreg, binclass, rf");

    if (j.contains("seed")) c.seed = rd.unsigned64(j["seed"], at("seed"));
    if (j.contains("realizations")) c.realizations = static_cast<int>(rd.integer(j["realizations"], at("realizations"), 1));
    if (j.contains("output")) {
        c.output = rd.string(j["output"], at("output"));
        if (c.output.empty()) rd.fail(at("output"), "must be a nonempty path");
    }

    if (!j.contains("eps")) rd.fail(root, "missing 'eps'");
    {
        const Json& e = j["eps"];
        if (!e.is_array() || e.empty()) rd.fail(at("eps"), "expected a nonempty array of numbers");
        for (std::size_t i = 0; i < e.size(); ++i) {
            const std::string ep = at("eps") + "/" + std::to_string(i);
            const double eps = rd.nonnegative(e[i], ep);
            for (double prev : c.eps)
                if (prev == eps) rd.fail(ep, "duplicate eps value");
            c.eps.push_back(eps);
        }
    }

    if (!j.contains("lambda")) rd.fail(root, "missing 'lambda'");
    c.lambdas = parse_lambda(rd, j["lambda"], at("lambda"));
    if (j.contains("lambda_inf")) c.lambda_inf = rd.boolean(j["lambda_inf"], at("lambda_inf"));
    if (c.lambda_inf && !(c.lambdas.back() < kLambdaInf))
        rd.fail(at("lambda"), "with lambda_inf every lambda must be below 1e6");
    if (j.contains("tolerances")) c.tolerances = parse_tolerances(rd, j["tolerances"], at("tolerances"));

    for (const char* block : {"linreg", "binclass", "rf"})
        if (j.contains(block) && kind != block)
            rd.fail(at(block), std::string("block does not apply to setting '") + kind + "'");
    if (!j.contains(kind)) rd.fail(root, "missing the '" + kind + "' parameter block");
    const std::string bp = at(kind.c_str());
    switch (c.kind) {
        case SettingKind::linreg: {
            c.linreg = parse_linreg(rd, j[kind], bp);
            const LinRegParams& p = c.linreg;
            try {
                if (p.sigma) {
                    if (p.v) {
                        linreg::LinRegSetting s{*p.sigma, *p.v, *p.sigma_y2, 0.0};
                        s.validate();
                    } else {
                        linreg::LinRegSetting s{*p.sigma, Vector::Zero(p.d), 0.0, 0.0};
                        s.validate();
                    }
                }
            } catch (const InputError& e) {
                rd.fail(Reader::child(bp, "sigma"), e.what());
            }
            break;
        }
        case SettingKind::binclass: {
            c.binclass = parse_binclass(rd, j[kind], bp);
            if (c.binclass.sigma) {
                try {
                    binclass::GaussMixSetting s{Vector::Ones(c.binclass.d), *c.binclass.sigma, 0.0, c.binclass.r};
                    s.validate();
                } catch (const InputError& e) {
                    rd.fail(Reader::child(bp, "sigma"), e.what());
                }
            }
            break;
        }
        case SettingKind::rf: c.rf = parse_rf(rd, j[kind], bp); break;
    }
    return c;
}

SweepConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ":0: cannot open file", 0);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

Json to_json(const SweepConfig& c) {
    Json j;
    j["setting"] = std::string(to_string(c.kind));
    if (c.seed) j["seed"] = *c.seed;
    j["realizations"] = c.realizations;
    if (!c.output.empty()) j["output"] = c.output;
    j["eps"] = c.eps;
    j["lambda"] = c.lambdas;
    j["lambda_inf"] = c.lambda_inf;
    const Tolerances& t = c.tolerances;
    j["tolerances"] = Json{{"fixed_point_tol", t.fixed_point_tol}, {"gamma_max", t.gamma_max},
                           {"inner_log_tol", t.inner_log_tol},     {"random_starts", t.random_starts},
                           {"max_evaluations", t.max_evaluations}, {"grad_tol", t.grad_tol},
                           {"max_iter", t.max_iter}};
    switch (c.kind) {
        case SettingKind::linreg: {
            const LinRegParams& p = c.linreg;
            Json b;
            b["d"] = p.d;
            if (p.v) {
                b["sigma"] = matrix_json(*p.sigma);
                b["v"] = vector_json(*p.v);
                b["sigma_y2"] = *p.sigma_y2;
            } else {
                b["theta0"] = spec_json(*p.theta0);
                if (p.sigma) b["sigma"] = matrix_json(*p.sigma);
                else b["rho"] = p.rho;
                b["noise_sigma"] = p.noise_sigma;
            }
            j["linreg"] = std::move(b);
            break;
        }
        case SettingKind::binclass: {
            const BinClassParams& p = c.binclass;
            Json b;
            b["d"] = p.d;
            b["mu"] = spec_json(p.mu);
            if (p.sigma) b["sigma"] = matrix_json(*p.sigma);
            else b["rho"] = p.rho;
            if (std::isinf(p.r)) b["r"] = "inf";
            else b["r"] = p.r;
            b["prior_plus"] = p.prior_plus;
            j["binclass"] = std::move(b);
            break;
        }
        case SettingKind::rf: {
            const RFParams& p = c.rf;
            j["rf"] = Json{{"d", p.d},           {"widths", p.widths},   {"noise_sigma", p.noise_sigma},
                           {"n_mc", p.n_mc},     {"n_eval", p.n_eval},   {"beta0", p.beta0},
                           {"beta1_variance", p.beta1_variance}, {"fstar", p.fstar}};
            break;
        }
    }
    return j;
}

}  // namespace wdro::cli
