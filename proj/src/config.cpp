#include "lakelab/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "lakelab/error.hpp"

namespace lakelab {

namespace {

[[noreturn]] void fail(int line, const std::string& msg) {
    std::ostringstream os;
    os << "config line " << line << ": " << msg;
    throw ConfigError(os.str());
}

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

// Removes a trailing comment that is not inside a string.
std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_str = !in_str;
        if (s[i] == '#' && !in_str) return s.substr(0, i);
    }
    return s;
}

std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    std::string t;
    for (char ch : s)
        if (ch != '_') t += ch;
    if (t.front() == '+') t.erase(0, 1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

ConfigValue parse_value(const std::string& raw, int line) {
    const std::string s = trim(raw);
    if (s.empty()) fail(line, "missing value");
    if (s.front() == '"') {
        if (s.size() < 2 || s.back() != '"') fail(line, "unterminated string");
        const std::string body = s.substr(1, s.size() - 2);
        if (body.find('"') != std::string::npos) fail(line, "unexpected quote in string");
        return body;
    }
    if (s == "true") return true;
    if (s == "false") return false;
    if (s.front() == '[') {
        if (s.back() != ']') fail(line, "unterminated array");
        std::vector<double> out;
        const std::string body = trim(s.substr(1, s.size() - 2));
        if (body.empty()) return out;
        std::stringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const std::string t = trim(item);
            if (t.empty()) fail(line, "empty array element");
            const auto v = parse_number(t);
            if (!v) fail(line, "array elements must be numbers: '" + t + "'");
            out.push_back(*v);
        }
        return out;
    }
    const auto v = parse_number(s);
    if (!v) fail(line, "cannot parse value '" + s + "'");
    return *v;
}

}  // namespace

ConfigDocument parse_config_text(const std::string& text) {
    ConfigDocument doc;
    doc[""];
    std::string table;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = trim(strip_comment(raw));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') fail(line, "malformed table header");
            table = trim(s.substr(1, s.size() - 2));
            if (table.empty()) fail(line, "empty table name");
            if (doc.count(table) && !doc[table].empty()) fail(line, "duplicate table [" + table + "]");
            doc[table];
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) fail(line, "expected key = value");
        const std::string key = trim(s.substr(0, eq));
        if (key.empty()) fail(line, "empty key");
        for (char ch : key)
            if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-'))
                fail(line, "invalid key '" + key + "'");
        auto& tbl = doc[table];
        if (tbl.count(key)) fail(line, "duplicate key '" + key + "'");
        tbl[key] = parse_value(s.substr(eq + 1), line);
    }
    return doc;
}

namespace {

class Reader {
public:
    explicit Reader(ConfigDocument doc) : doc_(std::move(doc)) {}

    void number(const std::string& table, const std::string& key, double& out) {
        if (auto* v = take(table, key)) {
            if (!std::holds_alternative<double>(*v)) type_error(table, key, "a number");
            out = std::get<double>(*v);
        }
    }
    void integer(const std::string& table, const std::string& key, auto& out) {
        double d = static_cast<double>(out);
        number(table, key, d);
        if (d < 0 || d != std::floor(d) || d > 9.007199254740992e15)
            throw ConfigError(table + "." + key + " must be a non-negative integer");
        out = static_cast<std::remove_reference_t<decltype(out)>>(d);
    }
    void string(const std::string& table, const std::string& key, std::string& out) {
        if (auto* v = take(table, key)) {
            if (!std::holds_alternative<std::string>(*v)) type_error(table, key, "a string");
            out = std::get<std::string>(*v);
        }
    }
    void array(const std::string& table, const std::string& key, std::vector<double>& out) {
        if (auto* v = take(table, key)) {
            if (!std::holds_alternative<std::vector<double>>(*v)) type_error(table, key, "an array");
            out = std::get<std::vector<double>>(*v);
        }
    }
    bool has(const std::string& table, const std::string& key) const {
        auto it = doc_.find(table);
        return it != doc_.end() && it->second.count(key);
    }
    void reject_leftovers() const {
        for (const auto& [table, keys] : doc_) {
            if (!known_tables_.count(table) && (!keys.empty() || !table.empty()))
                throw ConfigError("unknown table [" + table + "]");
            for (const auto& [key, v] : keys) {
                if (!used_.count(table + "." + key))
                    throw ConfigError("unknown key '" + key + "' in [" + table + "]");
            }
        }
    }
    void allow_table(const std::string& t) { known_tables_.insert(t); }

private:
    const ConfigValue* take(const std::string& table, const std::string& key) {
        used_.insert(table + "." + key);
        auto it = doc_.find(table);
        if (it == doc_.end()) return nullptr;
        auto kt = it->second.find(key);
        return kt == it->second.end() ? nullptr : &kt->second;
    }
    [[noreturn]] static void type_error(const std::string& t, const std::string& k,
                                        const std::string& what) {
        throw ConfigError(t + "." + k + " must be " + what);
    }

    ConfigDocument doc_;
    std::set<std::string> used_;
    std::set<std::string> known_tables_{""};
};

}  // namespace

RunConfig load_config_text(const std::string& text) {
    Reader rd(parse_config_text(text));
    RunConfig cfg;
    for (const char* t : {"params", "curve", "grid", "tolerances", "mc", "ladder", "output"})
        rd.allow_table(t);

    rd.number("params", "b", cfg.params.b);
    rd.number("params", "c", cfg.params.c);
    rd.number("params", "rho", cfg.params.rho);
    rd.number("params", "sigma", cfg.params.sigma);
    rd.string("curve", "name", cfg.curve_name);
    rd.number("curve", "scale", cfg.curve_scale);
    if (rd.has("grid", "x_max")) {
        double xm = 0.0;
        rd.number("grid", "x_max", xm);
        cfg.x_max = xm;
    } else {
        double dummy = 0.0;
        rd.number("grid", "x_max", dummy);
    }
    rd.integer("grid", "n", cfg.n);
    rd.number("tolerances", "hjb_tol", cfg.hjb_tol);
    rd.integer("tolerances", "hjb_max_iter", cfg.hjb_max_iter);
    rd.number("tolerances", "manifold_rtol", cfg.manifold_rtol);
    rd.number("tolerances", "potential_h", cfg.potential_h);
    rd.number("tolerances", "y_min", cfg.y_min);
    rd.number("tolerances", "y_max", cfg.y_max);
    rd.integer("mc", "n_paths", cfg.n_paths);
    rd.number("mc", "dt", cfg.dt);
    rd.integer("mc", "seed", cfg.seed);
    rd.number("mc", "horizon", cfg.horizon);
    rd.number("mc", "sample_dt", cfg.sample_dt);
    rd.array("mc", "x_starts", cfg.x_starts);
    rd.number("mc", "t_max", cfg.t_max);
    rd.array("ladder", "sigmas", cfg.ladder);
    rd.string("output", "dir", cfg.output_dir);
    rd.string("output", "cache_dir", cfg.cache_dir);
    rd.reject_leftovers();

    try {
        cfg.params.validate();
        make_configured_curve(cfg);
        if (cfg.x_max) GridSpec{*cfg.x_max, cfg.n}.validate();
        else GridSpec{20.0, cfg.n}.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be positive");
    };
    positive(cfg.hjb_tol, "tolerances.hjb_tol");
    positive(cfg.manifold_rtol, "tolerances.manifold_rtol");
    positive(cfg.potential_h, "tolerances.potential_h");
    positive(cfg.dt, "mc.dt");
    positive(cfg.horizon, "mc.horizon");
    positive(cfg.sample_dt, "mc.sample_dt");
    positive(cfg.t_max, "mc.t_max");
    if (cfg.hjb_max_iter < 1) throw ConfigError("tolerances.hjb_max_iter must be at least 1");
    if (!(cfg.y_min < 0.0 && cfg.y_max > 0.0))
        throw ConfigError("tolerances.y_min < 0 < tolerances.y_max required");
    if (cfg.n_paths < 2) throw ConfigError("mc.n_paths must be at least 2");
    for (double x : cfg.x_starts)
        if (!(x > 0.0)) throw ConfigError("mc.x_starts must be positive");
    for (std::size_t k = 0; k < cfg.ladder.size(); ++k) {
        const double s = cfg.ladder[k];
        if (!(s > 0.0) || !(s * s < cfg.params.rho + 2.0 * cfg.params.b))
            throw ConfigError("ladder.sigmas must lie in (0, sqrt(rho + 2b))");
        if (k > 0 && !(s < cfg.ladder[k - 1]))
            throw ConfigError("ladder.sigmas must be strictly decreasing");
    }
    if (cfg.output_dir.empty()) throw ConfigError("output.dir must not be empty");
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_config_text(ss.str());
}

RecyclingCurve make_configured_curve(const RunConfig& cfg) {
    if (cfg.curve_name == "hill") return hill_curve(cfg.curve_scale);
    throw ConfigError("unknown curve '" + cfg.curve_name + "' (available: hill)");
}

std::string RunConfig::canonical() const {
    std::ostringstream os;
    os.precision(17);
    auto arr = [&](const std::vector<double>& v) {
        os << '[';
        for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
        os << ']';
    };
    os << "params.b = " << params.b << '\n'
       << "params.c = " << params.c << '\n'
       << "params.rho = " << params.rho << '\n'
       << "params.sigma = " << params.sigma << '\n'
       << "curve.name = \"" << curve_name << "\"\n"
       << "curve.scale = " << curve_scale << '\n';
    os << "grid.x_max = ";
    if (x_max) os << *x_max;
    else os << "default";
    os << '\n'
       << "grid.n = " << n << '\n'
       << "tolerances.hjb_tol = " << hjb_tol << '\n'
       << "tolerances.hjb_max_iter = " << hjb_max_iter << '\n'
       << "tolerances.manifold_rtol = " << manifold_rtol << '\n'
       << "tolerances.potential_h = " << potential_h << '\n'
       << "tolerances.y_min = " << y_min << '\n'
       << "tolerances.y_max = " << y_max << '\n'
       << "mc.n_paths = " << n_paths << '\n'
       << "mc.dt = " << dt << '\n'
       << "mc.seed = " << seed << '\n'
       << "mc.horizon = " << horizon << '\n'
       << "mc.sample_dt = " << sample_dt << '\n'
       << "mc.x_starts = ";
    arr(x_starts);
    os << '\n' << "mc.t_max = " << t_max << '\n' << "ladder.sigmas = ";
    arr(ladder);
    os << '\n';
    return os.str();
}

}  // namespace lakelab
