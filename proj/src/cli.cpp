#include "lakelab/cli.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lakelab/config.hpp"
#include "lakelab/error.hpp"
#include "lakelab/hjb.hpp"
#include "lakelab/io.hpp"
#include "lakelab/metastability.hpp"
#include "lakelab/pontryagin.hpp"

namespace lakelab {

namespace fs = std::filesystem;

namespace {

struct Context {
    RunConfig cfg;
    RecyclingCurve curve;
    fs::path out;
    bool quiet = false;
    std::string command;

    std::ostream& log() const {
        static std::ostringstream sink;
        if (quiet) {
            sink.str("");
            return sink;
        }
        return std::cout;
    }

    CsvTable table(std::vector<std::string> columns) const {
        CsvTable t(std::move(columns));
        t.meta("tool", std::string("lakelab ") + kVersion);
        t.meta("command", command);
        const std::string canon = cfg.canonical();
        t.meta("config_hash", sha256_hex(canon));
        t.meta_block("config", canon);
        return t;
    }

    void write(const std::string& name, const CsvTable& t) const {
        write_file_atomic(out / name, t.str());
        log() << "wrote " << (out / name).string() << '\n';
    }

    double grid_x_max() const {
        if (cfg.x_max) return *cfg.x_max;
        return default_grid(cfg.params, curve).x_max;
    }
    GridSpec grid() const { return GridSpec{grid_x_max(), cfg.n}; }
    ManifoldOptions manifold_options() const {
        ManifoldOptions o;
        o.rtol = cfg.manifold_rtol;
        return o;
    }
    PotentialGrid potential_grid() const { return PotentialGrid{cfg.y_min, cfg.y_max, cfg.potential_h}; }
    CandidateValue candidate() const {
        return build_candidate(cfg.params.with_sigma(0.0), curve, grid_x_max(), manifold_options());
    }
};

std::string fmt(double v) { return format_double(v); }

void report_notes(const SolveReport& r, std::vector<std::string>& notes) {
    auto add = [&](const std::string& k, double v) { notes.push_back(k + ": " + fmt(v)); };
    add("iterations", r.iterations);
    add("residual_inf_scaled", r.residual_inf);
    add("residual_inf_unscaled", r.residual_inf_unscaled);
    add("policy_change", r.policy_change);
    add("boundary_identity", r.boundary_identity);
    add("boundary_tolerance", r.boundary_tolerance);
    add("second_derivative_identity", r.second_derivative_identity);
    add("far_field_coefficient", r.far_field_coefficient);
    add("far_field_target", r.far_field_target);
    add("vp_floor", r.vp_floor);
}

// HJB value function through the content-addressed cache.
CacheEntry cached_hjb(const Context& ctx, const LakeParams& params) {
    const GridSpec grid = ctx.grid();
    const std::string key = value_function_cache_key(params, ctx.curve.name(), grid, ctx.cfg.hjb_tol);
    const fs::path dir = resolve_cache_dir(ctx.cfg.cache_dir, ctx.out);
    try {
        if (auto hit = cache_load(dir, key)) {
            std::cerr << "cache hit " << key.substr(0, 12) << '\n';
            return *hit;
        }
    } catch (const CacheError& e) {
        std::cerr << "warning: " << e.what() << "; recomputing\n";
    }
    HjbOptions opt;
    opt.tol = ctx.cfg.hjb_tol;
    opt.max_iter = ctx.cfg.hjb_max_iter;
    auto [vf, rep] = solve_hjb(params, ctx.curve, grid, opt);
    CacheEntry entry{std::move(vf), {}};
    report_notes(rep, entry.notes);
    cache_store(dir, key, entry);
    return entry;
}

int cmd_equilibria(const Context& ctx) {
    const double x_eq = ctx.cfg.x_max ? *ctx.cfg.x_max
                                      : default_equilibrium_bound(ctx.cfg.params, ctx.curve);
    const auto scan = find_equilibria(ctx.cfg.params, ctx.curve, x_eq);
    auto t = ctx.table({"x0", "u0", "lambda_minus", "lambda_plus", "kind", "stable_slope"});
    t.meta("x_max", x_eq);
    t.meta("x_max_source", ctx.cfg.x_max ? "config" : "default");
    for (double r : scan.inadmissible_roots) t.meta("inadmissible_root", r);
    for (const auto& e : scan.equilibria) {
        t.row({fmt(e.point.x), fmt(e.point.u), fmt(e.lambda_minus), fmt(e.lambda_plus),
               to_string(e.kind), fmt(e.stable_slope)});
        ctx.log() << to_string(e.kind) << " at x0 = " << fmt(e.point.x) << '\n';
    }
    ctx.write("equilibria.csv", t);
    return kExitOk;
}

void skiba_meta(CsvTable& t, const CandidateValue& cand) {
    if (cand.skiba) {
        const auto& s = *cand.skiba;
        t.meta("skiba_x", s.x);
        t.meta("skiba_J", s.J);
        t.meta("skiba_J_gap", s.J_gap);
        t.meta("skiba_Vp_left", s.Vp_left);
        t.meta("skiba_Vp_right", s.Vp_right);
        t.meta("skiba_V2_left", s.V2_left);
        t.meta("skiba_V2_right", s.V2_right);
        t.meta("skiba_jump_sign", s.jump_sign);
    }
    if (cand.threshold) t.meta("threshold", *cand.threshold);
}

int cmd_manifold(const Context& ctx) {
    const auto cand = ctx.candidate();
    auto t = ctx.table({"x", "u", "J_P", "branch_id"});
    skiba_meta(t, cand);
    for (std::size_t k = 0; k < cand.branches.size(); ++k) {
        const auto& b = cand.branches[k];
        t.meta("branch_" + std::to_string(k),
               "x0=" + fmt(b.source.point.x) + " " + to_string(b.direction) + " stop=" + to_string(b.stop));
        for (const auto& s : b.samples)
            t.row({fmt(s.x), fmt(s.u), fmt(s.J), std::to_string(k)});
    }
    ctx.write("manifold.csv", t);
    return kExitOk;
}

void value_rows(CsvTable& t, const ValueFunction& vf, const ResidualProfile& res) {
    for (std::size_t i = 0; i < vf.grid.n; ++i)
        t.row(std::vector<double>{vf.grid.x(i), vf.V[i], vf.Vp[i], vf.V2[i], res.raw[i]});
}

int cmd_value(const Context& ctx) {
    const auto cand = ctx.candidate();
    const auto vf = to_value_function(cand, ctx.grid());
    const LakeParams p0 = ctx.cfg.params.with_sigma(0.0);
    auto t = ctx.table({"x", "V", "Vp", "V2", "residual"});
    t.meta("provenance", "pontryagin");
    skiba_meta(t, cand);
    value_rows(t, vf, residual(vf, p0, ctx.curve));
    ctx.write("value.csv", t);
    return kExitOk;
}

void require_noise(const Context& ctx) {
    if (!(ctx.cfg.params.sigma > 0.0))
        throw ConfigError("command '" + ctx.command + "' requires params.sigma > 0");
}

int cmd_hjb(const Context& ctx) {
    require_noise(ctx);
    const auto entry = cached_hjb(ctx, ctx.cfg.params);
    auto t = ctx.table({"x", "V", "Vp", "V2", "residual"});
    t.meta("provenance", "hjb");
    for (const auto& n : entry.notes) t.meta_block("solve", n);
    value_rows(t, entry.vf, residual(entry.vf, ctx.cfg.params, ctx.curve));
    ctx.write("hjb.csv", t);
    return kExitOk;
}

ValueFunction value_for_sigma(const Context& ctx) {
    if (ctx.cfg.params.sigma > 0.0) return cached_hjb(ctx, ctx.cfg.params).vf;
    return to_value_function(ctx.candidate(), ctx.grid());
}

int cmd_potential(const Context& ctx) {
    const auto vf = value_for_sigma(ctx);
    const auto P = build_potential(vf, ctx.cfg.params, ctx.curve, ctx.potential_grid());
    auto t = ctx.table({"y", "F", "Fp"});
    t.meta("sigma", ctx.cfg.params.sigma);
    for (double m : P.minima) t.meta("minimum", m);
    for (double m : P.maxima) t.meta("maximum", m);
    if (P.double_well()) t.meta("barrier_height", P.barrier_height());
    t.meta("tail_slope", P.tail_slope);
    t.meta("tail_constant", P.tail_constant);
    for (std::size_t k = 0; k < P.y.size(); ++k) t.row(std::vector<double>{P.y[k], P.F[k], P.Fp[k]});
    ctx.write("potential.csv", t);
    return kExitOk;
}

const std::vector<std::string> kLadderColumns = {"sigma", "epsilon", "tau_quad", "tau_mc",
                                                 "stderr", "eps_log_tau", "barrier"};

int cmd_exit_time(const Context& ctx) {
    require_noise(ctx);
    const auto cand = ctx.candidate();
    const auto lm = deterministic_landmarks(cand, ctx.cfg.params, ctx.curve, ctx.grid(),
                                            ctx.potential_grid());
    const auto vf = cached_hjb(ctx, ctx.cfg.params).vf;
    const auto P = build_potential(vf, ctx.cfg.params, ctx.curve, ctx.potential_grid());
    const double eps = ctx.cfg.params.epsilon();
    const auto q = mean_exit_time_quadrature(P, eps, P.y_max(), std::log(lm.x_minus), std::log(lm.x_plus));
    ExitOptions eo;
    eo.t_max = ctx.cfg.t_max;
    const auto mc = simulate_exit(vf, ctx.cfg.params, ctx.curve, lm.x_plus, lm.x_minus, ctx.cfg.dt,
                                  ctx.cfg.n_paths, ctx.cfg.seed, eo);
    auto t = ctx.table(kLadderColumns);
    t.meta("x_minus", lm.x_minus);
    t.meta("x_star", lm.x_star);
    t.meta("x_plus", lm.x_plus);
    t.meta("seed", std::to_string(ctx.cfg.seed));
    t.meta("truncation_error_bound", q.truncation_error_bound);
    t.meta("mc_censored", static_cast<double>(mc.censored));
    t.meta("mc_control_mean", mc.control_mean);
    t.meta("mc_control_stderr", mc.control_stderr);
    t.meta("mc_step_size_bias", mc.step_size_bias ? "true" : "false");
    const double barrier = P.value(std::log(lm.x_star)) - P.value(std::log(lm.x_plus));
    t.row(std::vector<double>{ctx.cfg.params.sigma, eps, q.value, mc.mean, mc.stderr_,
                              eps * q.log_value, barrier});
    ctx.write("exit_time.csv", t);
    ctx.log() << "tau_quad = " << fmt(q.value) << ", tau_mc = " << fmt(mc.mean) << " +- "
              << fmt(mc.stderr_) << '\n';
    return kExitOk;
}

int cmd_simulate(const Context& ctx) {
    const auto vf = value_for_sigma(ctx);
    std::vector<double> starts = ctx.cfg.x_starts;
    if (starts.empty()) {
        const auto cand = ctx.candidate();
        const double xs = cand.skiba ? cand.skiba->x : (cand.threshold ? *cand.threshold : 1.0);
        starts = {0.8 * xs, 1.2 * xs};
    }
    const auto paths = simulate_paths(vf, ctx.cfg.params, ctx.curve, starts, ctx.cfg.horizon,
                                      ctx.cfg.dt, ctx.cfg.seed, ctx.cfg.sample_dt);
    auto all = ctx.table({"path_id", "t", "x"});
    all.meta("seed", std::to_string(ctx.cfg.seed));
    for (std::size_t k = 0; k < paths.size(); ++k) {
        auto one = ctx.table({"t", "x"});
        one.meta("path_id", std::to_string(k));
        one.meta("x_start", paths[k].x_start);
        one.meta("seed", std::to_string(ctx.cfg.seed));
        for (std::size_t i = 0; i < paths[k].t.size(); ++i) {
            all.row({std::to_string(k), fmt(paths[k].t[i]), fmt(paths[k].x[i])});
            one.row(std::vector<double>{paths[k].t[i], paths[k].x[i]});
        }
        std::ostringstream name;
        name << "path_" << k << ".csv";
        ctx.write(name.str(), one);
    }
    ctx.write("paths.csv", all);
    return kExitOk;
}

int cmd_arrhenius(const Context& ctx) {
    ArrheniusOptions opt;
    opt.grid = ctx.grid();
    opt.pgrid = ctx.potential_grid();
    opt.hjb_tol = ctx.cfg.hjb_tol;
    const auto rep = arrhenius_estimate(ctx.cfg.params, ctx.curve, ctx.cfg.ladder, opt);
    auto t = ctx.table(kLadderColumns);
    t.meta("delta_F0", rep.landmarks.delta_F0);
    t.meta("x_minus", rep.landmarks.x_minus);
    t.meta("x_star", rep.landmarks.x_star);
    t.meta("x_plus", rep.landmarks.x_plus);
    if (rep.intercept) {
        t.meta("intercept", *rep.intercept);
        t.meta("slope", *rep.slope);
        t.meta("intercept_rel_error", rep.intercept_rel_error);
    }
    t.meta("deviations_strictly_decreasing", rep.deviations_strictly_decreasing ? "true" : "false");
    for (const auto& w : rep.warnings) {
        t.meta("warning", w);
        std::cerr << "warning: " << w << '\n';
    }
    for (const auto& r : rep.rows)
        t.row({fmt(r.sigma), fmt(r.epsilon), fmt(r.tau_quadrature), "nan", "nan",
               fmt(r.eps_log_tau), fmt(r.barrier_height)});
    ctx.write("ladder.csv", t);
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Shallow-lake optimal control laboratory"};
    app.require_subcommand(1, 1);
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    app.add_option("--config", config_path, "configuration file (TOML subset)");
    app.add_option("--out", out_dir, "output directory (overrides output.dir)");
    app.add_option("--seed", seed, "random seed (overrides mc.seed)");
    app.add_flag("--quiet", quiet, "suppress progress output");
    app.fallthrough();

    using Handler = int (*)(const Context&);
    const std::vector<std::pair<std::string, Handler>> commands = {
        {"equilibria", cmd_equilibria}, {"manifold", cmd_manifold},   {"value", cmd_value},
        {"hjb", cmd_hjb},               {"potential", cmd_potential}, {"exit-time", cmd_exit_time},
        {"simulate", cmd_simulate},     {"arrhenius", cmd_arrhenius}};
    for (const auto& [name, h] : commands) app.add_subcommand(name, "run the " + name + " stage");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    Handler handler = nullptr;
    std::string command;
    for (const auto& [name, h] : commands) {
        if (app.got_subcommand(name)) {
            handler = h;
            command = name;
        }
    }

    try {
        RunConfig cfg = config_path.empty() ? load_config_text("") : load_config_file(config_path);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (seed) cfg.seed = *seed;
        Context ctx{cfg, make_configured_curve(cfg), fs::path(cfg.output_dir), quiet, command};
        return handler(ctx);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const CacheError& e) {
        std::cerr << "cache error: " << e.what() << '\n';
        return kExitCache;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
}

}  // namespace lakelab
