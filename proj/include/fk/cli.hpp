#pragma once

// Batch front end: structured-text run configs, one command verb per run,
// artifact emission (CSV/JSON/SVG) with a deterministic layout, and the
// embarrassingly parallel scan driver.

#include <atomic>
#include <filesystem>
#include <future>

#include "fk/io.hpp"

namespace fk {

struct ConfigError : Error {
    using Error::Error;
};

struct ConfigValue {
    std::string raw;
    bool quoted = false;
};

struct RunConfig {
    std::map<std::string, ConfigValue> kv;

    bool has(const std::string& key) const { return kv.count(key) > 0; }

    std::string str(const std::string& key, const std::string& fallback = "") const
    {
        auto it = kv.find(key);
        return it == kv.end() ? fallback : it->second.raw;
    }
    double num(const std::string& key, double fallback) const
    {
        auto it = kv.find(key);
        if (it == kv.end()) return fallback;
        try {
            std::size_t pos = 0;
            double v = std::stod(it->second.raw, &pos);
            if (pos != it->second.raw.size()) throw ConfigError("");
            return v;
        } catch (...) {
            throw ConfigError("config: key '" + key + "' is not a number: " + it->second.raw);
        }
    }
    double num_required(const std::string& key) const
    {
        if (!has(key)) throw ConfigError("config: missing required key '" + key + "'");
        return num(key, 0);
    }
    long long integer(const std::string& key, long long fallback) const
    {
        double v = num(key, (double)fallback);
        long long n = (long long)std::llround(v);
        if (std::fabs(v - (double)n) > 1e-12)
            throw ConfigError("config: key '" + key + "' is not an integer");
        return n;
    }
    void set(const std::string& key, const std::string& value, bool quoted = false)
    {
        kv[key] = ConfigValue{value, quoted};
    }

    Json to_json() const
    {
        Json j;
        for (const auto& [k, v] : kv) j[k] = v.raw;
        return j;
    }
};

namespace detail {

inline std::string trim(const std::string& s)
{
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::string strip_comment(const std::string& line)
{
    bool in_quote = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_quote = !in_quote;
        if (line[i] == '#' && !in_quote) return line.substr(0, i);
    }
    return line;
}

inline void parse_scalar(RunConfig& cfg, const std::string& key, std::string value)
{
    value = trim(value);
    bool quoted = value.size() >= 2 && value.front() == '"' && value.back() == '"';
    if (quoted) value = value.substr(1, value.size() - 2);
    cfg.set(key, value, quoted);
}

/// `key = { a = 1, b = "x" }` flattens to key.a, key.b.
inline void parse_inline_table(RunConfig& cfg, const std::string& key, const std::string& body)
{
    std::vector<std::string> items;
    std::string cur;
    bool in_quote = false;
    for (char ch : body) {
        if (ch == '"') in_quote = !in_quote;
        if (ch == ',' && !in_quote) {
            items.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!trim(cur).empty()) items.push_back(cur);
    for (const std::string& item : items) {
        std::size_t eq = item.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: malformed table entry '" + trim(item) + "'");
        std::string sub = trim(item.substr(0, eq));
        parse_scalar(cfg, key + "." + sub, item.substr(eq + 1));
    }
}

}  // namespace detail

inline RunConfig parse_config_text(const std::string& text)
{
    RunConfig cfg;
    std::string prefix;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = detail::trim(detail::strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config: bad section at line " + std::to_string(lineno));
            prefix = detail::trim(line.substr(1, line.size() - 2));
            if (!prefix.empty()) prefix += ".";
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected key = value at line " + std::to_string(lineno));
        std::string key = prefix + detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (!value.empty() && value.front() == '{') {
            if (value.back() != '}')
                throw ConfigError("config: unterminated inline table at line " +
                                  std::to_string(lineno));
            detail::parse_inline_table(cfg, key, value.substr(1, value.size() - 2));
        } else {
            detail::parse_scalar(cfg, key, value);
        }
    }
    return cfg;
}

inline RunConfig parse_config_file(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return parse_config_text(os.str());
}

// ---------------------------------------------------------------------------
// Model construction and validation

inline GeneratingFunction model_from_config(const RunConfig& cfg)
{
    std::string kind = cfg.str("model.kind");
    if (kind.empty()) throw ConfigError("config: model.kind is required");
    BuiltinSpec spec;
    if (kind == "standard_fk") {
        spec = BuiltinSpec::standard_fk(cfg.num("model.k", 1.0));
    } else if (kind == "double_well") {
        spec = BuiltinSpec::double_well(cfg.num("model.k", 0.03), cfg.num("model.b", 2.0));
    } else if (kind == "bistable") {
        spec = BuiltinSpec::bistable(cfg.num("model.k", 16.0));
        if (cfg.has("model.A1")) spec.params["A1"] = cfg.num("model.A1", 0);
        if (cfg.has("model.A2")) spec.params["A2"] = cfg.num("model.A2", 0);
        if (cfg.has("model.A3")) spec.params["A3"] = cfg.num("model.A3", 0);
    } else if (kind == "mane") {
        spec = BuiltinSpec::mane();
        for (const char* key : {"a1", "b", "a2", "depth", "rise"})
            if (cfg.has(std::string("model.") + key))
                spec.params[key] = cfg.num(std::string("model.") + key, 0);
    } else {
        throw ConfigError("config: unknown model.kind '" + kind + "'");
    }
    GeneratingFunction gf = make_builtin(spec);
    ModelReport rep = verify_properties(gf, 400);
    if (rep.max_periodicity_violation > 1e-10 || !rep.twist_ok ||
        rep.max_first_derivative_fd_error > 1e-5)
        throw ModelError("model validation failed for '" + kind + "'");
    return gf;
}

// ---------------------------------------------------------------------------
// Run driver

struct RunOutcome {
    int exit_code = 0;
    std::vector<std::string> artifacts;
    Json summary;
};

namespace detail {

struct RunContext {
    const RunConfig& cfg;
    GeneratingFunction gf;
    std::filesystem::path dir;
    bool want_csv = true, want_json = true, want_svg = false;
    RunOutcome* out;

    void write_json(const std::string& name, Json payload) const
    {
        if (!want_json) return;
        Json j;
        j["schema"] = 1;
        j["config"] = cfg.to_json();
        j["result"] = std::move(payload);
        std::ofstream f(dir / name);
        if (!f) throw IoError("cannot open " + (dir / name).string());
        f << j.dump(2) << "\n";
        out->artifacts.push_back((dir / name).string());
    }
    std::string path(const std::string& name) const
    {
        out->artifacts.push_back((dir / name).string());
        return (dir / name).string();
    }
};

inline PeriodicConfiguration relaxed_equilibrium(const GeneratingFunction& gf, int p, int q,
                                                 double F, double phase)
{
    TiltedEnergy E(gf, F);
    PeriodicConfiguration c = PeriodicConfiguration::rigid(p, q, phase);
    FlowSettings fs;
    Trajectory tr = integrate(c, E, fs, 200.0, 2);
    c.x = tr.x.back();
    return find_equilibrium(c, E).state;
}

/// Tilt from the config; "level" selects the tilt that levels U(b) with
/// U(a+1) for a bistable on-site slice.
inline double tilt_from_config(const RunConfig& cfg, const GeneratingFunction& gf)
{
    if (cfg.str("F") == "level") return leveling_tilt(gf);
    return cfg.num("F", 0.0);
}

inline void run_fd(RunContext& ctx)
{
    int p = (int)ctx.cfg.integer("p", 0), q = (int)ctx.cfg.integer("q", 1);
    double tol = ctx.cfg.num("tol", 1e-4);
    std::string method = ctx.cfg.str("method", "cross-validated");
    DepinningMethod m = DepinningMethod::CrossValidated;
    if (method == "bisection") m = DepinningMethod::Bisection;
    else if (method == "continuation") m = DepinningMethod::Continuation;
    else if (method != "cross-validated")
        throw ConfigError("fd: unknown method '" + method + "'");
    DepinningResult r = depinning_force(p, q, ctx.gf, m, tol);
    ctx.write_json("fd.json", to_json(r));
}

inline void run_fd_limit(RunContext& ctx)
{
    FdLimitOptions opt;
    opt.n_max = (int)ctx.cfg.integer("nmax", 8);
    opt.tol_F = ctx.cfg.num("tol", 1e-5);
    opt.jobs = (int)ctx.cfg.integer("output.jobs", 2);
    std::string side = ctx.cfg.str("side", "plus");
    if (side != "plus" && side != "minus") throw ConfigError("fd-limit: side must be plus|minus");
    LimitEstimate est = fd_limit(ctx.cfg.integer("p", 0), ctx.cfg.integer("q", 1),
                                 side == "plus" ? Side::Plus : Side::Minus, ctx.gf, opt);
    ctx.write_json("fd_limit.json", to_json(est));
    if (ctx.want_csv) {
        CsvWriter csv(ctx.path("fd_limit.csv"));
        csv.header("Q,F_d");
        for (std::size_t i = 0; i < est.mediants.size(); ++i)
            csv.row(est.mediants[i].q, est.fd_values[i]);
    }
}

inline void run_equilibrium(RunContext& ctx)
{
    int p = (int)ctx.cfg.integer("p", 0), q = (int)ctx.cfg.integer("q", 1);
    double F = tilt_from_config(ctx.cfg, ctx.gf);
    PeriodicConfiguration eq =
        relaxed_equilibrium(ctx.gf, p, q, F, ctx.cfg.num("phase", 0.12));
    EquilibriumResult res = find_equilibrium(eq, TiltedEnergy(ctx.gf, F));
    Json j;
    j["p"] = p;
    j["q"] = q;
    j["F"] = F;
    j["x"] = res.state.x;
    j["residual"] = res.residual;
    j["hessian_spectrum"] = res.hessian_spectrum;
    j["degenerate"] = res.degenerate;
    ctx.write_json("equilibrium.json", j);
    if (ctx.want_csv) export_aubry(res.state, ctx.path("equilibrium_aubry.csv"),
                                   {3, ctx.want_svg});
}

inline void run_classify(RunContext& ctx)
{
    int p = (int)ctx.cfg.integer("p", 0), q = (int)ctx.cfg.integer("q", 1);
    double F = tilt_from_config(ctx.cfg, ctx.gf);
    FlowSettings fs;
    fs.t_max = ctx.cfg.num("t_max", fs.t_max);
    VelocityVerdict v = classify(PeriodicConfiguration::rigid(p, q, ctx.cfg.num("phase", 0.12)),
                                 TiltedEnergy(ctx.gf, F), fs);
    ctx.write_json("classify.json", to_json(v));
    if (v.kind == VelocityVerdict::Kind::Sliding && ctx.want_csv) {
        HullTable hull = extract_hull(v, double(p) / q, fs.recur_tol);
        CsvWriter csv(ctx.path("hull.csv"));
        csv.header("alpha,X");
        for (std::size_t i = 0; i < hull.alpha.size(); ++i) csv.row(hull.alpha[i], hull.value[i]);
        // one recurrence period of the trajectory
        CsvWriter traj(ctx.path("trajectory.csv"));
        traj.header("t,n,x");
        for (std::size_t j = 0; j < v.sliding->sample_t.size(); ++j)
            for (std::size_t n = 0; n < v.sliding->sample_x[j].size(); ++n)
                traj.row(v.sliding->sample_t[j], n, v.sliding->sample_x[j][n]);
    }
}

inline void run_disc(RunContext& ctx, bool sliding)
{
    int p = (int)ctx.cfg.integer("p", 0), q = (int)ctx.cfg.integer("q", 1);
    double F = tilt_from_config(ctx.cfg, ctx.gf);
    std::string kind_s = ctx.cfg.str("kind", "advancing");
    DiscKind kind = (kind_s == "retreating") ? DiscKind::Retreating : DiscKind::Advancing;
    PeriodicConfiguration xm =
        relaxed_equilibrium(ctx.gf, p, q, F, ctx.cfg.num("phase", 0.12));
    // the upper asymptote defaults to the +1 translate; an upper_phase key
    // selects a different equilibrium instead (distinct wells)
    PeriodicConfiguration xp =
        ctx.cfg.has("upper_phase")
            ? relaxed_equilibrium(ctx.gf, p, q, F, ctx.cfg.num("upper_phase", 0.5))
            : translate(xm, 0, 1);
    TiltedEnergy E(ctx.gf, F);
    DiscOptions opt;
    opt.settings.t_max = ctx.cfg.num("t_max", opt.settings.t_max);
    if (ctx.cfg.has("half_width")) opt.half_width = ctx.cfg.integer("half_width", 0);
    if (sliding) {
        SlidingFront fr = find_sliding_disc(xm, xp, kind, E, opt);
        ctx.write_json("front.json", to_json(fr));
    } else {
        HeteroclinicSolution z = find_equilibrium_disc(xm, xp, kind, E, opt);
        ctx.write_json("disc.json", to_json(z));
        if (ctx.want_csv) export_aubry(z.window, ctx.path("disc_aubry.csv"), {3, ctx.want_svg});
    }
}

inline void run_map_orbit(RunContext& ctx)
{
    TiltedEnergy E(ctx.gf, ctx.cfg.num("F", 0.0));
    CylinderPoint pt{ctx.cfg.num("x", 0.3), ctx.cfg.num("momentum", 0.0)};
    int iters = (int)ctx.cfg.integer("iters", 100);
    CsvWriter csv(ctx.path("map_orbit.csv"));
    csv.header("n,x,p");
    csv.row(0, pt.x, pt.p);
    for (int n = 1; n <= iters; ++n) {
        pt = apply(E, pt);
        csv.row(n, pt.x, pt.p);
    }
    Json j;
    j["iters"] = iters;
    j["final_x"] = pt.x;
    j["final_p"] = pt.p;
    ctx.write_json("map_orbit.json", j);
}

inline void run_manifolds(RunContext& ctx)
{
    int p = (int)ctx.cfg.integer("p", 0), q = (int)ctx.cfg.integer("q", 1);
    TiltedEnergy E(ctx.gf, ctx.cfg.num("F", 0.0));
    PeriodicConfiguration guess =
        relaxed_equilibrium(ctx.gf, p, q, ctx.cfg.num("F", 0.0), ctx.cfg.num("phase", 0.45));
    PeriodicOrbit orbit = find_periodic_orbit(p, q, E, guess);
    ManifoldOptions mo;
    mo.target_arclength = ctx.cfg.num("arclength", 2.5);
    std::vector<SvgCurve> curves;
    const char* names[4] = {"unstable_right", "unstable_left", "stable_right", "stable_left"};
    Branch branches[4] = {Branch::UnstableRight, Branch::UnstableLeft, Branch::StableRight,
                          Branch::StableLeft};
    const char* colors[4] = {"red", "darkred", "blue", "darkblue"};
    for (int i = 0; i < 4; ++i) {
        ManifoldArc arc = grow_manifold(orbit, branches[i], E, mo);
        if (ctx.want_csv) write_arc_csv(arc, ctx.path(std::string("manifold_") + names[i] + ".csv"));
        SvgCurve c;
        c.color = colors[i];
        for (const CylinderPoint& pt : arc.pts) c.pts.emplace_back(pt.x, pt.p);
        curves.push_back(std::move(c));
    }
    if (ctx.want_svg) write_svg(ctx.path("phase_portrait.svg"), curves);
    Json j;
    j["tau"] = orbit.tau;
    j["branches"] = 4;
    ctx.write_json("manifolds.json", j);
}

inline void run_action_area(RunContext& ctx)
{
    int p = (int)ctx.cfg.integer("p", 0), q = (int)ctx.cfg.integer("q", 1);
    TiltedEnergy E(ctx.gf, 0.0);
    PeriodicConfiguration guess =
        relaxed_equilibrium(ctx.gf, p, q, 0.0, ctx.cfg.num("phase", 0.45));
    PeriodicOrbit left = find_periodic_orbit(p, q, E, guess);
    PeriodicOrbit right = left;
    for (auto& pt : right.points) pt.x += 1;
    for (double& xv : right.config.x) xv += 1;
    ManifoldOptions mo;
    mo.target_arclength = ctx.cfg.num("arclength", 2.6);
    ManifoldArc uR = grow_manifold(left, Branch::UnstableRight, E, mo);
    ManifoldArc sL = grow_manifold(right, Branch::StableLeft, E, mo);
    auto crossings = find_intersections(uR, sL, E);
    if (crossings.size() < 2)
        throw NumericalError("action-area: fewer than two transverse intersections found");
    ActionArea aa = action_area(uR, sL, crossings[0], crossings[1], E);
    Json j;
    j["intersections"] = crossings.size();
    j["area"] = aa.area;
    j["delta_w"] = aa.delta_w;
    j["mismatch"] = std::fabs(aa.area - aa.delta_w);
    ctx.write_json("action_area.json", j);
}

inline void run_circle_verdict(RunContext& ctx)
{
    int p = (int)ctx.cfg.integer("p", 0), q = (int)ctx.cfg.integer("q", 1);
    CircleVerdict v = circle_verdict(p, q, ctx.gf);
    ctx.write_json("circle_verdict.json", to_json(v));
    if (ctx.want_svg) {
        std::vector<SvgCurve> curves;
        for (const ManifoldArc& arc : v.arcs) {
            SvgCurve c;
            c.color = arc.stable() ? "blue" : "red";
            for (const CylinderPoint& pt : arc.pts) c.pts.emplace_back(pt.x, pt.p);
            curves.push_back(std::move(c));
        }
        write_svg(ctx.path("circle_verdict.svg"), curves);
    }
}

inline void run_ioc(RunContext& ctx)
{
    int p = (int)ctx.cfg.integer("p", 0), q = (int)ctx.cfg.integer("q", 1);
    double F = tilt_from_config(ctx.cfg, ctx.gf);
    TiltedEnergy E(ctx.gf, F);
    EquilibriumCatalog cat =
        find_all_equilibria(p, q, E, (int)ctx.cfg.integer("grid_density", 6));
    IocBuildOptions opt;
    opt.include_index2 = ctx.cfg.integer("include_index2", 0) != 0;
    auto circles = build_ioc(p, q, E, cat, opt);
    Json j;
    j["catalog_size"] = cat.entries.size();
    Json entries = Json::array();
    for (const CatalogEntry& e : cat.entries) {
        Json ej;
        ej["x"] = e.state.x;
        ej["morse_index"] = e.morse_index;
        ej["energy"] = e.energy;
        ej["degenerate"] = e.degenerate;
        entries.push_back(ej);
    }
    j["catalog"] = entries;
    j["circles"] = circles.size();
    Json reports = Json::array();
    std::vector<SvgCurve> curves;
    for (std::size_t i = 0; i < circles.size(); ++i) {
        IocReport rep = verify_ioc(circles[i], E);
        Json rj;
        rj["ordered"] = rep.ordered;
        rj["periodicity_defect"] = rep.periodicity_defect;
        rj["max_tangency"] = rep.max_tangency;
        rj["reconstruction_error"] = rep.reconstruction_error;
        reports.push_back(rj);
        if (ctx.want_csv)
            write_ioc_csv(circles[i], ctx.path("ioc_" + std::to_string(i) + ".csv"));
        if (ctx.want_svg && q == 2) {
            SvgCurve c;
            c.color = i == 0 ? "red" : (i == 1 ? "blue" : "green");
            for (const auto& cfgp : circles[i].configs)
                c.pts.emplace_back(cfgp.x[0], cfgp.x[1]);
            curves.push_back(std::move(c));
        }
    }
    j["reports"] = reports;
    if (ctx.want_svg && q == 2) write_svg(ctx.path("ioc_landscape.svg"), curves);
    ctx.write_json("ioc.json", j);
}

inline void run_minimax(RunContext& ctx)
{
    int p = (int)ctx.cfg.integer("p", 0), q = (int)ctx.cfg.integer("q", 1);
    double F = tilt_from_config(ctx.cfg, ctx.gf);
    TiltedEnergy E(ctx.gf, F);
    EquilibriumCatalog cat = find_all_equilibria(p, q, E);
    std::vector<const CatalogEntry*> minima;
    for (const CatalogEntry& e : cat.entries)
        if (e.morse_index == 0 && is_birkhoff(e.state)) minima.push_back(&e);
    if (minima.size() < 1) throw NumericalError("minimax: no minima found");
    PeriodicConfiguration mA = minima[0]->state;
    PeriodicConfiguration mB = (minima.size() > 1) ? minima[1]->state : translate(mA, 0, 1);
    MinimaxOptions opt;
    if (ctx.cfg.has("bend")) opt.bend = Vec((std::size_t)q, ctx.cfg.num("bend", 0.0));
    MinimaxResult r = minimax(mA, mB, E, opt);
    Json j;
    j["saddle"] = r.saddle.x;
    j["height"] = r.height;
    j["morse_index"] = r.morse_index;
    j["gradient_norm"] = r.gradient_norm;
    ctx.write_json("minimax.json", j);
}

inline void run_glue(RunContext& ctx)
{
    int p = (int)ctx.cfg.integer("p", 0), q = (int)ctx.cfg.integer("q", 1);
    double F = tilt_from_config(ctx.cfg, ctx.gf);
    TiltedEnergy E(ctx.gf, F);
    PeriodicConfiguration y =
        relaxed_equilibrium(ctx.gf, p, q, F, ctx.cfg.num("phase", 0.12));
    HeteroclinicSolution z = find_equilibrium_disc(y, translate(y, 0, 1), DiscKind::Advancing, E);
    GluingPlan plan;
    plan.pieces = {y, z.window, translate(y, (long long)ctx.cfg.integer("qshift", 1),
                                          (long long)ctx.cfg.integer("pshift", 1))};
    plan.cuts = {ctx.cfg.integer("cut1", -14), ctx.cfg.integer("cut2", 14)};
    GluingReport rep = glue(plan, E);
    Json j;
    j["delta"] = rep.delta;
    j["max_junction_speed"] = rep.max_junction_speed;
    j["C"] = rep.C;
    j["bound_ok"] = rep.bound_ok;
    ctx.write_json("glue.json", j);
    if (ctx.want_csv) export_aubry(rep.glued, ctx.path("glued_aubry.csv"));
}

inline void run_modify_h(RunContext& ctx)
{
    int M = (int)ctx.cfg.integer("M", ctx.gf.band().M);
    int N = (int)ctx.cfg.integer("N", ctx.gf.band().N);
    GeneratingFunction ht = modify_band(ctx.gf, M, N);
    ModelReport rep = verify_properties(ht, 800);
    Json j;
    j["M"] = M;
    j["N"] = N;
    j["max_periodicity_violation"] = rep.max_periodicity_violation;
    j["min_minus_h12_on_band"] = rep.min_minus_h12_on_band;
    j["max_first_derivative_fd_error"] = rep.max_first_derivative_fd_error;
    j["twist_ok"] = rep.twist_ok;
    ctx.write_json("modify_h.json", j);
    if (ctx.want_csv) {
        CsvWriter csv(ctx.path("modified_h12.csv"));
        csv.header("spacing,h12");
        for (int i = 0; i <= 400; ++i) {
            double s = (M - 2) + (N - M + 4) * double(i) / 400;
            csv.row(s, ht.eval(0.3, 0.3 + s).h12);
        }
    }
}

inline void run_scan(RunContext& ctx)
{
    std::string mode = ctx.cfg.str("scan.mode", "v_of_F");
    int jobs = std::max(1, (int)ctx.cfg.integer("output.jobs", 2));
    if (mode == "v_of_F") {
        int p = (int)ctx.cfg.integer("p", 0), q = (int)ctx.cfg.integer("q", 1);
        double f0 = ctx.cfg.num("scan.F_min", 0.0);
        double f1 = ctx.cfg.num("scan.F_max", 0.3);
        int steps = (int)ctx.cfg.integer("scan.steps", 30);
        if (steps < 1) throw ConfigError("scan: empty grid");
        struct Row {
            double F = 0, v = 0;
            std::string verdict = "error";
        };
        std::vector<Row> rows((std::size_t)steps + 1);
        std::atomic<int> cursor{0};
        auto worker = [&]() {
            for (;;) {
                int i = cursor.fetch_add(1);
                if (i > steps) return;
                double F = f0 + (f1 - f0) * double(i) / steps;
                rows[(std::size_t)i].F = F;
                try {
                    VelocityVerdict v = classify(PeriodicConfiguration::rigid(p, q, 0.12),
                                                 TiltedEnergy(ctx.gf, F));
                    if (v.kind == VelocityVerdict::Kind::Sliding) {
                        rows[(std::size_t)i].verdict = "sliding";
                        rows[(std::size_t)i].v = v.sliding->v;
                    } else if (v.kind == VelocityVerdict::Kind::Pinned) {
                        rows[(std::size_t)i].verdict = "pinned";
                    } else {
                        rows[(std::size_t)i].verdict = "undetermined";
                    }
                } catch (const Error&) {
                }
            }
        };
        std::vector<std::future<void>> pool;
        for (int jj = 0; jj < jobs - 1; ++jj) pool.push_back(std::async(std::launch::async, worker));
        worker();
        for (auto& fut : pool) fut.get();
        CsvWriter csv(ctx.path("scan.csv"));
        csv.header("index,F,verdict,v");
        for (int i = 0; i <= steps; ++i)
            csv.row(i, rows[(std::size_t)i].F, rows[(std::size_t)i].verdict, rows[(std::size_t)i].v);
        Json j;
        j["rows"] = steps + 1;
        j["mode"] = mode;
        ctx.write_json("scan.json", j);
    } else if (mode == "fd_farey") {
        int level = (int)ctx.cfg.integer("scan.level", 4);
        double tol = ctx.cfg.num("tol", 1e-4);
        std::vector<std::pair<int, int>> rationals;
        for (int qq = 1; qq <= level; ++qq)
            for (int pp = 0; pp <= qq; ++pp) {
                bool reduced = (pp == 0) ? (qq == 1) : (gcd_ll(pp, qq) == 1);
                if (reduced) rationals.emplace_back(pp, qq);
            }
        std::sort(rationals.begin(), rationals.end(), [](auto a, auto b) {
            return a.first * b.second < b.first * a.second;
        });
        struct Row {
            int p, q;
            double fd = -1;
            std::string status = "error";
        };
        std::vector<Row> rows;
        for (auto [pp, qq] : rationals) rows.push_back({pp, qq});
        std::atomic<std::size_t> cursor{0};
        auto worker = [&]() {
            for (;;) {
                std::size_t i = cursor.fetch_add(1);
                if (i >= rows.size()) return;
                try {
                    DepinningResult r = depinning_force(rows[i].p, rows[i].q, ctx.gf,
                                                        DepinningMethod::Continuation, tol);
                    rows[i].fd = r.F_d;
                    rows[i].status = r.resolved ? "ok" : "unresolved";
                } catch (const Error&) {
                    try {
                        DepinningResult r = depinning_force(rows[i].p, rows[i].q, ctx.gf,
                                                            DepinningMethod::Bisection, tol);
                        rows[i].fd = r.F_d;
                        rows[i].status = r.resolved ? "ok" : "unresolved";
                    } catch (const Error&) {
                    }
                }
            }
        };
        std::vector<std::future<void>> pool;
        for (int jj = 0; jj < jobs - 1; ++jj) pool.push_back(std::async(std::launch::async, worker));
        worker();
        for (auto& fut : pool) fut.get();
        CsvWriter csv(ctx.path("scan.csv"));
        csv.header("p,q,F_d,status");
        for (const Row& r : rows) csv.row(r.p, r.q, r.fd, r.status);
        Json j;
        j["rows"] = rows.size();
        j["mode"] = mode;
        ctx.write_json("scan.json", j);
    } else {
        throw ConfigError("scan: unknown mode '" + mode + "'");
    }
}

}  // namespace detail

/// Execute one run config.  Exit codes: 0 success, 2 config parse/shape
/// error, 3 model validation failure, 4 numerical failure (diagnostics JSON).
inline RunOutcome run(const RunConfig& cfg)
{
    RunOutcome out;
    std::string verb;
    std::filesystem::path dir;
    try {
        verb = cfg.str("command");
        if (verb.empty()) throw ConfigError("config: command verb is required");
        dir = cfg.str("output.dir", "out");
        std::filesystem::create_directories(dir);
    } catch (const ConfigError& e) {
        out.exit_code = 2;
        out.summary["error"] = e.what();
        return out;
    } catch (const std::exception& e) {
        out.exit_code = 2;
        out.summary["error"] = e.what();
        return out;
    }
    try {
        detail::RunContext ctx{cfg, model_from_config(cfg), dir, true, true, false, &out};
        std::string formats = cfg.str("output.formats", "json,csv");
        ctx.want_csv = formats.find("csv") != std::string::npos;
        ctx.want_json = formats.find("json") != std::string::npos;
        ctx.want_svg = formats.find("svg") != std::string::npos;

        if (verb == "fd") detail::run_fd(ctx);
        else if (verb == "fd-limit") detail::run_fd_limit(ctx);
        else if (verb == "equilibrium") detail::run_equilibrium(ctx);
        else if (verb == "classify") detail::run_classify(ctx);
        else if (verb == "disc") detail::run_disc(ctx, false);
        else if (verb == "front") detail::run_disc(ctx, true);
        else if (verb == "map-orbit") detail::run_map_orbit(ctx);
        else if (verb == "manifolds") detail::run_manifolds(ctx);
        else if (verb == "action-area") detail::run_action_area(ctx);
        else if (verb == "circle-verdict") detail::run_circle_verdict(ctx);
        else if (verb == "ioc") detail::run_ioc(ctx);
        else if (verb == "minimax") detail::run_minimax(ctx);
        else if (verb == "glue") detail::run_glue(ctx);
        else if (verb == "modify-h") detail::run_modify_h(ctx);
        else if (verb == "scan") detail::run_scan(ctx);
        else throw ConfigError("config: unknown command '" + verb + "'");
        out.summary["status"] = "ok";
        out.summary["artifacts"] = out.artifacts;
    } catch (const ConfigError& e) {
        out.exit_code = 2;
        out.summary["error"] = e.what();
    } catch (const ModelError& e) {
        out.exit_code = 3;
        out.summary["error"] = e.what();
    } catch (const std::exception& e) {
        out.exit_code = 4;
        out.summary["error"] = e.what();
        // numerical failures leave a diagnostics record next to the artifacts
        try {
            std::ofstream f(dir / "failure.json");
            Json j;
            j["schema"] = 1;
            j["config"] = cfg.to_json();
            j["error"] = e.what();
            f << j.dump(2) << "\n";
        } catch (...) {
        }
    }
    return out;
}

}  // namespace fk
