// depinn: batch front end for tilted chain computations.
//
// Two entry styles:
//   depinn run experiment.cfg          # structured-text run config
//   depinn fd --model standard_fk --k 1 --p 0 --q 1 --tol 1e-4
// Subcommand flags are folded into the same key-value space as the config
// file, so every run is reproducible as a checked-in file.

#include <iostream>

#include "CLI11.hpp"

#include "fk/cli.hpp"

namespace {

struct CommonFlags {
    std::string model = "standard_fk";
    double k = 1.0, b = 2.0;
    double A1 = 0, A2 = 0, A3 = 0;
    bool abc_set = false;
    int p = 0, q = 1;
    double F = 0.0;
    double tol = 1e-4;
    std::string out_dir = "out";
    std::string formats = "json,csv";
    int jobs = 2;
};

void add_common(CLI::App* cmd, CommonFlags& fl, bool wants_pq = true)
{
    cmd->add_option("--model", fl.model, "builtin model kind")->capture_default_str();
    cmd->add_option("--k", fl.k, "coupling / potential strength")->capture_default_str();
    cmd->add_option("--b", fl.b, "double-well parameter b")->capture_default_str();
    if (wants_pq) {
        cmd->add_option("--p", fl.p, "type numerator p")->capture_default_str();
        cmd->add_option("--q", fl.q, "type denominator q")->capture_default_str();
    }
    cmd->add_option("--F", fl.F, "tilt")->capture_default_str();
    cmd->add_option("--tol", fl.tol, "tolerance")->capture_default_str();
    cmd->add_option("--output-dir", fl.out_dir, "artifact directory")->capture_default_str();
    cmd->add_option("--format", fl.formats, "csv|json|svg list")->capture_default_str();
    cmd->add_option("--jobs", fl.jobs, "worker pool size")->capture_default_str();
}

fk::RunConfig base_config(const CommonFlags& fl, const std::string& verb)
{
    fk::RunConfig cfg;
    cfg.set("command", verb);
    cfg.set("model.kind", fl.model);
    cfg.set("model.k", fk::fmt_double(fl.k));
    if (fl.model == "double_well") cfg.set("model.b", fk::fmt_double(fl.b));
    cfg.set("p", std::to_string(fl.p));
    cfg.set("q", std::to_string(fl.q));
    cfg.set("F", fk::fmt_double(fl.F));
    cfg.set("tol", fk::fmt_double(fl.tol));
    cfg.set("output.dir", fl.out_dir);
    cfg.set("output.formats", fl.formats);
    cfg.set("output.jobs", std::to_string(fl.jobs));
    return cfg;
}

int finish(const fk::RunOutcome& out)
{
    std::cout << out.summary.dump(2) << "\n";
    return out.exit_code;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"tilted chain toolkit: depinning forces, discommensurations, "
                 "invariant circles, twist-map diagnostics"};
    app.require_subcommand(1);

    // config-file entry
    std::string cfg_path;
    CLI::App* run_cmd = app.add_subcommand("run", "execute a run config file");
    run_cmd->add_option("config", cfg_path, "path to the run config")->required();

    CommonFlags fl;
    std::string method = "cross-validated", side = "plus", kind = "advancing";
    std::string scan_mode = "v_of_F";
    int nmax = 8, iters = 100, steps = 30, level = 4;
    double f_min = 0.0, f_max = 0.3, x0 = 0.3, p0 = 0.0, arclength = 2.5, bend = 0.0;
    int M = -3, N = 4;

    CLI::App* fd = app.add_subcommand("fd", "depinning force F_d(p/q)");
    add_common(fd, fl);
    fd->add_option("--method", method, "bisection|continuation|cross-validated")
        ->capture_default_str();

    CLI::App* fdl = app.add_subcommand("fd-limit", "one-sided limit F_d(p/q+-)");
    add_common(fdl, fl);
    fdl->add_option("--side", side, "plus|minus")->capture_default_str();
    fdl->add_option("--nmax", nmax, "mediants to evaluate")->capture_default_str();

    CLI::App* eq = app.add_subcommand("equilibrium", "type-(p,q) equilibrium");
    add_common(eq, fl);

    CLI::App* cls = app.add_subcommand("classify", "pinned/sliding verdict");
    add_common(cls, fl);

    CLI::App* disc = app.add_subcommand("disc", "equilibrium discommensuration");
    add_common(disc, fl);
    disc->add_option("--kind", kind, "advancing|retreating")->capture_default_str();

    CLI::App* front = app.add_subcommand("front", "periodically sliding discommensuration");
    add_common(front, fl);
    front->add_option("--kind", kind, "advancing|retreating")->capture_default_str();

    CLI::App* morb = app.add_subcommand("map-orbit", "iterate the twist map");
    add_common(morb, fl, false);
    morb->add_option("--x", x0, "initial x")->capture_default_str();
    morb->add_option("--momentum", p0, "initial p")->capture_default_str();
    morb->add_option("--iters", iters, "iterations")->capture_default_str();

    CLI::App* mani = app.add_subcommand("manifolds", "grow the four manifold branches");
    add_common(mani, fl);
    mani->add_option("--arclength", arclength, "target arclength")->capture_default_str();

    CLI::App* aa = app.add_subcommand("action-area", "primary lobe area vs action");
    add_common(aa, fl);

    CLI::App* cv = app.add_subcommand("circle-verdict", "rational invariant-circle verdict");
    add_common(cv, fl);

    CLI::App* ioc = app.add_subcommand("ioc", "invariant ordered circles");
    add_common(ioc, fl);

    CLI::App* mm = app.add_subcommand("minimax", "mountain-pass saddle");
    add_common(mm, fl);
    mm->add_option("--bend", bend, "initial string bend")->capture_default_str();

    CLI::App* gl = app.add_subcommand("glue", "delta-gluing report");
    add_common(gl, fl);

    CLI::App* mh = app.add_subcommand("modify-h", "band modification report");
    add_common(mh, fl, false);
    mh->add_option("--M", M, "lower band edge")->capture_default_str();
    mh->add_option("--N", N, "upper band edge")->capture_default_str();

    CLI::App* scan = app.add_subcommand("scan", "parameter scan");
    add_common(scan, fl);
    scan->add_option("--mode", scan_mode, "v_of_F|fd_farey")->capture_default_str();
    scan->add_option("--F-min", f_min, "grid start")->capture_default_str();
    scan->add_option("--F-max", f_max, "grid end")->capture_default_str();
    scan->add_option("--steps", steps, "grid steps")->capture_default_str();
    scan->add_option("--level", level, "farey level")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            fk::RunConfig cfg = fk::parse_config_file(cfg_path);
            return finish(fk::run(cfg));
        }
        CLI::App* sub = app.get_subcommands().front();
        fk::RunConfig cfg = base_config(fl, sub->get_name());
        if (sub == fd) cfg.set("method", method);
        if (sub == fdl) {
            cfg.set("side", side);
            cfg.set("nmax", std::to_string(nmax));
        }
        if (sub == disc || sub == front) cfg.set("kind", kind);
        if (sub == morb) {
            cfg.set("x", fk::fmt_double(x0));
            cfg.set("momentum", fk::fmt_double(p0));
            cfg.set("iters", std::to_string(iters));
        }
        if (sub == mani || sub == aa) cfg.set("arclength", fk::fmt_double(arclength));
        if (sub == mm && bend != 0.0) cfg.set("bend", fk::fmt_double(bend));
        if (sub == mh) {
            cfg.set("M", std::to_string(M));
            cfg.set("N", std::to_string(N));
        }
        if (sub == scan) {
            cfg.set("scan.mode", scan_mode);
            cfg.set("scan.F_min", fk::fmt_double(f_min));
            cfg.set("scan.F_max", fk::fmt_double(f_max));
            cfg.set("scan.steps", std::to_string(steps));
            cfg.set("scan.level", std::to_string(level));
        }
        return finish(fk::run(cfg));
    } catch (const fk::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
