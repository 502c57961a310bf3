#pragma once

// Discommensurations: equilibrium heteroclinics between type-(p,q) states,
// periodically sliding fronts in a co-moving window, delta-gluing, the
// mediant construction, and truncated Morse-index machinery.

#include <functional>
#include <variant>

#include "fk/flow.hpp"

namespace fk {

enum class DiscKind { Advancing, Retreating };

struct HeteroclinicSolution {
    WindowConfiguration window;
    DiscKind kind = DiscKind::Advancing;
    double residual = 0;      // sup-norm defect of the equilibrium equation
    double decay_left = 0;    // fitted exponential tail rate per site
    double decay_right = 0;
    double tail_gap_left = 0;   // |x_l - asym_l|
    double tail_gap_right = 0;  // |x_r - asym_r|
    bool tails_monotone = false;
    int doublings = 0;  // window enlargements applied
};

struct SlidingFront {
    DiscKind kind = DiscKind::Advancing;
    double T = 0;  // recurrence period
    double v = 0;  // -1/T advancing, +1/T retreating (velocity in n)
    double recurrence_error = 0;
    WindowConfiguration window;               // state at the reference time
    std::vector<double> sample_t;             // one period of the co-moving window
    std::vector<Vec> sample_values;
    bool found = true;
    double displacement = 0;  // centroid drift when no recurrence was found
    std::string note;
};

struct DiscOptions {
    long long half_width = 0;  // 0: use 12 q
    double residual_target = 1e-10;
    int max_doublings = 6;
    double eq_tol = 1e-8;
    FlowSettings settings;
};

namespace detail {

inline Vec window_residual(const WindowConfiguration& w, const TiltedEnergy& E)
{
    Vec g = rhs(w, E);
    for (double& v : g) v = -v;  // equilibrium defect h2 + h1 - F
    return g;
}

/// One Newton pass on the clamped window equations; returns false when the
/// tridiagonal solve fails.
inline bool window_newton(WindowConfiguration& w, const TiltedEnergy& E, double tol, int max_iter,
                          double* out_res)
{
    const std::size_t n = w.values.size();
    Vec G = window_residual(w, E);
    double res = sup_norm(G);
    for (int it = 0; it < max_iter && res > tol; ++it) {
        Vec lower(n, 0), diag(n, 0), upper(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            long long site = w.l + (long long)i;
            double xm = w.site(site - 1), x = w.values[i], xp = w.site(site + 1);
            HBundle a = E.eval(xm, x), b = E.eval(x, xp);
            diag[i] = a.h22 + b.h11;
            if (i > 0) lower[i] = a.h12;
            if (i + 1 < n) upper[i] = b.h12;
        }
        Vec step;
        try {
            Vec mG = G;
            for (double& v : mG) v = -v;
            step = tridiag_solve(lower, diag, upper, mG);
        } catch (const NumericalError&) {
            return false;
        }
        double lambda = 1.0;
        bool improved = false;
        for (int half = 0; half < 40; ++half) {
            WindowConfiguration trial = w;
            for (std::size_t i = 0; i < n; ++i) trial.values[i] = w.values[i] + lambda * step[i];
            Vec Gt = window_residual(trial, E);
            double rt = sup_norm(Gt);
            if (rt < res || rt < tol) {
                w = trial;
                G = Gt;
                res = rt;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!improved) break;
    }
    if (out_res) *out_res = res;
    return res <= tol;
}

/// Fit the exponential tail rate of gaps g_j ~ C exp(-rate j) over the given
/// slice; returns 0 when the gaps are already at rounding level.
inline double fit_decay(const std::vector<double>& gaps)
{
    std::vector<double> logs;
    for (double g : gaps)
        if (g > 1e-300) logs.push_back(std::log(g));
    if (logs.size() < 3) return 0;
    double n = (double)logs.size(), sx = 0, sy = 0, sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < logs.size(); ++i) {
        sx += (double)i;
        sy += logs[i];
        sxy += (double)i * logs[i];
        sxx += (double)i * (double)i;
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return -slope;
}

inline WindowConfiguration blend_seed(const PeriodicConfiguration& left,
                                      const PeriodicConfiguration& right, long long l,
                                      long long r, double interface_scale)
{
    WindowConfiguration w;
    w.l = l;
    w.left_asym = left;
    w.right_asym = right;
    w.values.resize((std::size_t)(r - l + 1));
    for (long long n = l; n <= r; ++n) {
        double s = 1.0 / (1.0 + std::exp(-double(n) / interface_scale));
        w.values[(std::size_t)(n - l)] = (1 - s) * left.site(n) + s * right.site(n);
    }
    return w;
}

}  // namespace detail

/// Equilibrium discommensuration between xm << xp (both type (p,q)
/// equilibria of E).  Advancing connects xm (left) to xp (right); retreating
/// the reverse.  Boundary sites clamp to the asymptotes; the window doubles
/// until the reported defect meets the target.
inline HeteroclinicSolution find_equilibrium_disc(const PeriodicConfiguration& xm,
                                                  const PeriodicConfiguration& xp, DiscKind kind,
                                                  const TiltedEnergy& E, DiscOptions opt = {})
{
    if (xm.p != xp.p || xm.q != xp.q)
        throw Error("find_equilibrium_disc: asymptotes must share the type (p,q)");
    if (compare(xm, xp) != Order::LessStrict)
        throw Error("find_equilibrium_disc: need xm strictly below xp");
    for (const auto* c : {&xm, &xp})
        if (sup_norm(rhs(*c, E)) > opt.eq_tol)
            throw Error("find_equilibrium_disc: asymptote is not an equilibrium of E");

    const int q = xm.q;
    long long L = opt.half_width > 0 ? opt.half_width : 12ll * q;
    const PeriodicConfiguration& left = (kind == DiscKind::Advancing) ? xm : xp;
    const PeriodicConfiguration& right = (kind == DiscKind::Advancing) ? xp : xm;

    HeteroclinicSolution sol;
    sol.kind = kind;
    WindowConfiguration w = detail::blend_seed(left, right, -L, L, std::max(1.0, 1.5 * q));
    for (int doubling = 0; doubling <= opt.max_doublings; ++doubling) {
        double res = 0;
        bool ok = detail::window_newton(w, E, 1e-13, 80, &res);
        if (!ok) {
            // flow pre-relaxation then retry
            auto f = [&](const Vec& v) {
                WindowConfiguration tmp = w;
                tmp.values = v;
                return rhs(tmp, E);
            };
            detail::StepperState st;
            st.x = w.values;
            st.k1 = f(st.x);
            st.dt = 1e-3;
            while (st.t < 20.0) detail::bs23_step(st, f, 1e-10, 20.0 - st.t);
            w.values = st.x;
            ok = detail::window_newton(w, E, 1e-13, 80, &res);
            if (!ok) throw NewtonError("find_equilibrium_disc: Newton failed on the window");
        }
        // escape from the order interval signals nonexistence
        for (std::size_t i = 0; i < w.values.size(); ++i) {
            long long n = w.l + (long long)i;
            double lo = std::min(xm.site(n), xp.site(n)) - 1e-9;
            double hi = std::max(xm.site(n), xp.site(n)) + 1e-9;
            if (w.values[i] < lo || w.values[i] > hi)
                throw NumericalError(
                    "find_equilibrium_disc: iterate escaped the order interval [xm, xp]");
        }
        // honest residual: include the boundary clamp error through the
        // asymptote-extended configuration (that is what window_residual uses)
        sol.residual = res;
        sol.tail_gap_left = w.left_boundary_residual();
        sol.tail_gap_right = w.right_boundary_residual();
        double clamp_err =
            E.h.h12_sup_on_band(40) * std::max(sol.tail_gap_left, sol.tail_gap_right);
        if (std::max(res, clamp_err) <= opt.residual_target || doubling == opt.max_doublings) {
            sol.doublings = doubling;
            break;
        }
        // double the window, reseeding from the current solution
        long long L2 = 2 * L;
        WindowConfiguration w2 = detail::blend_seed(left, right, -L2, L2, std::max(1.0, 1.5 * q));
        for (long long n = -L2; n <= L2; ++n)
            if (n >= -L && n <= L) w2.values[(std::size_t)(n + L2)] = w.values[(std::size_t)(n + L)];
        w = std::move(w2);
        L = L2;
    }
    sol.window = w;

    // tail diagnostics over the outer thirds
    const long long len = (long long)w.values.size();
    std::vector<double> gl, gr;
    for (long long i = 0; i < len / 3; ++i) {
        gl.push_back(std::fabs(w.values[(std::size_t)i] - w.left_asym.site(w.l + i)));
        gr.push_back(std::fabs(w.values[(std::size_t)(len - 1 - i)] -
                               w.right_asym.site(w.l + len - 1 - i)));
    }
    std::vector<double> gl_rev(gl.rbegin(), gl.rend());  // increasing toward the interface
    sol.decay_left = detail::fit_decay(gl_rev);
    sol.decay_right = detail::fit_decay(std::vector<double>(gr.rbegin(), gr.rend()));
    sol.tails_monotone = true;
    for (std::size_t i = 1; i < gl.size(); ++i)
        if (gl[i] < gl[i - 1] - 1e-13 || gr[i] < gr[i - 1] - 1e-13) sol.tails_monotone = false;
    return sol;
}

/// Periodically sliding discommensuration: integrate a clamped window in a
/// co-moving frame, relabel by T_{qp}^{-+1} when the interface has drifted by
/// q sites, and detect the recurrence x(t+T) = T_{qp}^{-+1} x(t).
inline SlidingFront find_sliding_disc(const PeriodicConfiguration& xm,
                                      const PeriodicConfiguration& xp, DiscKind kind,
                                      const TiltedEnergy& E, DiscOptions opt = {})
{
    if (xm.p != xp.p || xm.q != xp.q)
        throw Error("find_sliding_disc: asymptotes must share the type (p,q)");
    if (compare(xm, xp) != Order::LessStrict)
        throw Error("find_sliding_disc: need xm strictly below xp");
    for (const auto* c : {&xm, &xp})
        if (sup_norm(rhs(*c, E)) > opt.eq_tol)
            throw Error("find_sliding_disc: asymptote is not an equilibrium of E");

    const int q = xm.q;
    const int p = xm.p;
    long long L = opt.half_width > 0 ? opt.half_width : 40ll * q + 10;
    const PeriodicConfiguration& left = (kind == DiscKind::Advancing) ? xm : xp;
    const PeriodicConfiguration& right = (kind == DiscKind::Advancing) ? xp : xm;
    WindowConfiguration w = detail::blend_seed(left, right, -L, L, std::max(1.0, 1.5 * q));

    auto f = [&](const Vec& v) {
        WindowConfiguration tmp = w;
        tmp.values = v;
        return rhs(tmp, E);
    };
    auto centroid = [&](const Vec& deriv) -> std::optional<double> {
        double sum = 0, wsum = 0;
        for (std::size_t i = 0; i < deriv.size(); ++i) {
            double a = std::fabs(deriv[i]);
            sum += a;
            wsum += a * (double)(w.l + (long long)i);
        }
        if (sum < 1e-14) return std::nullopt;
        return wsum / sum;
    };
    // relabel toward the centre: advancing fronts drift left, so shift the
    // profile right with T_{qp}; retreating the reverse.
    auto relabel = [&](Vec& v) {
        Vec nv(v.size());
        const long long len = (long long)v.size();
        if (kind == DiscKind::Advancing) {
            for (long long i = 0; i < len; ++i)
                nv[(std::size_t)i] = (i - q >= 0) ? v[(std::size_t)(i - q)] + p
                                                  : w.left_asym.site(w.l + i);
        } else {
            for (long long i = 0; i < len; ++i)
                nv[(std::size_t)i] = (i + q < len) ? v[(std::size_t)(i + q)] - p
                                                   : w.right_asym.site(w.l + i);
        }
        v = std::move(nv);
    };

    const double drift_sign = (kind == DiscKind::Advancing) ? -1.0 : 1.0;
    detail::StepperState st;
    st.x = w.values;
    st.k1 = f(st.x);
    st.dt = opt.settings.dt0;

    // settle the profile before establishing the reference
    while (st.t < 3.0) detail::bs23_step(st, f, opt.settings.step_tol, 3.0 - st.t);

    SlidingFront out;
    out.kind = kind;
    Vec ref = st.x;
    double t_ref = st.t;
    std::optional<double> c_ref = centroid(st.k1);
    int crossings = 0;
    std::vector<std::pair<double, Vec>> window_samples;

    while (st.t < opt.settings.t_max) {
        Vec x_prev = st.x, f_prev = st.k1;
        double t_prev = st.t;
        if (!detail::bs23_step(st, f, opt.settings.step_tol, opt.settings.t_max - st.t)) continue;
        if (sup_norm(st.k1) < 0.01 * opt.settings.eq_tol) {
            out.found = false;
            out.window = w;
            out.window.values = st.x;
            out.displacement = 0;
            out.note = "front pinned: window converged to an equilibrium";
            return out;
        }
        if (crossings >= 1) window_samples.emplace_back(st.t, st.x);
        std::optional<double> c_now = centroid(st.k1);
        if (!c_ref) {
            c_ref = c_now;
            continue;
        }
        if (!c_now) continue;
        double drift = (*c_now - *c_ref) * drift_sign;
        if (drift >= q) {
            // recurrence error against the shifted reference on the interior
            const long long len = (long long)st.x.size();
            auto recur_err = [&](const Vec& xc) {
                double e = 0;
                for (long long i = std::llabs(q) + 2; i < len - std::llabs(q) - 2; ++i) {
                    long long jsrc = (kind == DiscKind::Advancing) ? i + q : i - q;
                    double expected = (kind == DiscKind::Advancing) ? ref[(std::size_t)jsrc] - p
                                                                    : ref[(std::size_t)jsrc] + p;
                    e = std::max(e, std::fabs(xc[(std::size_t)i] - expected));
                }
                return e;
            };
            // the centroid crossing brackets the recurrence; refine the time
            // by minimizing the recurrence error itself (golden section)
            double h = st.t - t_prev;
            auto state_at = [&](double theta) {
                return detail::hermite_eval(x_prev, f_prev, st.x, st.k1, h, theta);
            };
            const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
            double a = 0, b = 1;
            double u = b - gr * (b - a), v2 = a + gr * (b - a);
            double fu = recur_err(state_at(u)), fv = recur_err(state_at(v2));
            for (int it = 0; it < 90 && b - a > 1e-14; ++it) {
                if (fu <= fv) {
                    b = v2;
                    v2 = u;
                    fv = fu;
                    u = b - gr * (b - a);
                    fu = recur_err(state_at(u));
                } else {
                    a = u;
                    u = v2;
                    fu = fv;
                    v2 = a + gr * (b - a);
                    fv = recur_err(state_at(v2));
                }
            }
            double theta = 0.5 * (a + b);
            double tc = t_prev + theta * h;
            Vec xc = state_at(theta);
            double err = recur_err(xc);
            if (crossings >= 1 && err < opt.settings.recur_tol) {
                out.T = tc - t_ref;
                out.v = (kind == DiscKind::Advancing) ? -1.0 / out.T : 1.0 / out.T;
                out.recurrence_error = err;
                out.window = w;
                out.window.values = xc;
                for (auto& [ts, xs] : window_samples) {
                    if (ts <= tc) {
                        out.sample_t.push_back(ts - t_ref);
                        out.sample_values.push_back(xs);
                    }
                }
                out.found = true;
                return out;
            }
            ++crossings;
            window_samples.clear();
            // recenter and restart the reference from the relabeled state
            relabel(xc);
            st.x = xc;
            st.k1 = f(st.x);
            st.t = tc;
            ref = st.x;
            t_ref = tc;
            c_ref = centroid(st.k1);
        }
    }
    out.found = false;
    out.T = 0;
    out.v = 0;
    out.window = w;
    out.window.values = st.x;
    std::optional<double> c_end = centroid(st.k1);
    out.displacement = (c_end && c_ref) ? (*c_end - *c_ref) * drift_sign : 0.0;
    out.note = "no recurrence within t_max; front appears " +
               std::string(out.displacement < 0.5 ? "pinned" : "slow");
    return out;
}

// ---------------------------------------------------------------------------
// delta-gluing

struct GluingPlan {
    std::vector<std::variant<PeriodicConfiguration, WindowConfiguration>> pieces;
    std::vector<long long> cuts;  // piece i occupies sites <= cuts[i]; size = pieces-1
    double requested_delta = std::numeric_limits<double>::infinity();
    long long pad = 8;  // sites kept beyond the outer cuts
};

struct GluingReport {
    WindowConfiguration glued;
    double delta = 0;            // measured max junction mismatch
    double max_junction_speed = 0;  // max |xdot| at the junction sites
    double C = 0;                // sup |h12| over the band
    bool bound_ok = false;       // max_junction_speed <= C * delta (+ slack)
};

namespace detail {
inline double piece_site(const std::variant<PeriodicConfiguration, WindowConfiguration>& pc,
                         long long n)
{
    if (std::holds_alternative<PeriodicConfiguration>(pc))
        return std::get<PeriodicConfiguration>(pc).site(n);
    return std::get<WindowConfiguration>(pc).site(n);
}
}  // namespace detail

/// Concatenate the plan's pieces at the cut sites and report the junction
/// mismatch delta and the induced equilibrium defect.
inline GluingReport glue(const GluingPlan& plan, const TiltedEnergy& E)
{
    if (plan.pieces.size() < 2 || plan.cuts.size() != plan.pieces.size() - 1)
        throw Error("glue: need k pieces and k-1 cuts");
    for (std::size_t i = 1; i < plan.cuts.size(); ++i)
        if (plan.cuts[i] <= plan.cuts[i - 1]) throw Error("glue: cuts must increase");

    GluingReport rep;
    rep.delta = 0;
    for (std::size_t i = 0; i < plan.cuts.size(); ++i) {
        long long n0 = plan.cuts[i];
        for (long long n : {n0, n0 + 1}) {
            double y = detail::piece_site(plan.pieces[i], n);
            double z = detail::piece_site(plan.pieces[i + 1], n);
            rep.delta = std::max(rep.delta, std::fabs(y - z));
        }
    }
    if (rep.delta > plan.requested_delta)
        throw NumericalError("glue: junction mismatch " + std::to_string(rep.delta) +
                             " exceeds requested delta");

    long long l = plan.cuts.front() - plan.pad, r = plan.cuts.back() + plan.pad;
    WindowConfiguration w;
    w.l = l;
    w.values.resize((std::size_t)(r - l + 1));
    for (long long n = l; n <= r; ++n) {
        std::size_t idx = 0;
        while (idx < plan.cuts.size() && n > plan.cuts[idx]) ++idx;
        w.values[(std::size_t)(n - l)] = detail::piece_site(plan.pieces[idx], n);
    }
    auto asym_of = [](const std::variant<PeriodicConfiguration, WindowConfiguration>& pc,
                      bool left) {
        if (std::holds_alternative<PeriodicConfiguration>(pc))
            return std::get<PeriodicConfiguration>(pc);
        return left ? std::get<WindowConfiguration>(pc).left_asym
                    : std::get<WindowConfiguration>(pc).right_asym;
    };
    w.left_asym = asym_of(plan.pieces.front(), true);
    w.right_asym = asym_of(plan.pieces.back(), false);
    rep.glued = w;

    Vec speeds = rhs(w, E);
    for (long long n0 : plan.cuts)
        for (long long n = n0 - 1; n <= n0 + 2; ++n)
            if (n >= l && n <= r)
                rep.max_junction_speed =
                    std::max(rep.max_junction_speed, std::fabs(speeds[(std::size_t)(n - l)]));
    rep.C = E.h.h12_sup_on_band();
    rep.bound_ok = rep.max_junction_speed <= rep.C * rep.delta * (1 + 1e-6) + 1e-12;
    return rep;
}

// ---------------------------------------------------------------------------
// Mediant construction (periodic configuration of type (np+mp', nq+mq'))

struct MediantConfigResult {
    PeriodicConfiguration config;
    double max_speed = 0;  // max |xdot| over one period
    double delta = 0;      // tail gap consumed at the junctions
};

/// Build the type-(np+mp', nq+mq') configuration by splicing m blocks, each a
/// y-piece of q' sites followed by a segment of the discommensuration z
/// connecting y to T_{q'p'} y (interface centred in the segment).
inline MediantConfigResult build_mediant_config(
    const PeriodicConfiguration& y, const HeteroclinicSolution& z, long long pp, long long qp,
    int n, const TiltedEnergy& E, int m = 1,
    double delta_required = std::numeric_limits<double>::infinity())
{
    if (n < 1 || m < 1) throw Error("build_mediant_config: n, m >= 1 required");
    if (qp < 1) throw Error("build_mediant_config: q' >= 1 required");
    const int p = y.p, q = y.q;
    const WindowConfiguration& zw = z.window;

    // interface of z: largest spacing excess against the periodic background
    long long interface = zw.l;
    double best = -1;
    for (long long s = zw.l; s < zw.r(); ++s) {
        double gap = std::fabs(zw.site(s + 1) - zw.site(s) - (y.site(s + 1) - y.site(s)));
        if (gap > best) {
            best = gap;
            interface = s;
        }
    }

    // z-sites per block (n split across the m blocks)
    std::vector<long long> nk((std::size_t)m, n / m);
    for (int k = 0; k < n % m; ++k) ++nk[(std::size_t)k];

    const long long Q = (long long)n * q + (long long)m * qp;
    const long long P = (long long)n * p + (long long)m * pp;
    Vec xs((std::size_t)Q);
    double delta = 0;
    long long off = 0;
    for (int k = 0; k < m; ++k) {
        // block k: y-translate T_{q'p'}^k for q' sites, then z-translate with
        // the same accumulated shift, recentred so its interface lands in the
        // middle of the z-part
        long long zpart = nk[(std::size_t)k] * q;
        long long target_mid = off + qp + zpart / 2;
        long long t = (long long)std::llround(double(target_mid - interface - k * qp) / q);
        WindowConfiguration zk = translate(zw, k * qp + t * q, k * pp + t * p);
        PeriodicConfiguration yk = translate(y, k * qp, k * pp);

        for (long long u = 0; u < qp && off + u < Q; ++u)
            xs[(std::size_t)(off + u)] = yk.site(off + u);
        for (long long u = 0; u < zpart; ++u)
            xs[(std::size_t)(off + qp + u)] = zk.site(off + qp + u);

        // junction mismatches: y-piece against z at the left cut, z against
        // the next y-translate at the right cut
        for (long long s : {off + qp - 1, off + qp})
            delta = std::max(delta, std::fabs(yk.site(s) - zk.site(s)));
        PeriodicConfiguration ynext = translate(y, (k + 1) * qp, (k + 1) * pp);
        for (long long s : {off + qp + zpart - 1, off + qp + zpart})
            delta = std::max(delta, std::fabs(zk.site(s) - ynext.site(s)));
        off += qp + zpart;
    }
    if (delta > delta_required)
        throw NumericalError("build_mediant_config: tails not within delta at n = " +
                             std::to_string(n) + " (measured " + std::to_string(delta) +
                             "); use larger n or a wider window");

    PeriodicConfiguration out((int)P, (int)Q, xs);
    MediantConfigResult res;
    res.config = out;
    res.delta = delta;
    res.max_speed = sup_norm(rhs(out, E));
    return res;
}

// ---------------------------------------------------------------------------
// Morse machinery

struct TruncatedMorse {
    int index = 0;        // negative eigenvalues of the truncated Hessian
    double edge = 0;      // largest eigenvalue of A = -D^2 W (spectrum edge)
    int dimension = 0;
};

/// Morse index of the truncated energy between sites l and m (exclusive of
/// the clamped ends), via Sturm counts on the symmetric tridiagonal
/// second-difference operator.
inline TruncatedMorse morse_index_truncated(const std::function<double(long long)>& site,
                                            long long l, long long m, const TiltedEnergy& E)
{
    if (m <= l + 1) throw Error("morse_index_truncated: need m > l+1");
    const long long d = m - l - 1;
    Vec beta((std::size_t)d), alpha_off((std::size_t)std::max<long long>(0, d - 1));
    for (long long i = l + 1; i <= m - 1; ++i) {
        HBundle a = E.eval(site(i - 1), site(i));
        HBundle b = E.eval(site(i), site(i + 1));
        beta[(std::size_t)(i - l - 1)] = -a.h22 - b.h11;
        if (i < m - 1) alpha_off[(std::size_t)(i - l - 1)] = -b.h12;
    }
    TruncatedMorse out;
    out.dimension = (int)d;
    // index of W = # positive eigenvalues of A
    double scale = 1e-30;
    for (double v : beta) scale = std::max(scale, std::fabs(v));
    for (double v : alpha_off) scale = std::max(scale, std::fabs(v));
    std::size_t below = sturm_count_below(beta, alpha_off, 1e-12 * scale);
    out.index = (int)(d - (long long)below);
    out.edge = tridiag_max_eigenvalue(beta, alpha_off);
    return out;
}

inline TruncatedMorse morse_index_truncated(const WindowConfiguration& w, long long l, long long m,
                                            const TiltedEnergy& E)
{
    return morse_index_truncated([&w](long long n) { return w.site(n); }, l, m, E);
}

inline TruncatedMorse morse_index_truncated(const PeriodicConfiguration& c, long long l,
                                            long long m, const TiltedEnergy& E)
{
    return morse_index_truncated([&c](long long n) { return c.site(n); }, l, m, E);
}

struct HessianSummary {
    Vec eigenvalues;  // of D^2 W_{p,q}, ascending
    int morse_index = 0;
    bool degenerate = false;
};

/// Full spectrum of the cyclic Hessian of W_{p,q} at a periodic state.
inline HessianSummary hessian_spectrum_periodic(const PeriodicConfiguration& c,
                                                const TiltedEnergy& E,
                                                double degeneracy_tol = 1e-8)
{
    Mat H = periodic_hessian(c, E);
    HessianSummary out;
    out.eigenvalues = symmetric_eigenvalues(H);
    double scale = 0;
    for (double ev : out.eigenvalues) scale = std::max(scale, std::fabs(ev));
    for (double ev : out.eigenvalues) {
        if (ev < -degeneracy_tol * std::max(scale, 1e-30)) ++out.morse_index;
        if (std::fabs(ev) < degeneracy_tol * std::max(scale, 1e-30)) out.degenerate = true;
    }
    return out;
}

}  // namespace fk
