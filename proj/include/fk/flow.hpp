#pragma once

// The tilted gradient flow xdot_n = -h2(x_{n-1},x_n) - h1(x_n,x_{n+1}) + F:
// monotone adaptive integration, pinned/sliding classification, equilibrium
// Newton, depinning force by flow bisection and by pseudo-arclength
// continuation to the fold, and hull-function extraction.

#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fk/configuration.hpp"
#include "fk/linalg.hpp"
#include "fk/model.hpp"

namespace fk {

struct FlowSettings {
    double dt0 = 1e-3;        // initial step
    double step_tol = 1e-12;  // per-site local error tolerance per step
    double t_max = 2e4;       // time budget for classification runs
    double eq_tol = 1e-9;     // sup-norm residual threshold for "pinned"
    double recur_tol = 1e-8;  // sup-norm threshold for sliding recurrence
    int max_advances = 64;    // advances by 1 before giving up on recurrence
    bool newton_shortcut = true;  // attempt Newton for an equilibrium early
    int hull_samples = 256;       // stored samples over the final period

    void validate() const
    {
        if (dt0 <= 0 || step_tol <= 0 || eq_tol <= 0 || recur_tol <= 0)
            throw Error("FlowSettings: tolerances must be positive");
        if (!(t_max > 0) || !std::isfinite(t_max))
            throw Error("FlowSettings: t_max must be finite and positive");
    }
};

struct BandEscapeError : NumericalError {
    using NumericalError::NumericalError;
};
struct NewtonError : NumericalError {
    using NumericalError::NumericalError;
};

// ---------------------------------------------------------------------------
// Right-hand side

/// xdot_n for all represented sites of a periodic state.
inline Vec rhs(const PeriodicConfiguration& c, const TiltedEnergy& E)
{
    Vec out(c.q);
    for (int n = 0; n < c.q; ++n) {
        double xm = c.site(n - 1), x = c.site(n), xp = c.site(n + 1);
        out[n] = -E.h.h2(xm, x) - E.h.h1(x, xp) + E.F;
    }
    return out;
}

/// xdot_n over the window sites; out-of-window neighbours clamp to the
/// declared asymptote values.
inline Vec rhs(const WindowConfiguration& w, const TiltedEnergy& E)
{
    const long long n0 = w.l, n1 = w.r();
    Vec out(w.values.size());
    for (long long n = n0; n <= n1; ++n) {
        double xm = (n - 1 < n0) ? w.left_asym.site(n - 1) : w.values[(std::size_t)(n - 1 - n0)];
        double x = w.values[(std::size_t)(n - n0)];
        double xp = (n + 1 > n1) ? w.right_asym.site(n + 1) : w.values[(std::size_t)(n + 1 - n0)];
        out[(std::size_t)(n - n0)] = -E.h.h2(xm, x) - E.h.h1(x, xp) + E.F;
    }
    return out;
}

/// Energy W_{p,q} = sum_{i=0}^{q-1} h_F(x_i, x_{i+1}) of one period.
inline double periodic_energy(const PeriodicConfiguration& c, const TiltedEnergy& E)
{
    double W = 0;
    for (int i = 0; i < c.q; ++i) W += E.eval(c.site(i), c.site(i + 1)).h;
    return W;
}

/// Hessian of W_{p,q} (cyclic symmetric matrix), equal to -d(xdot)/dx.
inline Mat periodic_hessian(const PeriodicConfiguration& c, const TiltedEnergy& E)
{
    const int q = c.q;
    Mat J(q, q, 0.0);
    for (int i = 0; i < q; ++i) {
        int ip = (i + 1) % q;
        HBundle b = E.eval(c.site(i), c.site(i + 1));
        J(i, i) += b.h11;
        J(ip, ip) += b.h22;
        J(i, ip) += b.h12;
        J(ip, i) += b.h12;
    }
    return J;
}

// ---------------------------------------------------------------------------
// Adaptive integrator (Bogacki-Shampine 3(2))

struct Trajectory {
    std::vector<double> t;
    std::vector<Vec> x;
};

namespace detail {

struct StepperState {
    Vec x;
    Vec k1;  // derivative at x (FSAL)
    double t = 0;
    double dt = 1e-3;
};

/// One adaptive BS23 step.  Returns true when the step was accepted; on
/// acceptance st.x/st.t/st.k1 hold the new state and its derivative.
template <class RhsFn>
bool bs23_step(StepperState& st, const RhsFn& f, double tol, double dt_max)
{
    const std::size_t n = st.x.size();
    static thread_local Vec y2, y3, ynew, k2, k3, k4;
    y2.assign(n, 0);
    y3.assign(n, 0);
    ynew.assign(n, 0);
    double dt = std::min(st.dt, dt_max);
    for (std::size_t i = 0; i < n; ++i) y2[i] = st.x[i] + 0.5 * dt * st.k1[i];
    k2 = f(y2);
    for (std::size_t i = 0; i < n; ++i) y3[i] = st.x[i] + 0.75 * dt * k2[i];
    k3 = f(y3);
    for (std::size_t i = 0; i < n; ++i)
        ynew[i] = st.x[i] + dt * (2 * st.k1[i] + 3 * k2[i] + 4 * k3[i]) / 9.0;
    k4 = f(ynew);
    double err = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double e = dt * (-5 * st.k1[i] / 72 + k2[i] / 12 + k3[i] / 9 - k4[i] / 8);
        err = std::max(err, std::fabs(e));
    }
    bool accept = err <= tol;
    double safety = 0.9 * std::pow(tol / std::max(err, 1e-300), 1.0 / 3.0);
    safety = std::min(4.0, std::max(0.2, safety));
    if (accept) {
        st.t += dt;
        st.x = ynew;
        st.k1 = k4;
    }
    st.dt = dt * safety;
    if (st.dt < 1e-15) throw NumericalError("integrate: step-size underflow");
    return accept;
}

/// Cubic Hermite dense output on the last accepted interval.
inline Vec hermite_eval(const Vec& x0, const Vec& f0, const Vec& x1, const Vec& f1, double h,
                        double theta)
{
    const std::size_t n = x0.size();
    Vec out(n);
    double a = 2 * theta * theta * theta - 3 * theta * theta + 1;
    double b = (theta * theta * theta - 2 * theta * theta + theta) * h;
    double c = -2 * theta * theta * theta + 3 * theta * theta;
    double d = (theta * theta * theta - theta * theta) * h;
    for (std::size_t i = 0; i < n; ++i) out[i] = a * x0[i] + b * f0[i] + c * x1[i] + d * f1[i];
    return out;
}

inline void check_band(const Vec& x, const Band& band, double lo_pad, double hi_pad)
{
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        double s = x[i + 1] - x[i];
        if (s < band.M - lo_pad || s > band.N + hi_pad)
            throw BandEscapeError("integrate: spacing " + std::to_string(s) +
                                  " escaped the band [" + std::to_string(band.M) + "," +
                                  std::to_string(band.N) + "]");
    }
}

}  // namespace detail

/// Integrate a periodic state to t_end, sampling about `samples` states.
inline Trajectory integrate(const PeriodicConfiguration& c0, const TiltedEnergy& E,
                            const FlowSettings& settings, double t_end, int samples = 200)
{
    settings.validate();
    if (t_end > settings.t_max) throw Error("integrate: t_end exceeds t_max");
    auto f = [&](const Vec& v) {
        PeriodicConfiguration tmp = c0;
        tmp.x = v;
        return rhs(tmp, E);
    };
    detail::StepperState st;
    st.x = c0.x;
    st.k1 = f(st.x);
    st.dt = settings.dt0;
    Trajectory traj;
    traj.t.push_back(0);
    traj.x.push_back(st.x);
    double sample_dt = t_end / std::max(1, samples);
    double next_sample = sample_dt;
    while (st.t < t_end) {
        Vec x_prev = st.x, f_prev = st.k1;
        double t_prev = st.t;
        if (!detail::bs23_step(st, f, settings.step_tol, t_end - st.t)) continue;
        // wrap spacing check over one period (includes the wrap bond)
        {
            Vec sp(st.x.begin(), st.x.end());
            sp.push_back(st.x[0] + c0.p);
            detail::check_band(sp, E.h.band(), 0.0, 0.0);
        }
        double h = st.t - t_prev;
        while (next_sample <= st.t + 1e-15 && next_sample <= t_end) {
            double theta = (next_sample - t_prev) / h;
            traj.t.push_back(next_sample);
            traj.x.push_back(detail::hermite_eval(x_prev, f_prev, st.x, st.k1, h, theta));
            next_sample += sample_dt;
        }
    }
    if (traj.t.back() < t_end - 1e-12) {
        traj.t.push_back(st.t);
        traj.x.push_back(st.x);
    }
    return traj;
}

/// Window variant: boundary neighbours clamp to the declared asymptotes.
inline Trajectory integrate(const WindowConfiguration& w0, const TiltedEnergy& E,
                            const FlowSettings& settings, double t_end, int samples = 200)
{
    settings.validate();
    if (t_end > settings.t_max) throw Error("integrate: t_end exceeds t_max");
    auto f = [&](const Vec& v) {
        WindowConfiguration tmp = w0;
        tmp.values = v;
        return rhs(tmp, E);
    };
    detail::StepperState st;
    st.x = w0.values;
    st.k1 = f(st.x);
    st.dt = settings.dt0;
    Trajectory traj;
    traj.t.push_back(0);
    traj.x.push_back(st.x);
    double sample_dt = t_end / std::max(1, samples);
    double next_sample = sample_dt;
    while (st.t < t_end) {
        Vec x_prev = st.x, f_prev = st.k1;
        double t_prev = st.t;
        if (!detail::bs23_step(st, f, settings.step_tol, t_end - st.t)) continue;
        detail::check_band(st.x, E.h.band(), 0.0, 0.0);
        double h = st.t - t_prev;
        while (next_sample <= st.t + 1e-15 && next_sample <= t_end) {
            double theta = (next_sample - t_prev) / h;
            traj.t.push_back(next_sample);
            traj.x.push_back(detail::hermite_eval(x_prev, f_prev, st.x, st.k1, h, theta));
            next_sample += sample_dt;
        }
    }
    if (traj.t.back() < t_end - 1e-12) {
        traj.t.push_back(st.t);
        traj.x.push_back(st.x);
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Equilibria

struct EquilibriumResult {
    PeriodicConfiguration state;
    double residual = 0;       // sup-norm of the equilibrium defect
    Vec hessian_spectrum;      // eigenvalues of D^2 W_{p,q}, ascending
    bool degenerate = false;   // |smallest eigenvalue| below degeneracy tol
    int iterations = 0;
};

/// Newton for the type-(p,q) equilibrium equation h2 + h1 = F with the cyclic
/// tridiagonal Hessian.  Throws NewtonError on divergence; a singular Hessian
/// at the solution is reported via `degenerate`, not as a failure.
inline EquilibriumResult find_equilibrium(const PeriodicConfiguration& x0, const TiltedEnergy& E,
                                          double tol = 1e-13, int max_iter = 60)
{
    PeriodicConfiguration c = x0;
    auto residual = [&](const PeriodicConfiguration& s) {
        Vec g = rhs(s, E);
        for (double& v : g) v = -v;  // G = grad W = -xdot
        return g;
    };
    Vec G = residual(c);
    double res = sup_norm(G);
    int it = 0;
    for (; it < max_iter && res > tol; ++it) {
        Mat J = periodic_hessian(c, E);
        Vec step;
        try {
            Vec mG(G);
            for (double& v : mG) v = -v;
            step = lu_solve(J, mG);
        } catch (const NumericalError&) {
            throw NewtonError("find_equilibrium: singular Hessian during iteration");
        }
        double lambda = 1.0;
        PeriodicConfiguration trial = c;
        for (int half = 0; half < 40; ++half) {
            for (int i = 0; i < c.q; ++i) trial.x[i] = c.x[i] + lambda * step[i];
            Vec Gt = residual(trial);
            double rt = sup_norm(Gt);
            if (rt < res || rt < tol) {
                c = trial;
                G = Gt;
                res = rt;
                break;
            }
            lambda *= 0.5;
            if (half == 39) throw NewtonError("find_equilibrium: line search failed");
        }
    }
    if (res > std::max(tol, 1e-12)) throw NewtonError("find_equilibrium: no convergence");
    EquilibriumResult out;
    out.state = c;
    out.residual = res;
    out.iterations = it;
    Mat H = periodic_hessian(c, E);
    out.hessian_spectrum = symmetric_eigenvalues(H);
    double scale = 0;
    for (double ev : out.hessian_spectrum) scale = std::max(scale, std::fabs(ev));
    double amin = std::numeric_limits<double>::infinity();
    for (double ev : out.hessian_spectrum) amin = std::min(amin, std::fabs(ev));
    out.degenerate = amin < 1e-8 * std::max(scale, 1e-30);
    return out;
}

// ---------------------------------------------------------------------------
// Classification

struct SlidingInfo {
    double T = 0;  // recurrence period, x(t0+T) = x(t0) + 1
    double v = 0;  // average velocity 1/T
    double recurrence_error = 0;
    double t0 = 0;  // time of the reference state
    std::vector<double> sample_t;    // samples over [t0, t0+T]
    std::vector<Vec> sample_x;
};

struct PinnedInfo {
    PeriodicConfiguration equilibrium;
    double residual = 0;
    Vec hessian_spectrum;
    bool degenerate = false;
};

struct UndeterminedInfo {
    double t_elapsed = 0;
    double final_residual = 0;
    double displacement = 0;
    std::string note;
};

struct VelocityVerdict {
    enum class Kind { Pinned, Sliding, Undetermined };
    Kind kind = Kind::Undetermined;
    std::optional<PinnedInfo> pinned;
    std::optional<SlidingInfo> sliding;
    std::optional<UndeterminedInfo> undetermined;
};

/// Long-time classification of the type-(p,q) dynamics at tilt E.F.
inline VelocityVerdict classify(const PeriodicConfiguration& x0, const TiltedEnergy& E,
                                const FlowSettings& settings = {})
{
    settings.validate();
    const int q = x0.q;
    auto f = [&](const Vec& v) {
        PeriodicConfiguration tmp = x0;
        tmp.x = v;
        return rhs(tmp, E);
    };
    auto try_newton = [&](const Vec& v) -> std::optional<PinnedInfo> {
        PeriodicConfiguration seed = x0;
        seed.x = v;
        try {
            EquilibriumResult eq = find_equilibrium(seed, E);
            PinnedInfo info;
            info.equilibrium = eq.state;
            info.residual = eq.residual;
            info.hessian_spectrum = eq.hessian_spectrum;
            info.degenerate = eq.degenerate;
            return info;
        } catch (const NewtonError&) {
            return std::nullopt;
        }
    };

    detail::StepperState st;
    st.x = x0.x;
    st.k1 = f(st.x);
    st.dt = settings.dt0;

    Vec x_ref = st.x;
    double t_ref = 0;
    int advances = 0;
    double next_newton_probe = 0;

    auto mean_excess = [&](const Vec& v) {
        double s = 0;
        for (int i = 0; i < q; ++i) s += v[i] - x_ref[i];
        return s / q - 1.0;
    };

    while (st.t < settings.t_max) {
        if (sup_norm(st.k1) < settings.eq_tol) {
            if (auto p = try_newton(st.x)) {
                VelocityVerdict v;
                v.kind = VelocityVerdict::Kind::Pinned;
                v.pinned = std::move(*p);
                return v;
            }
        }
        if (settings.newton_shortcut && st.t >= next_newton_probe) {
            next_newton_probe = st.t + std::max(1.0, settings.t_max / 64);
            if (auto p = try_newton(st.x)) {
                VelocityVerdict v;
                v.kind = VelocityVerdict::Kind::Pinned;
                v.pinned = std::move(*p);
                return v;
            }
        }
        Vec x_prev = st.x, f_prev = st.k1;
        double t_prev = st.t;
        if (!detail::bs23_step(st, f, settings.step_tol, settings.t_max - st.t)) continue;
        {
            Vec sp(st.x.begin(), st.x.end());
            sp.push_back(st.x[0] + x0.p);
            detail::check_band(sp, E.h.band(), 0.0, 0.0);
        }
        if (mean_excess(st.x) >= 0) {
            // locate mean displacement exactly 1 above the reference state
            double h = st.t - t_prev;
            double lo = 0, hi = 1;
            Vec cand = st.x;
            double tc = st.t;
            if (mean_excess(x_prev) < 0) {
                for (int it = 0; it < 80; ++it) {
                    double mid = 0.5 * (lo + hi);
                    Vec xm = detail::hermite_eval(x_prev, f_prev, st.x, st.k1, h, mid);
                    if (mean_excess(xm) < 0)
                        lo = mid;
                    else
                        hi = mid;
                }
                cand = detail::hermite_eval(x_prev, f_prev, st.x, st.k1, h, hi);
                tc = t_prev + hi * h;
            }
            double d = 0;
            for (int i = 0; i < q; ++i) d = std::max(d, std::fabs(cand[i] - x_ref[i] - 1.0));
            if (advances >= 1 && d < settings.recur_tol) {
                SlidingInfo s;
                s.T = tc - t_ref;
                s.v = 1.0 / s.T;
                s.recurrence_error = d;
                s.t0 = t_ref;
                // re-run one period from the reference state for hull samples
                PeriodicConfiguration ref = x0;
                ref.x = x_ref;
                FlowSettings ss = settings;
                ss.t_max = std::max(ss.t_max, s.T * 1.01);
                Trajectory period = integrate(ref, E, ss, s.T, settings.hull_samples);
                s.sample_t = period.t;
                s.sample_x = period.x;
                VelocityVerdict v;
                v.kind = VelocityVerdict::Kind::Sliding;
                v.sliding = std::move(s);
                return v;
            }
            x_ref = cand;
            t_ref = tc;
            ++advances;
            if (advances > settings.max_advances) break;
        }
    }
    VelocityVerdict v;
    v.kind = VelocityVerdict::Kind::Undetermined;
    UndeterminedInfo u;
    u.t_elapsed = st.t;
    u.final_residual = sup_norm(st.k1);
    double disp = 0;
    for (int i = 0; i < q; ++i) disp += st.x[i] - x0.x[i];
    u.displacement = disp / q;
    u.note = (advances > settings.max_advances)
                 ? "advances exhausted without recurrence"
                 : "time budget exhausted without verdict";
    v.undetermined = std::move(u);
    return v;
}

// ---------------------------------------------------------------------------
// Depinning force

enum class DepinningMethod { Bisection, Continuation, CrossValidated };

struct DepinningResult {
    int p = 0, q = 1;
    double F_lo = 0, F_hi = 0, F_d = 0;
    std::string method;
    std::optional<PeriodicConfiguration> fold_state;
    bool resolved = true;  // false when an Undetermined verdict forced a wide bracket
    std::string note;
};

namespace detail {

inline double tilt_scale(const GeneratingFunction& gf, int p, int q)
{
    // bound on |h2(x_{n-1},x_n)+h1(x_n,x_{n+1})| along rigid states; tilts
    // beyond roughly this cannot be balanced by any equilibrium
    double m = 0;
    for (int i = 0; i < 256; ++i) {
        double x = double(i) / 256;
        double w = double(p) / q;
        HBundle a = gf.eval(x - w, x), b = gf.eval(x, x + w);
        m = std::max(m, std::fabs(a.h2 + b.h1));
    }
    return m + 1e-6;
}

inline VelocityVerdict classify_escalating(const PeriodicConfiguration& seed, const TiltedEnergy& E,
                                           FlowSettings s, int levels = 3)
{
    for (int l = 0; l < levels; ++l) {
        VelocityVerdict v = classify(seed, E, s);
        if (v.kind != VelocityVerdict::Kind::Undetermined) return v;
        s.t_max *= 4;
        s.max_advances *= 2;
    }
    return classify(seed, E, s);
}

}  // namespace detail

inline DepinningResult depinning_force_bisection(int p, int q, const GeneratingFunction& gf,
                                                 double tol_F, FlowSettings settings = {})
{
    if (tol_F <= 0) throw Error("depinning_force: tol_F must be positive");
    DepinningResult out;
    out.p = p;
    out.q = q;
    out.method = "bisection";
    const double cap = 2 * detail::tilt_scale(gf, p, q) + 1;

    PeriodicConfiguration seed = PeriodicConfiguration::rigid(p, q, 0.25);
    auto verdict_at = [&](double F) {
        return detail::classify_escalating(seed, TiltedEnergy(gf, F), settings);
    };

    // grow an upper bracket
    double F_lo = 0.0, F_hi = -1;
    double Ft = std::max(8 * tol_F, cap / 16);
    while (Ft <= cap) {
        VelocityVerdict v = verdict_at(Ft);
        if (v.kind == VelocityVerdict::Kind::Pinned) {
            F_lo = Ft;
            seed = v.pinned->equilibrium;  // warm start
            Ft *= 2;
        } else if (v.kind == VelocityVerdict::Kind::Sliding) {
            F_hi = Ft;
            break;
        } else {
            out.resolved = false;
            out.note = "undetermined verdict while growing bracket at F=" + std::to_string(Ft);
            break;
        }
    }
    if (F_hi < 0 && out.resolved) {
        // never found sliding below the cap: treat the cap as sliding bound
        F_hi = cap;
        out.note = "upper bracket capped";
    }
    if (F_hi < 0) F_hi = cap;

    while (out.resolved && F_hi - F_lo > tol_F) {
        double mid = 0.5 * (F_lo + F_hi);
        VelocityVerdict v = verdict_at(mid);
        if (v.kind == VelocityVerdict::Kind::Pinned) {
            F_lo = mid;
            seed = v.pinned->equilibrium;
        } else if (v.kind == VelocityVerdict::Kind::Sliding) {
            F_hi = mid;
        } else {
            out.resolved = false;
            out.note = "undetermined verdict at F=" + std::to_string(mid) +
                       "; reporting the remaining uncertainty interval";
        }
    }
    out.F_lo = F_lo;
    out.F_hi = F_hi;
    out.F_d = 0.5 * (F_lo + F_hi);
    return out;
}

inline DepinningResult depinning_force_continuation(int p, int q, const GeneratingFunction& gf,
                                                    double tol_F, FlowSettings settings = {})
{
    if (tol_F <= 0) throw Error("depinning_force: tol_F must be positive");
    DepinningResult out;
    out.p = p;
    out.q = q;
    out.method = "continuation";

    // starting equilibrium at F=0: relax rigid states, keep the most stable.
    // Phases must sample one slow period 1/q (phases j/q are mere relabelings
    // of each other), offset to break the lattice symmetry.
    std::optional<EquilibriumResult> start;
    TiltedEnergy E0(gf, 0.0);
    for (int s = 0; s < 6; ++s) {
        PeriodicConfiguration c = PeriodicConfiguration::rigid(p, q, (s + 0.37) / (6.0 * q));
        try {
            FlowSettings fs = settings;
            fs.t_max = 500;
            fs.step_tol = 1e-9;
            Trajectory tr = integrate(c, E0, fs, 200.0, 2);
            c.x = tr.x.back();
            EquilibriumResult eq = find_equilibrium(c, E0);
            if (!start || eq.hessian_spectrum[0] > start->hessian_spectrum[0]) start = eq;
        } catch (const NumericalError&) {
            continue;
        }
    }
    if (!start) throw NewtonError("continuation: no starting equilibrium at F=0");
    double scale = std::fabs(start->hessian_spectrum.back());
    if (start->hessian_spectrum[0] < -1e-9 * std::max(scale, 1.0))
        throw NewtonError("continuation: starting equilibrium is not a minimizer");

    const int n = q;
    Vec x = start->state.x;
    double F = 0;
    auto eval_G = [&](const Vec& xv, double Fv) {
        PeriodicConfiguration c(p, q, xv);
        Vec g = rhs(c, TiltedEnergy(gf, std::max(0.0, Fv)));
        for (double& v : g) v = -v;
        // rhs clamps negative F to 0 via TiltedEnergy; keep the algebraic form
        if (Fv < 0)
            for (int i = 0; i < q; ++i) g[i] -= Fv;
        return g;
    };
    auto eval_J = [&](const Vec& xv, double Fv) {
        PeriodicConfiguration c(p, q, xv);
        return periodic_hessian(c, TiltedEnergy(gf, std::max(0.0, Fv)));
    };
    auto lambda_min = [&](const Vec& xv, double Fv) {
        Mat J = eval_J(xv, Fv);
        return symmetric_eigenvalues(J)[0];
    };

    // tangent at the start: dx/dF solves J dx = 1
    Vec tx;
    double tF;
    {
        Mat J = eval_J(x, F);
        Vec one(n, 1.0);
        Vec w = lu_solve(J, one);
        double nrm = std::sqrt(1.0 + std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
        tx = w;
        for (double& v : tx) v /= nrm;
        tF = 1.0 / nrm;
    }

    auto corrector = [&](Vec& xv, double& Fv, const Vec& txv, double tFv, const Vec& x_pred,
                         double F_pred) -> bool {
        for (int it = 0; it < 30; ++it) {
            Vec G = eval_G(xv, Fv);
            double Nres = tFv * (Fv - F_pred);
            for (int i = 0; i < n; ++i) Nres += txv[i] * (xv[i] - x_pred[i]);
            double res = std::max(sup_norm(G), std::fabs(Nres));
            if (res < 1e-12) return true;
            Mat A(n + 1, n + 1, 0.0);
            Mat J = eval_J(xv, Fv);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) A(i, j) = J(i, j);
                A(i, n) = -1.0;  // dG/dF
                A(n, i) = txv[i];
            }
            A(n, n) = tFv;
            Vec b(n + 1);
            for (int i = 0; i < n; ++i) b[i] = -G[i];
            b[n] = -Nres;
            Vec d;
            try {
                d = lu_solve(A, b);
            } catch (const NumericalError&) {
                return false;
            }
            for (int i = 0; i < n; ++i) xv[i] += d[i];
            Fv += d[n];
        }
        return false;
    };

    double ds = 0.05 * (1 + std::fabs(start->hessian_spectrum[0]));
    double lam_prev = start->hessian_spectrum[0];
    double F_max_seen = 0;
    int steps = 0;
    const int max_steps = 20000;
    while (steps++ < max_steps) {
        Vec x_pred(n);
        for (int i = 0; i < n; ++i) x_pred[i] = x[i] + ds * tx[i];
        double F_pred = F + ds * tF;
        Vec x_new = x_pred;
        double F_new = F_pred;
        if (!corrector(x_new, F_new, tx, tF, x_pred, F_pred)) {
            ds *= 0.4;
            if (ds < 1e-14) throw NewtonError("continuation: step size underflow");
            continue;
        }
        double lam = lambda_min(x_new, F_new);
        if (lam_prev > 0 && lam <= 0) {
            // fold bracketed between (x,F) and (x_new,F_new): secant on the
            // smallest eigenvalue as a function of arclength
            Vec xa = x, xb = x_new;
            double Fa = F, Fb = F_new, la = lam_prev, lb = lam;
            for (int it = 0; it < 80; ++it) {
                double w = la / (la - lb);
                w = std::min(0.95, std::max(0.05, w));
                Vec xm(n);
                for (int i = 0; i < n; ++i) xm[i] = xa[i] + w * (xb[i] - xa[i]);
                double Fm = Fa + w * (Fb - Fa);
                Vec xg = xm;
                double Fg = Fm;
                if (!corrector(xg, Fg, tx, tF, xm, Fm)) break;
                double lm = lambda_min(xg, Fg);
                if (std::fabs(lm) < 1e-11 * (1 + std::fabs(la))) {
                    xa = xg;
                    Fa = Fg;
                    la = lm;
                    break;
                }
                if ((lm > 0) == (la > 0)) {
                    xa = xg;
                    Fa = Fg;
                    la = lm;
                } else {
                    xb = xg;
                    Fb = Fg;
                    lb = lm;
                }
                if (std::fabs(Fb - Fa) < std::min(tol_F * 1e-3, 1e-12) && it > 4) break;
            }
            double F_fold = (std::fabs(la) < std::fabs(lb)) ? Fa : Fb;
            out.F_d = F_fold;
            out.F_lo = F_fold - 0.45 * tol_F;
            out.F_hi = F_fold + 0.45 * tol_F;
            out.fold_state = PeriodicConfiguration(p, q, std::fabs(la) < std::fabs(lb) ? xa : xb);
            return out;
        }
        // tangent update by secant direction
        Vec tx_new(n);
        double tF_new;
        {
            double nrm = 0;
            for (int i = 0; i < n; ++i) {
                tx_new[i] = x_new[i] - x[i];
                nrm += tx_new[i] * tx_new[i];
            }
            tF_new = F_new - F;
            nrm = std::sqrt(nrm + tF_new * tF_new);
            if (nrm == 0) nrm = 1;
            for (double& v : tx_new) v /= nrm;
            tF_new /= nrm;
        }
        x = x_new;
        F = F_new;
        tx = tx_new;
        tF = tF_new;
        lam_prev = lam;
        F_max_seen = std::max(F_max_seen, F);
        ds = std::min(ds * 1.3, 0.25);
        if (F < F_max_seen - 1)
            throw NewtonError("continuation: branch left the fold region without detection");
    }
    throw NewtonError("continuation: no fold found within the step budget");
}

inline DepinningResult depinning_force(int p, int q, const GeneratingFunction& gf,
                                       DepinningMethod method, double tol_F,
                                       FlowSettings settings = {})
{
    switch (method) {
        case DepinningMethod::Bisection:
            return depinning_force_bisection(p, q, gf, tol_F, settings);
        case DepinningMethod::Continuation:
            return depinning_force_continuation(p, q, gf, tol_F, settings);
        case DepinningMethod::CrossValidated: {
            DepinningResult a = depinning_force_bisection(p, q, gf, tol_F, settings);
            DepinningResult b = depinning_force_continuation(p, q, gf, tol_F, settings);
            if (std::fabs(a.F_d - b.F_d) > 5 * tol_F)
                throw NumericalError("depinning_force: bisection and continuation disagree: " +
                                     std::to_string(a.F_d) + " vs " + std::to_string(b.F_d));
            DepinningResult out = b;
            out.method = "cross-validated";
            out.note = "bisection gave " + std::to_string(a.F_d);
            return out;
        }
    }
    throw Error("depinning_force: unknown method");
}

// ---------------------------------------------------------------------------
// Hull function

struct HullTable {
    std::vector<double> alpha;  // phases in [0,1)
    std::vector<double> value;  // X(alpha)
    double max_monotonicity_violation = 0;
    double wrap_defect = 0;  // X(alpha+1) - X(alpha) - 1 at the seam
    bool monotone_ok = true;
};

/// Build the dynamical hull function table from a Sliding verdict.
inline HullTable extract_hull(const VelocityVerdict& verdict, double omega,
                              double recur_tol = 1e-8)
{
    if (verdict.kind != VelocityVerdict::Kind::Sliding || !verdict.sliding)
        throw Error("extract_hull: verdict is not Sliding");
    const SlidingInfo& s = *verdict.sliding;
    const double v = s.v;
    std::vector<std::pair<double, double>> entries;
    for (std::size_t j = 0; j < s.sample_t.size(); ++j) {
        double t = s.sample_t[j];
        const Vec& x = s.sample_x[j];
        for (std::size_t n = 0; n < x.size(); ++n) {
            double raw = double(n) * omega + v * t;
            double fl = std::floor(raw);
            entries.emplace_back(raw - fl, x[n] - fl);
        }
    }
    std::sort(entries.begin(), entries.end());
    HullTable tab;
    for (auto& [a, val] : entries) {
        tab.alpha.push_back(a);
        tab.value.push_back(val);
    }
    for (std::size_t i = 0; i + 1 < tab.value.size(); ++i)
        tab.max_monotonicity_violation =
            std::max(tab.max_monotonicity_violation, tab.value[i] - tab.value[i + 1]);
    // the wrap X(alpha+1) = X(alpha)+1 reduces to monotone continuation of the
    // table across the seam
    if (!tab.value.empty())
        tab.wrap_defect = std::max(0.0, tab.value.back() - (tab.value.front() + 1));
    tab.monotone_ok = tab.max_monotonicity_violation <= recur_tol;
    return tab;
}

}  // namespace fk
