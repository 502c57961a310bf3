#pragma once

// Nearest-neighbour generating functions h(x,x') for tilted chains, their
// derivative bundles, the builtin catalog, and the band modification that
// bounds second derivatives outside a spacing band.

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>

#include "fk/common.hpp"

namespace fk {

/// Value and derivatives of h at one point.
struct HBundle {
    double h = 0, h1 = 0, h2 = 0, h11 = 0, h12 = 0, h22 = 0;
};

struct Band {
    int M = -3;
    int N = 4;
};

/// Type-erased generating function.  Immutable after construction; kernels
/// must be re-entrant.
class GeneratingFunction {
public:
    using Kernel = std::function<HBundle(double, double)>;

    GeneratingFunction() = default;
    GeneratingFunction(std::string name, Kernel kernel, double c, Band band,
                       bool fd_derivatives = false,
                       std::map<std::string, double> params = {})
        : name_(std::move(name)),
          kernel_(std::move(kernel)),
          c_(c),
          band_(band),
          fd_derivatives_(fd_derivatives),
          params_(std::move(params))
    {
        if (c_ <= 0) throw ModelError("GeneratingFunction: mixed-derivative bound c must be positive");
        if (band_.M >= band_.N) throw ModelError("GeneratingFunction: band requires M < N");
    }

    HBundle eval(double x, double xp) const
    {
        HBundle b = kernel_(x, xp);
        if (!std::isfinite(b.h) || !std::isfinite(b.h1) || !std::isfinite(b.h2) ||
            !std::isfinite(b.h11) || !std::isfinite(b.h12) || !std::isfinite(b.h22))
            throw ModelError("GeneratingFunction '" + name_ + "': non-finite value at (" +
                             std::to_string(x) + "," + std::to_string(xp) + ")");
        return b;
    }

    double h(double x, double xp) const { return eval(x, xp).h; }
    double h1(double x, double xp) const { return eval(x, xp).h1; }
    double h2(double x, double xp) const { return eval(x, xp).h2; }
    double h12(double x, double xp) const { return eval(x, xp).h12; }

    const std::string& name() const { return name_; }
    double c() const { return c_; }
    const Band& band() const { return band_; }
    bool uses_fd_derivatives() const { return fd_derivatives_; }
    const std::map<std::string, double>& params() const { return params_; }

    /// sup of |h12| over the band, sampled; the gluing-residual constant.
    double h12_sup_on_band(int samples = 400) const
    {
        double m = 0;
        for (int i = 0; i < samples; ++i) {
            double x = double(i) / samples;
            for (int j = 0; j <= samples / 10; ++j) {
                double s = band_.M + (band_.N - band_.M) * double(j) / (samples / 10);
                m = std::max(m, std::fabs(eval(x, x + s).h12));
            }
        }
        return m;
    }

private:
    std::string name_ = "unset";
    Kernel kernel_;
    double c_ = 1;
    Band band_;
    bool fd_derivatives_ = false;
    std::map<std::string, double> params_;
};

/// h_F(x,x') = h(x,x') - F x.
struct TiltedEnergy {
    GeneratingFunction h;
    double F = 0;

    TiltedEnergy() = default;
    TiltedEnergy(GeneratingFunction base, double tilt) : h(std::move(base)), F(tilt)
    {
        if (F < 0) throw ModelError("TiltedEnergy: tilt must be nonnegative (reverse signs of x instead)");
    }

    HBundle eval(double x, double xp) const
    {
        HBundle b = h.eval(x, xp);
        b.h -= F * x;
        b.h1 -= F;
        return b;
    }

    TiltedEnergy with_tilt(double tilt) const { return TiltedEnergy(h, tilt); }
};

// ---------------------------------------------------------------------------
// Builtin catalog

enum class BuiltinKind { StandardFK, DoubleWell, Bistable, Mane };

struct BuiltinSpec {
    BuiltinKind kind = BuiltinKind::StandardFK;
    std::map<std::string, double> params;

    static BuiltinSpec standard_fk(double k)
    {
        return {BuiltinKind::StandardFK, {{"k", k}}};
    }
    static BuiltinSpec double_well(double k, double b)
    {
        return {BuiltinKind::DoubleWell, {{"k", k}, {"b", b}}};
    }
    static BuiltinSpec bistable(double k, double a1, double a2, double a3)
    {
        return {BuiltinKind::Bistable, {{"k", k}, {"A1", a1}, {"A2", a2}, {"A3", a3}}};
    }
    /// Bistable with the default two-well potential (left well shallower, so a
    /// positive tilt can level the right well with the left one's translate).
    static BuiltinSpec bistable(double k)
    {
        return bistable(k, -1.0 / (4 * M_PI * M_PI), 1.0 / (8 * M_PI * M_PI), 0.006);
    }
    static BuiltinSpec mane()
    {
        return {BuiltinKind::Mane,
                {{"a1", 0.25}, {"b", 0.5}, {"a2", 0.75}, {"depth", 0.1}, {"rise", 0.1}}};
    }

    double param(const std::string& key) const
    {
        auto it = params.find(key);
        if (it == params.end()) throw ModelError("BuiltinSpec: missing parameter '" + key + "'");
        return it->second;
    }
};

namespace detail {

// Quintic Hermite segment with zero end curvatures; keeps the interpolant C2
// across knots.
struct QuinticSeg {
    double x0, x1, y0, y1, m0, m1;

    double value(double x) const
    {
        double dx = x1 - x0, t = (x - x0) / dx;
        double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
        double H0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
        double H1 = t - 6 * t3 + 8 * t4 - 3 * t5;
        double H3 = 10 * t3 - 15 * t4 + 6 * t5;
        double H4 = -4 * t3 + 7 * t4 - 3 * t5;
        return y0 * H0 + dx * m0 * H1 + y1 * H3 + dx * m1 * H4;
    }
    double deriv(double x) const
    {
        double dx = x1 - x0, t = (x - x0) / dx;
        double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
        double dH0 = -30 * t2 + 60 * t3 - 30 * t4;
        double dH1 = 1 - 18 * t2 + 32 * t3 - 15 * t4;
        double dH3 = 30 * t2 - 60 * t3 + 30 * t4;
        double dH4 = -12 * t2 + 28 * t3 - 15 * t4;
        return (y0 * dH0 + y1 * dH3) / dx + m0 * dH1 + m1 * dH4;
    }
    double deriv2(double x) const
    {
        double dx = x1 - x0, t = (x - x0) / dx;
        double t2 = t * t, t3 = t2 * t;
        double d2H0 = -60 * t + 180 * t2 - 120 * t3;
        double d2H1 = -36 * t + 96 * t2 - 60 * t3;
        double d2H3 = 60 * t - 180 * t2 + 120 * t3;
        double d2H4 = -24 * t + 84 * t2 - 60 * t3;
        return (y0 * d2H0 + y1 * d2H3) / (dx * dx) + (m0 * d2H1 + m1 * d2H4) / dx;
    }
};

/// Piecewise lift g(x) = x + f(x) of a degree-one circle map with fixed
/// points 0 and b, f = -x/2 near the integer lattice, minimum -depth at a1,
/// maximum +rise at a2.
class CircleLift {
public:
    CircleLift(double a1, double b, double a2, double depth, double rise)
        : a1_(a1), b_(b), a2_(a2)
    {
        if (!(0 < a1 && a1 < b && b < a2 && a2 < 1))
            throw ModelError("mane: need 0 < a1 < b < a2 < 1");
        if (depth <= a1 / 4)
            throw ModelError("mane: depth must exceed a1/4 so f keeps decreasing past the linear piece");
        if (rise <= (1 - a2) / 4)
            throw ModelError("mane: rise must exceed (1-a2)/4");
        double mb = 1.5 * std::min(depth / (b - a1), rise / (a2 - b));
        segs_[0] = {a1 / 2, a1, -a1 / 4, -depth, -0.5, 0.0};
        segs_[1] = {a1, b, -depth, 0.0, 0.0, mb};
        segs_[2] = {b, a2, 0.0, rise, mb, 0.0};
        segs_[3] = {a2, (1 + a2) / 2, rise, (1 - a2) / 4, 0.0, -0.5};

        // g must stay an increasing diffeomorphism; measure min g' densely.
        double mn = 10;
        for (int i = 0; i <= 20000; ++i) {
            double x = double(i) / 20000;
            mn = std::min(mn, 1.0 + f_deriv(x));
        }
        if (mn < 0.45)
            throw ModelError("mane: non-monotone g (min g' = " + std::to_string(mn) + ")");
        min_gp_ = mn;
    }

    double f(double xr) const
    {
        double x = xr - std::floor(xr);
        if (x <= a1_ / 2) return -x / 2;
        if (x >= (1 + a2_) / 2) return (1 - x) / 2;
        for (const auto& s : segs_)
            if (x <= s.x1) return s.value(x);
        return 0;
    }
    double f_deriv(double xr) const
    {
        double x = xr - std::floor(xr);
        if (x <= a1_ / 2 || x >= (1 + a2_) / 2) return -0.5;
        for (const auto& s : segs_)
            if (x <= s.x1) return s.deriv(x);
        return 0;
    }
    double f_deriv2(double xr) const
    {
        double x = xr - std::floor(xr);
        if (x <= a1_ / 2 || x >= (1 + a2_) / 2) return 0.0;
        for (const auto& s : segs_)
            if (x <= s.x1) return s.deriv2(x);
        return 0;
    }

    double g(double x) const { return x + f(x); }
    double g_deriv(double x) const { return 1 + f_deriv(x); }
    double g_deriv2(double x) const { return f_deriv2(x); }
    double min_g_deriv() const { return min_gp_; }
    double fixed_point_b() const { return b_; }

private:
    double a1_, b_, a2_;
    double min_gp_ = 0.5;
    QuinticSeg segs_[4];
};

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double fa, double fm, double fb, double tol, int depth)
{
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double whole = (b - a) / 6 * (fa + 4 * fm + fb);
    double left = (m - a) / 6 * (fa + 4 * flm + fm);
    double right = (b - m) / 6 * (fm + 4 * frm + fb);
    double err = left + right - whole;
    if (depth <= 0 || std::fabs(err) < 15 * tol) return left + right + err / 15;
    return adaptive_simpson(f, a, m, fa, flm, fm, tol / 2, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, tol / 2, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-13)
{
    if (a == b) return 0;
    double m = 0.5 * (a + b);
    return adaptive_simpson(f, a, b, f(a), f(m), f(b), tol, 40);
}

}  // namespace detail

inline GeneratingFunction make_builtin(const BuiltinSpec& spec)
{
    switch (spec.kind) {
        case BuiltinKind::StandardFK: {
            double k = spec.param("k");
            if (k < 0) throw ModelError("standard_fk: k must be nonnegative");
            auto kernel = [k](double x, double xp) {
                HBundle b;
                double d = xp - x;
                double s = std::sin(two_pi * x), c = std::cos(two_pi * x);
                b.h = 0.5 * d * d + k / (4 * M_PI * M_PI) * c;
                b.h1 = -d - k / two_pi * s;
                b.h2 = d;
                b.h11 = 1 - k * c;
                b.h12 = -1;
                b.h22 = 1;
                return b;
            };
            return GeneratingFunction("standard_fk", kernel, 1.0, Band{-3, 4}, false, spec.params);
        }
        case BuiltinKind::DoubleWell: {
            double k = spec.param("k"), bw = spec.param("b");
            if (bw <= 1) throw ModelError("double_well: requires b > 1");
            if (k <= 0) throw ModelError("double_well: requires k > 0");
            auto kernel = [k, bw](double x, double xp) {
                HBundle b;
                double d = xp - x;
                double s1 = std::sin(two_pi * x), c1 = std::cos(two_pi * x);
                double s2 = std::sin(2 * two_pi * x), c2 = std::cos(2 * two_pi * x);
                double V = -c1 / (4 * M_PI * M_PI) + bw * c2 / (16 * M_PI * M_PI);
                double Vp = s1 / two_pi - bw * s2 / (2 * two_pi);
                double Vpp = c1 - bw * c2;
                b.h = 0.5 * k * d * d + V;
                b.h1 = -k * d + Vp;
                b.h2 = k * d;
                b.h11 = k + Vpp;
                b.h12 = -k;
                b.h22 = k;
                return b;
            };
            return GeneratingFunction("double_well", kernel, k, Band{-3, 4}, false, spec.params);
        }
        case BuiltinKind::Bistable: {
            double k = spec.param("k");
            double A1 = spec.param("A1"), A2 = spec.param("A2"), A3 = spec.param("A3");
            if (k <= 0) throw ModelError("bistable: requires k > 0");
            auto kernel = [k, A1, A2, A3](double x, double xp) {
                HBundle b;
                double d = xp - x;
                double s1 = std::sin(two_pi * x), c1 = std::cos(two_pi * x);
                double s2 = std::sin(2 * two_pi * x), c2 = std::cos(2 * two_pi * x);
                double V = A1 * c1 + A2 * c2 + A3 * s1;
                double Vp = two_pi * (-A1 * s1 - 2 * A2 * s2 + A3 * c1);
                double Vpp = two_pi * two_pi * (-A1 * c1 - 4 * A2 * c2 - A3 * s1);
                b.h = 0.5 * k * d * d + V;
                b.h1 = -k * d + Vp;
                b.h2 = k * d;
                b.h11 = k + Vpp;
                b.h12 = -k;
                b.h22 = k;
                return b;
            };
            return GeneratingFunction("bistable", kernel, k, Band{-3, 4}, false, spec.params);
        }
        case BuiltinKind::Mane: {
            auto lift = std::make_shared<detail::CircleLift>(
                spec.param("a1"), spec.param("b"), spec.param("a2"), spec.param("depth"),
                spec.param("rise"));
            auto kernel = [lift](double x, double xp) {
                HBundle b;
                double g = lift->g(x), gp = lift->g_deriv(x), gpp = lift->g_deriv2(x);
                double r = xp - g;
                b.h = 0.5 * r * r;
                b.h1 = -gp * r;
                b.h2 = r;
                b.h11 = gp * gp - gpp * r;
                b.h12 = -gp;
                b.h22 = 1;
                return b;
            };
            double c = lift->min_g_deriv() * (1 - 1e-12);
            return GeneratingFunction("mane", kernel, c, Band{-2, 2}, false, spec.params);
        }
    }
    throw ModelError("make_builtin: unknown kind");
}

/// The reversed energy h~(x,x') = h(x',x); swaps advancing and retreating
/// roles and maps type p/q- questions onto (-p)/q+ ones.
inline GeneratingFunction reversed(const GeneratingFunction& gf)
{
    GeneratingFunction base = gf;
    auto kernel = [base](double x, double xp) {
        HBundle b = base.eval(xp, x);
        std::swap(b.h1, b.h2);
        std::swap(b.h11, b.h22);
        return b;
    };
    Band rb{-gf.band().N, -gf.band().M};
    return GeneratingFunction(gf.name() + "_reversed", kernel, gf.c(), rb,
                              gf.uses_fd_derivatives(), gf.params());
}

/// Wrap a plain h(x,x') with finite-difference derivatives (step 1e-5).
inline GeneratingFunction from_plain_h(std::string name,
                                       std::function<double(double, double)> h, double c,
                                       Band band)
{
    const double d = 1e-5;
    auto kernel = [h, d](double x, double xp) {
        HBundle b;
        b.h = h(x, xp);
        b.h1 = (h(x + d, xp) - h(x - d, xp)) / (2 * d);
        b.h2 = (h(x, xp + d) - h(x, xp - d)) / (2 * d);
        b.h11 = (h(x + d, xp) - 2 * b.h + h(x - d, xp)) / (d * d);
        b.h22 = (h(x, xp + d) - 2 * b.h + h(x, xp - d)) / (d * d);
        b.h12 = (h(x + d, xp + d) - h(x + d, xp - d) - h(x - d, xp + d) + h(x - d, xp - d)) /
                (4 * d * d);
        return b;
    };
    return GeneratingFunction(std::move(name), kernel, c, band, true);
}

// ---------------------------------------------------------------------------
// Property verification

struct ModelReport {
    double max_periodicity_violation = 0;  // |h(x+1,x'+1) - h(x,x')|
    double min_minus_h12_on_band = 0;      // min of -h12 over the band
    double max_first_derivative_fd_error = 0;
    double max_second_derivative_fd_error = 0;
    bool fd_derivatives = false;
    bool twist_ok = false;  // min_minus_h12_on_band >= c
};

inline ModelReport verify_properties(const GeneratingFunction& gf, int samples = 1000)
{
    if (samples < 1) throw ModelError("verify_properties: samples >= 1 required");
    ModelReport rep;
    rep.fd_derivatives = gf.uses_fd_derivatives();
    Rng rng(20240517);
    const Band band = gf.band();
    double minus_h12_min = std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        double x = rng.uniform(-2, 2);
        double s = rng.uniform(band.M, band.N);
        double xp = x + s;
        HBundle b = gf.eval(x, xp);
        rep.max_periodicity_violation =
            std::max(rep.max_periodicity_violation, std::fabs(gf.h(x + 1, xp + 1) - b.h));
        minus_h12_min = std::min(minus_h12_min, -b.h12);

        const double d = 1e-5;
        double fd1 = (gf.h(x + d, xp) - gf.h(x - d, xp)) / (2 * d);
        double fd2 = (gf.h(x, xp + d) - gf.h(x, xp - d)) / (2 * d);
        rep.max_first_derivative_fd_error = std::max(
            {rep.max_first_derivative_fd_error, std::fabs(fd1 - b.h1), std::fabs(fd2 - b.h2)});

        const double d2 = 1e-4;
        double fd11 = (gf.h(x + d2, xp) - 2 * b.h + gf.h(x - d2, xp)) / (d2 * d2);
        double fd22 = (gf.h(x, xp + d2) - 2 * b.h + gf.h(x, xp - d2)) / (d2 * d2);
        double fd12 = (gf.h(x + d2, xp + d2) - gf.h(x + d2, xp - d2) - gf.h(x - d2, xp + d2) +
                       gf.h(x - d2, xp - d2)) /
                      (4 * d2 * d2);
        rep.max_second_derivative_fd_error =
            std::max({rep.max_second_derivative_fd_error, std::fabs(fd11 - b.h11),
                      std::fabs(fd22 - b.h22), std::fabs(fd12 - b.h12)});
    }
    rep.min_minus_h12_on_band = minus_h12_min;
    rep.twist_ok = minus_h12_min >= gf.c() * (1 - 1e-9);
    return rep;
}

// ---------------------------------------------------------------------------
// Band modification (bounded second derivative outside [M,N])

/// C2 extension of h outside the spacing band [M,N]; equals h (value and first
/// derivatives) on the band, keeps h12 <= -c everywhere, and has bounded
/// second derivatives.
inline GeneratingFunction modify_band(const GeneratingFunction& gf, int M, int N)
{
    if (M >= N) throw ModelError("modify_band: requires M < N");
    struct Side {
        // traces of h along the band edge x' = x + E
        std::function<double(double)> g, gp, gpp, k, kp, j;
    };
    auto make_side = [&gf](int E) {
        Side s;
        s.g = [&gf, E](double x) { return gf.h(x, x + E); };
        s.gp = [&gf, E](double x) {
            HBundle b = gf.eval(x, x + E);
            return b.h1 + b.h2;
        };
        s.gpp = [&gf, E](double x) {
            HBundle b = gf.eval(x, x + E);
            return b.h11 + 2 * b.h12 + b.h22;
        };
        s.k = [&gf, E](double x) {
            HBundle b = gf.eval(x, x + E);
            return b.h2 - b.h1;
        };
        s.kp = [&gf, E](double x) {
            HBundle b = gf.eval(x, x + E);
            return b.h22 - b.h11;
        };
        s.j = [&gf, E](double x) { return -gf.eval(x, x + E).h12; };
        return s;
    };
    auto upper = std::make_shared<Side>(make_side(N));
    auto lower = std::make_shared<Side>(make_side(M));

    auto base = gf;  // copy keeps the wrapper self-contained
    auto kernel = [base, upper, lower, M, N](double x, double xp) -> HBundle {
        double spacing = xp - x;
        if (spacing >= M && spacing <= N) return base.eval(x, xp);
        const Side& s = (spacing > N) ? *upper : *lower;
        const int E = (spacing > N) ? N : M;
        double u = xp - E;
        double mid = 0.5 * (x + u);
        HBundle b;
        double intk = detail::integrate(s.k, x, u);
        // tent-weighted integral of j between x and u, peak at mid
        double tent;
        if (u >= x) {
            tent = detail::integrate([&](double xi) { return s.j(xi) * (xi - x); }, x, mid) +
                   detail::integrate([&](double xi) { return s.j(xi) * (u - xi); }, mid, u);
        } else {
            tent = detail::integrate([&](double xi) { return s.j(xi) * (xi - u); }, u, mid) +
                   detail::integrate([&](double xi) { return s.j(xi) * (x - xi); }, mid, x);
        }
        b.h = 0.5 * (s.g(x) + s.g(u) + intk + 4 * tent);
        if (u >= x) {
            b.h1 = 0.5 * (s.gp(x) - s.k(x) - 4 * detail::integrate(s.j, x, mid));
            b.h2 = 0.5 * (s.gp(u) + s.k(u) + 4 * detail::integrate(s.j, mid, u));
        } else {
            b.h1 = 0.5 * (s.gp(x) - s.k(x) + 4 * detail::integrate(s.j, mid, x));
            b.h2 = 0.5 * (s.gp(u) + s.k(u) - 4 * detail::integrate(s.j, u, mid));
        }
        b.h12 = -s.j(mid);
        b.h11 = 0.5 * (s.gpp(x) - s.kp(x) + 4 * s.j(x) - 2 * s.j(mid));
        b.h22 = 0.5 * (s.gpp(u) + s.kp(u) + 4 * s.j(u) - 2 * s.j(mid));
        return b;
    };
    return GeneratingFunction(base.name() + "_banded", kernel, base.c(), Band{M, N},
                              base.uses_fd_derivatives(), base.params());
}

// ---------------------------------------------------------------------------
// On-site potential helpers (coupling-independent since h2(x,x)+h1(x,x)=U'(x))

/// Critical points of the tilted on-site slice U_F(x) = h_F(x,x) in [0,1),
/// split into minima and maxima of U_F.
struct WellSet {
    std::vector<double> minima;
    std::vector<double> maxima;
};

inline WellSet find_tilted_wells(const GeneratingFunction& gf, double F, int grid = 4096)
{
    auto Uprime = [&](double x) {
        HBundle b = gf.eval(x, x);
        return b.h1 + b.h2 - F;
    };
    auto Usecond = [&](double x) {
        double d = 1e-6;
        return (Uprime(x + d) - Uprime(x - d)) / (2 * d);
    };
    WellSet ws;
    double prev = Uprime(0);
    for (int i = 1; i <= grid; ++i) {
        double x0 = double(i - 1) / grid, x1 = double(i) / grid;
        double cur = Uprime(x1);
        if (prev == 0 || prev * cur < 0) {
            double a = x0, b = x1;
            for (int it = 0; it < 200; ++it) {
                double m = 0.5 * (a + b);
                if (Uprime(a) * Uprime(m) <= 0)
                    b = m;
                else
                    a = m;
            }
            double root = 0.5 * (a + b);
            if (Usecond(root) > 0)
                ws.minima.push_back(root);
            else
                ws.maxima.push_back(root);
        }
        prev = cur;
    }
    return ws;
}

/// For a two-well on-site slice with minima a < b per period, find the tilt F
/// that levels U_F(b) and U_F(a+1).  Used by the coexistence construction.
inline double leveling_tilt(const GeneratingFunction& gf)
{
    auto U = [&](double x, double F) { return gf.h(x, x) - F * x; };
    auto mismatch = [&](double F) {
        WellSet ws = find_tilted_wells(gf, F);
        if (ws.minima.size() != 2)
            throw ModelError("leveling_tilt: potential is not bistable at F = " + std::to_string(F));
        double a = ws.minima[0], b = ws.minima[1];
        return U(b, F) - U(a + 1, F);
    };
    // secant from the rigid-well estimate
    WellSet w0 = find_tilted_wells(gf, 0);
    if (w0.minima.size() != 2) throw ModelError("leveling_tilt: untilted potential is not bistable");
    double a0 = w0.minima[0], b0 = w0.minima[1];
    double F = (U(a0, 0) - U(b0, 0)) / (1 + a0 - b0);
    if (F < 0)
        throw ModelError("leveling_tilt: left well is the deeper one; no positive tilt levels "
                         "U(b) with U(a+1)");
    double F1 = F * 1.05 + 1e-6;
    double g0 = mismatch(F), g1 = mismatch(F1);
    for (int it = 0; it < 80 && std::fabs(g1) > 1e-14; ++it) {
        double Fn = F1 - g1 * (F1 - F) / (g1 - g0);
        F = F1;
        g0 = g1;
        F1 = Fn;
        g1 = mismatch(F1);
    }
    return F1;
}

}  // namespace fk
