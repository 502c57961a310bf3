#pragma once

// Configuration spaces: periodic states of type (p,q), finite windows with
// declared asymptotics, the translation group T_{qp}, the componentwise
// partial order, width, and the Aubry-diagram export.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "fk/common.hpp"

namespace fk {

/// Type-(p,q) state: q stored positions with the wrap rule x_{n+q} = x_n + p.
struct PeriodicConfiguration {
    int p = 0;
    int q = 1;
    Vec x;  // sites 0..q-1

    PeriodicConfiguration() = default;
    PeriodicConfiguration(int p_, int q_, Vec x_) : p(p_), q(q_), x(std::move(x_))
    {
        if (q <= 0) throw Error("PeriodicConfiguration: q must be positive");
        if ((int)x.size() != q) throw Error("PeriodicConfiguration: need exactly q positions");
    }

    /// Rigid state x_n = n p/q + phase.
    static PeriodicConfiguration rigid(int p, int q, double phase = 0.0)
    {
        Vec v(q);
        for (int n = 0; n < q; ++n) v[n] = phase + double(n) * p / q;
        return PeriodicConfiguration(p, q, std::move(v));
    }

    static PeriodicConfiguration constant(double value) { return {0, 1, {value}}; }

    double site(long long n) const
    {
        long long k = floor_div(n, q);
        return x[(std::size_t)(n - k * q)] + double(k) * p;
    }

    bool reduced() const { return gcd_ll(p == 0 ? 1 : p, q) == 1 || (p == 0 && q == 1); }

    double mean_spacing() const { return double(p) / q; }
};

/// Finite window of positions for sites l..l+values.size()-1 with declared
/// periodic asymptotes on each side.  Shift counters record how many T_{qp}
/// relabelings a co-moving frame has applied.
struct WindowConfiguration {
    long long l = 0;
    Vec values;
    PeriodicConfiguration left_asym;
    PeriodicConfiguration right_asym;
    long long left_shift = 0;
    long long right_shift = 0;

    long long r() const { return l + (long long)values.size() - 1; }

    /// Position at site n: stored value inside the window, asymptote outside.
    double site(long long n) const
    {
        if (n < l) return left_asym.site(n);
        if (n > r()) return right_asym.site(n);
        return values[(std::size_t)(n - l)];
    }

    double left_boundary_residual() const
    {
        return std::fabs(values.front() - left_asym.site(l));
    }
    double right_boundary_residual() const
    {
        return std::fabs(values.back() - right_asym.site(r()));
    }

    double mean_spacing() const
    {
        if (left_asym.p * (long long)right_asym.q != right_asym.p * (long long)left_asym.q ||
            left_asym.q != right_asym.q)
            throw Error("WindowConfiguration: asymptote types mismatch");
        return left_asym.mean_spacing();
    }
};

// ---------------------------------------------------------------------------
// Translations (T_{qp} x)_n = x_{n-q} + p

inline PeriodicConfiguration translate(const PeriodicConfiguration& c, long long q0, long long p0)
{
    // single integer addition per site keeps exact ties exact
    Vec y(c.q);
    for (int n = 0; n < c.q; ++n) {
        long long k = floor_div(n - q0, c.q);
        y[n] = c.x[(std::size_t)(n - q0 - k * c.q)] + double(k * c.p + p0);
    }
    return PeriodicConfiguration(c.p, c.q, std::move(y));
}

inline WindowConfiguration translate(const WindowConfiguration& w, long long q0, long long p0)
{
    WindowConfiguration out = w;
    out.l = w.l + q0;
    for (double& v : out.values) v += double(p0);
    out.left_asym = translate(w.left_asym, q0, p0);
    out.right_asym = translate(w.right_asym, q0, p0);
    return out;
}

// ---------------------------------------------------------------------------
// Partial order

enum class Order {
    Equal,
    LessStrict,     // x_n < y_n at every site
    LessEqual,      // x <= y with equality somewhere
    GreaterStrict,
    GreaterEqual,
    Incomparable
};

namespace detail {
inline Order classify_order(double mn, double mx, double tol)
{
    // mn/mx are min and max of y_n - x_n over the compared sites
    if (std::fabs(mn) <= tol && std::fabs(mx) <= tol) return Order::Equal;
    if (mn > tol) return Order::LessStrict;
    if (mn >= -tol) return Order::LessEqual;
    if (mx < -tol) return Order::GreaterStrict;
    if (mx <= tol) return Order::GreaterEqual;
    return Order::Incomparable;
}
}  // namespace detail

inline Order compare(const PeriodicConfiguration& x, const PeriodicConfiguration& y,
                     long long horizon = 0, double tol = 0.0)
{
    // For periodic states one common period suffices; use lcm of the periods
    // unless a horizon was requested explicitly.  Different mean spacings make
    // the difference unbounded in both directions, hence incomparable over Z.
    if (x.mean_spacing() != y.mean_spacing() && horizon <= 0) return Order::Incomparable;
    long long common = (long long)x.q / gcd_ll(x.q, y.q) * y.q;
    long long n0 = 0, n1 = common - 1;
    if (horizon > 0) {
        n0 = -horizon;
        n1 = horizon;
    }
    double mn = std::numeric_limits<double>::infinity(), mx = -mn;
    for (long long n = n0; n <= n1; ++n) {
        double d = y.site(n) - x.site(n);
        mn = std::min(mn, d);
        mx = std::max(mx, d);
    }
    return detail::classify_order(mn, mx, tol);
}

inline Order compare(const WindowConfiguration& x, const WindowConfiguration& y,
                     long long horizon = 0, double tol = 0.0)
{
    long long n0 = std::min(x.l, y.l) - horizon;
    long long n1 = std::max(x.r(), y.r()) + horizon;
    double mn = std::numeric_limits<double>::infinity(), mx = -mn;
    for (long long n = n0; n <= n1; ++n) {
        double d = y.site(n) - x.site(n);
        mn = std::min(mn, d);
        mx = std::max(mx, d);
    }
    return detail::classify_order(mn, mx, tol);
}

// ---------------------------------------------------------------------------
// Width (sup over m of n+(m) - n-(m))

/// Exact width of a periodic configuration.  Uses that the spacing increments
/// x_i - x_{i-m} repeat with period q in m up to the integer p.
inline long long width(const PeriodicConfiguration& c)
{
    long long w = 0;
    for (int m = 0; m < c.q; ++m) {
        double mn = std::numeric_limits<double>::infinity(), mx = -mn;
        for (int i = 0; i < c.q; ++i) {
            double d = c.site(i) - c.site(i - m);
            mn = std::min(mn, d);
            mx = std::max(mx, d);
        }
        // n-(m) = floor(mn), n+(m) = ceil(mx)
        long long lo = (long long)std::floor(mn);
        long long hi = (long long)std::ceil(mx);
        w = std::max(w, hi - lo);
    }
    return w;
}

inline double mean_spacing(const PeriodicConfiguration& c) { return c.mean_spacing(); }
inline double mean_spacing(const WindowConfiguration& w) { return w.mean_spacing(); }

// ---------------------------------------------------------------------------
// Birkhoff test

struct BirkhoffWitness {
    long long q0 = 0, p0 = 0;  // translate incomparable with the configuration
};

/// True iff all translates within the horizon are pairwise comparable.  The
/// default horizon |q0| <= 3q, |p0| <= 3|p|+3 suffices for periodic states
/// since comparisons repeat with period (q,p).
inline bool is_birkhoff(const PeriodicConfiguration& c, std::optional<BirkhoffWitness>* witness = nullptr,
                        long long q_horizon = -1, long long p_horizon = -1)
{
    if (q_horizon < 0) q_horizon = 3ll * c.q;
    if (p_horizon < 0) p_horizon = 3ll * std::llabs(c.p) + 3;
    for (long long m = -q_horizon; m <= q_horizon; ++m) {
        for (long long n = -p_horizon; n <= p_horizon; ++n) {
            if (m == 0 && n == 0) continue;
            Order o = compare(c, translate(c, m, n));
            if (o == Order::Incomparable) {
                if (witness) *witness = BirkhoffWitness{m, n};
                return false;
            }
        }
    }
    if (witness) witness->reset();
    return true;
}

// ---------------------------------------------------------------------------
// Rotation symbols

struct RotationSymbol {
    enum class Kind { Rational, RationalPlus, RationalMinus, Real };
    Kind kind = Kind::Rational;
    long long p = 0, q = 1;  // meaningful for the rational kinds
    double omega = 0;        // meaningful for Real

    static RotationSymbol rational(long long p, long long q)
    {
        return make(Kind::Rational, p, q);
    }
    static RotationSymbol plus(long long p, long long q) { return make(Kind::RationalPlus, p, q); }
    static RotationSymbol minus(long long p, long long q)
    {
        return make(Kind::RationalMinus, p, q);
    }
    static RotationSymbol real(double w)
    {
        RotationSymbol s;
        s.kind = Kind::Real;
        s.omega = w;
        return s;
    }

    double value() const { return kind == Kind::Real ? omega : double(p) / double(q); }

    /// Tie-break within one rational: minus < exact < plus.
    int tier() const
    {
        switch (kind) {
            case Kind::RationalMinus: return -1;
            case Kind::RationalPlus: return 1;
            default: return 0;
        }
    }

private:
    static RotationSymbol make(Kind k, long long p, long long q)
    {
        if (q <= 0) throw Error("RotationSymbol: q must be positive");
        long long g = gcd_ll(p == 0 ? q : p, q);
        RotationSymbol s;
        s.kind = k;
        s.p = p / g;
        s.q = q / g;
        return s;
    }
};

inline bool operator<(const RotationSymbol& a, const RotationSymbol& b)
{
    // Exact comparison between rationals; mixed comparisons via long double.
    bool ar = a.kind != RotationSymbol::Kind::Real;
    bool br = b.kind != RotationSymbol::Kind::Real;
    if (ar && br) {
        long long lhs = a.p * b.q, rhs = b.p * a.q;
        if (lhs != rhs) return lhs < rhs;
        return a.tier() < b.tier();
    }
    long double av = ar ? (long double)a.p / a.q : (long double)a.omega;
    long double bv = br ? (long double)b.p / b.q : (long double)b.omega;
    if (av != bv) return av < bv;
    return a.tier() < b.tier();
}

inline bool operator==(const RotationSymbol& a, const RotationSymbol& b)
{
    return !(a < b) && !(b < a);
}

// ---------------------------------------------------------------------------
// Aubry diagram export

struct AubryExportOptions {
    int periods = 3;   // periodic states: how many periods of sites to emit
    bool svg = false;  // also emit an SVG polyline next to the CSV
};

namespace detail {
inline void write_aubry_svg(const std::string& path, const std::vector<std::pair<long long, double>>& pts)
{
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (auto& [n, v] : pts) {
        xmin = std::min(xmin, (double)n);
        xmax = std::max(xmax, (double)n);
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
    }
    double w = 640, hgt = 480, pad = 40;
    double sx = (xmax > xmin) ? (w - 2 * pad) / (xmax - xmin) : 1;
    double sy = (ymax > ymin) ? (hgt - 2 * pad) / (ymax - ymin) : 1;
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path);
    f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << hgt << "'>\n";
    f << "<polyline fill='none' stroke='black' stroke-width='1' points='";
    for (auto& [n, v] : pts)
        f << pad + (n - xmin) * sx << "," << hgt - pad - (v - ymin) * sy << " ";
    f << "'/>\n</svg>\n";
}
}  // namespace detail

inline void export_aubry(const PeriodicConfiguration& c, const std::string& path,
                         AubryExportOptions opt = {})
{
    std::ofstream f(path);
    if (!f) throw IoError("export_aubry: cannot open " + path);
    f.precision(17);
    f << "n,x\n";
    std::vector<std::pair<long long, double>> pts;
    for (long long n = 0; n < (long long)opt.periods * c.q; ++n) {
        f << n << "," << c.site(n) << "\n";
        pts.emplace_back(n, c.site(n));
    }
    if (opt.svg) detail::write_aubry_svg(path + ".svg", pts);
}

inline void export_aubry(const WindowConfiguration& w, const std::string& path,
                         AubryExportOptions opt = {})
{
    std::ofstream f(path);
    if (!f) throw IoError("export_aubry: cannot open " + path);
    f.precision(17);
    f << "n,x\n";
    std::vector<std::pair<long long, double>> pts;
    for (long long n = w.l; n <= w.r(); ++n) {
        f << n << "," << w.site(n) << "\n";
        pts.emplace_back(n, w.site(n));
    }
    if (opt.svg) detail::write_aubry_svg(path + ".svg", pts);
}

}  // namespace fk
