#pragma once

// The area-preserving twist map generated by h_F: implicit iteration,
// periodic orbits with residues, invariant-manifold growth, action-area
// identities for lobes, and the invariant-circle verdict at F = 0.

#include "fk/ioc.hpp"

namespace fk {

struct CylinderPoint {
    double x = 0;
    double p = 0;
};

struct TwistMapOptions {
    double newton_tol = 1e-13;
    double bracket_growth = 8.0;  // how far past the band the solve may look
};

namespace detail {

/// Solve p = -h1(x, x') + F for x' (strictly increasing in x' by the twist
/// condition), bracketed bisection polished by Newton.
inline double solve_forward(const TiltedEnergy& E, double x, double p,
                            const TwistMapOptions& opt)
{
    const Band band = E.h.band();
    auto g = [&](double xp) { return -E.eval(x, xp).h1 - p; };
    double lo = x + band.M, hi = x + band.N;
    double span = band.N - band.M;
    for (int grow = 0; g(lo) > 0 && grow < 60; ++grow) lo -= span * (grow < 30 ? 1 : opt.bracket_growth);
    for (int grow = 0; g(hi) < 0 && grow < 60; ++grow) hi += span * (grow < 30 ? 1 : opt.bracket_growth);
    if (g(lo) > 0 || g(hi) < 0)
        throw NumericalError("twist map: momentum outside the band image");
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double v = g(mid);
        if (v < 0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-10) break;
    }
    double xp = 0.5 * (lo + hi);
    for (int it = 0; it < 60; ++it) {
        HBundle b = E.eval(x, xp);
        double f = -b.h1 - p;
        double df = -b.h12;
        double step = f / df;
        xp -= step;
        if (std::fabs(step) < opt.newton_tol) break;
    }
    return xp;
}

/// Solve p' = h2(x, x') for x (strictly decreasing in x).
inline double solve_backward(const TiltedEnergy& E, double xp, double pp,
                             const TwistMapOptions& opt)
{
    const Band band = E.h.band();
    auto g = [&](double x) { return E.eval(x, xp).h2 - pp; };
    double lo = xp - band.N, hi = xp - band.M;
    double span = band.N - band.M;
    for (int grow = 0; g(lo) < 0 && grow < 60; ++grow) lo -= span * (grow < 30 ? 1 : opt.bracket_growth);
    for (int grow = 0; g(hi) > 0 && grow < 60; ++grow) hi += span * (grow < 30 ? 1 : opt.bracket_growth);
    if (g(lo) < 0 || g(hi) > 0)
        throw NumericalError("twist map: momentum outside the band image (inverse)");
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double v = g(mid);
        if (v > 0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-10) break;
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 60; ++it) {
        HBundle b = E.eval(x, xp);
        double f = b.h2 - pp;
        double df = b.h12;
        double step = f / df;
        x -= step;
        if (std::fabs(step) < opt.newton_tol) break;
    }
    return x;
}

}  // namespace detail

/// One forward step of the twist map.
inline CylinderPoint apply(const TiltedEnergy& E, const CylinderPoint& pt,
                           const TwistMapOptions& opt = {})
{
    double xp = detail::solve_forward(E, pt.x, pt.p, opt);
    return {xp, E.eval(pt.x, xp).h2};
}

/// One backward step of the twist map.
inline CylinderPoint inverse(const TiltedEnergy& E, const CylinderPoint& pt,
                             const TwistMapOptions& opt = {})
{
    double x = detail::solve_backward(E, pt.x, pt.p, opt);
    return {x, -E.eval(x, pt.x).h1};  // the tilt is already inside h_F
}

/// Jacobian of the map at (x, x') (derivatives of (x',p') in (x,p)).
inline void map_jacobian(const TiltedEnergy& E, double x, double xp, double out[2][2])
{
    HBundle b = E.eval(x, xp);
    out[0][0] = -b.h11 / b.h12;
    out[0][1] = -1.0 / b.h12;
    out[1][0] = b.h12 - b.h22 * b.h11 / b.h12;
    out[1][1] = -b.h22 / b.h12;
}

/// Lift an equilibrium configuration to its map orbit, p_n = -h1(x_n,x_{n+1}) + F.
inline std::vector<CylinderPoint> orbit_of_config(const PeriodicConfiguration& c,
                                                  const TiltedEnergy& E, double eq_tol = 1e-9)
{
    if (sup_norm(rhs(c, E)) > eq_tol)
        throw Error("orbit_of_config: configuration is not an equilibrium");
    std::vector<CylinderPoint> out;
    for (int n = 0; n < c.q; ++n)
        out.push_back({c.site(n), -E.eval(c.site(n), c.site(n + 1)).h1});
    for (int n = 0; n < c.q; ++n) {
        CylinderPoint next = apply(E, out[(std::size_t)n]);
        double tx = (n + 1 < c.q) ? out[(std::size_t)(n + 1)].x : out[0].x + c.p;
        double tp = (n + 1 < c.q) ? out[(std::size_t)(n + 1)].p : out[0].p;
        if (std::fabs(next.x - tx) > 1e-9 || std::fabs(next.p - tp) > 1e-9)
            throw NumericalError("orbit_of_config: map does not reproduce the successor");
    }
    return out;
}

inline std::vector<CylinderPoint> orbit_of_config(const WindowConfiguration& w,
                                                  const TiltedEnergy& E, double eq_tol = 1e-8)
{
    Vec defect = rhs(w, E);
    if (sup_norm(defect) > eq_tol)
        throw Error("orbit_of_config: window is not an equilibrium");
    std::vector<CylinderPoint> out;
    for (long long n = w.l; n < w.r(); ++n)
        out.push_back({w.site(n), -E.eval(w.site(n), w.site(n + 1)).h1});
    return out;
}

// ---------------------------------------------------------------------------
// Periodic orbits and residues

enum class OrbitStability { Hyperbolic, Elliptic, Parabolic, InverseHyperbolic };

struct PeriodicOrbit {
    int p = 0, q = 1;
    std::vector<CylinderPoint> points;
    double tau = 0;  // lambda + 1/lambda - 2
    OrbitStability stability = OrbitStability::Parabolic;
    PeriodicConfiguration config;
    double monodromy[2][2] = {{1, 0}, {0, 1}};  // of Phi^q - (p,0) at points[0]
};

/// Find a type-(p,q) periodic orbit from a configuration guess and compute
/// the residue quantity tau both from the determinant formula and from the
/// monodromy; the two must agree to 1e-8.
inline PeriodicOrbit find_periodic_orbit(int p, int q, const TiltedEnergy& E,
                                         const PeriodicConfiguration& guess)
{
    EquilibriumResult eq = find_equilibrium(PeriodicConfiguration(p, q, guess.x), E);
    PeriodicOrbit orbit;
    orbit.p = p;
    orbit.q = q;
    orbit.config = eq.state;
    orbit.points = orbit_of_config(eq.state, E);

    // determinant route: tau = det D2W / prod(-h12)
    Mat H = periodic_hessian(eq.state, E);
    double det = lu_det(H);
    double denom = 1;
    for (int n = 0; n < q; ++n) denom *= -E.eval(eq.state.site(n), eq.state.site(n + 1)).h12;
    double tau_det = det / denom;

    // monodromy route
    double M[2][2] = {{1, 0}, {0, 1}};
    for (int n = 0; n < q; ++n) {
        double J[2][2];
        map_jacobian(E, eq.state.site(n), eq.state.site(n + 1), J);
        double N00 = J[0][0] * M[0][0] + J[0][1] * M[1][0];
        double N01 = J[0][0] * M[0][1] + J[0][1] * M[1][1];
        double N10 = J[1][0] * M[0][0] + J[1][1] * M[1][0];
        double N11 = J[1][0] * M[0][1] + J[1][1] * M[1][1];
        M[0][0] = N00;
        M[0][1] = N01;
        M[1][0] = N10;
        M[1][1] = N11;
    }
    double tau_mon = M[0][0] + M[1][1] - 2.0;
    double scale = std::max({1.0, std::fabs(tau_det), std::fabs(tau_mon)});
    if (std::fabs(tau_det - tau_mon) > 1e-8 * scale)
        throw NumericalError("find_periodic_orbit: residue routes disagree: det " +
                             std::to_string(tau_det) + " vs monodromy " + std::to_string(tau_mon));
    orbit.tau = tau_det;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) orbit.monodromy[i][j] = M[i][j];

    double ptol = 1e-9 * scale;
    if (orbit.tau > ptol)
        orbit.stability = OrbitStability::Hyperbolic;
    else if (orbit.tau < -4 - ptol)
        orbit.stability = OrbitStability::InverseHyperbolic;
    else if (orbit.tau < -ptol && orbit.tau > -4 + ptol)
        orbit.stability = OrbitStability::Elliptic;
    else
        orbit.stability = OrbitStability::Parabolic;
    return orbit;
}

// ---------------------------------------------------------------------------
// Invariant manifolds

enum class Branch { UnstableRight, UnstableLeft, StableRight, StableLeft };

struct ManifoldArc {
    Branch branch = Branch::UnstableRight;
    CylinderPoint base;
    double lambda_u = 0;  // unstable multiplier (> 1)
    double eps = 0;       // seed offset along the eigenvector
    Vec evec = {1, 0};    // seed eigenvector (unit)
    int p = 0, q = 1;
    // polyline with manifold coordinates: point i is the |piece[i]|-fold image
    // (preimage for stable branches) of the seed at parameter param[i]
    std::vector<CylinderPoint> pts;
    std::vector<double> arclength;
    std::vector<int> piece;
    std::vector<double> param;

    bool stable() const { return branch == Branch::StableRight || branch == Branch::StableLeft; }
};

struct ManifoldOptions {
    double max_seg = 1e-3;
    double target_arclength = 3.0;
    int max_pieces = 60;
    int max_points = 100000;
    double eps_scale = 1e-7;
    TwistMapOptions map;
};

namespace detail {

/// Per-period map z -> Phi^q(z) - (p, 0); direction = -1 applies the inverse.
inline CylinderPoint per_period(const TiltedEnergy& E, int p, int q, CylinderPoint z,
                                int direction, const TwistMapOptions& opt)
{
    if (direction >= 0) {
        for (int i = 0; i < q; ++i) z = apply(E, z, opt);
        z.x -= p;
    } else {
        z.x += p;
        for (int i = 0; i < q; ++i) z = inverse(E, z, opt);
    }
    return z;
}

inline CylinderPoint seed_point(const ManifoldArc& arc, double s)
{
    double r = std::pow(arc.lambda_u, s);
    return {arc.base.x + arc.eps * r * arc.evec[0], arc.base.p + arc.eps * r * arc.evec[1]};
}

inline CylinderPoint arc_point(const TiltedEnergy& E, const ManifoldArc& arc, int piece, double s,
                               const TwistMapOptions& opt)
{
    CylinderPoint z = seed_point(arc, s);
    int dir = arc.stable() ? -1 : +1;
    for (int k = 0; k < piece; ++k) z = per_period(E, arc.p, arc.q, z, dir, opt);
    return z;
}

}  // namespace detail

/// Grow one branch of the stable/unstable manifold of a hyperbolic orbit as a
/// refined polyline: iterate a fundamental seed segment, inserting parameters
/// until consecutive image points stay within max_seg.
inline ManifoldArc grow_manifold(const PeriodicOrbit& orbit, Branch branch,
                                 const TiltedEnergy& E, ManifoldOptions opt = {})
{
    if (orbit.stability != OrbitStability::Hyperbolic)
        throw Error("grow_manifold: orbit is not hyperbolic");
    ManifoldArc arc;
    arc.branch = branch;
    arc.base = orbit.points[0];
    arc.p = orbit.p;
    arc.q = orbit.q;

    double tr = orbit.monodromy[0][0] + orbit.monodromy[1][1];
    double lam = 0.5 * (tr + std::sqrt(tr * tr - 4));
    arc.lambda_u = lam;
    double target = arc.stable() ? 1.0 / lam : lam;
    // eigenvector of the monodromy for the chosen multiplier; pick the
    // better-conditioned row
    double a = orbit.monodromy[0][0] - target, b2 = orbit.monodromy[0][1];
    double c = orbit.monodromy[1][0], d = orbit.monodromy[1][1] - target;
    Vec v(2);
    if (std::fabs(b2) + std::fabs(a) > std::fabs(d) + std::fabs(c)) {
        v[0] = -b2;
        v[1] = a;
    } else {
        v[0] = -d;
        v[1] = c;
    }
    double nrm = std::sqrt(v[0] * v[0] + v[1] * v[1]);
    if (nrm == 0) throw NumericalError("grow_manifold: degenerate eigenvector");
    v[0] /= nrm;
    v[1] /= nrm;
    bool right = branch == Branch::UnstableRight || branch == Branch::StableRight;
    double orient = (std::fabs(v[0]) > 1e-12) ? v[0] : v[1];
    if ((orient > 0) != right) {
        v[0] = -v[0];
        v[1] = -v[1];
    }
    arc.evec = v;
    arc.eps = std::min(1e-5, std::max(1e-9, opt.eps_scale * (lam - 1)));

    // the seed parameterization contracts for stable branches, so the piece
    // map for them uses lambda_s = 1/lambda in the same formula
    if (arc.stable()) arc.lambda_u = lam;  // seed still spans [eps, lam*eps] along v

    std::vector<double> params = {0.0, 0.25, 0.5, 0.75, 1.0};
    double total = 0;
    double prev_total = 0;
    for (int piece = 0; piece < opt.max_pieces && total < opt.target_arclength; ++piece) {
        prev_total = total;
        // refine this piece until segments are short enough
        std::vector<CylinderPoint> pts;
        auto eval_all = [&]() {
            pts.clear();
            pts.reserve(params.size());
            for (double s : params) pts.push_back(detail::arc_point(E, arc, piece, s, opt.map));
        };
        try {
            eval_all();
            bool refined = true;
            while (refined && (int)params.size() < opt.max_points / std::max(1, opt.max_pieces)) {
                refined = false;
                std::vector<double> inserts;
                for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
                    double dx = pts[i + 1].x - pts[i].x, dp = pts[i + 1].p - pts[i].p;
                    if (std::sqrt(dx * dx + dp * dp) > opt.max_seg)
                        inserts.push_back(0.5 * (params[i] + params[i + 1]));
                }
                if (!inserts.empty()) {
                    params.insert(params.end(), inserts.begin(), inserts.end());
                    std::sort(params.begin(), params.end());
                    params.erase(std::unique(params.begin(), params.end()), params.end());
                    eval_all();
                    refined = true;
                }
            }
        } catch (const NumericalError&) {
            break;  // band escape during growth: stop with what we have
        }
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (!arc.pts.empty()) {
                double dx = pts[i].x - arc.pts.back().x, dp = pts[i].p - arc.pts.back().p;
                double d = std::sqrt(dx * dx + dp * dp);
                if (i == 0 && d < 1e-12) continue;  // piece junction duplicate
                total += d;
            }
            arc.pts.push_back(pts[i]);
            arc.arclength.push_back(total);
            arc.piece.push_back(piece);
            arc.param.push_back(params[i]);
            if ((int)arc.pts.size() >= opt.max_points) return arc;
        }
        if (total >= opt.target_arclength) break;
        // a stalling branch has accumulated on the closure of a connection;
        // iterating further only amplifies roundoff near the far orbit
        if (piece > 2 && total - prev_total < 0.005 * std::max(total, 1e-6)) break;
    }
    return arc;
}

// ---------------------------------------------------------------------------
// Intersections and the action-area identity

struct ManifoldIntersection {
    CylinderPoint pt;
    int piece_u = 0;
    double s_u = 0;
    int piece_s = 0;
    double s_s = 0;
    double along_u = 0;  // arclength along the unstable arc
};

/// Transverse crossings of two arcs: polyline segment tests refined by Newton
/// in the two seed parameters.
inline std::vector<ManifoldIntersection> find_intersections(const ManifoldArc& arc_u,
                                                            const ManifoldArc& arc_s,
                                                            const TiltedEnergy& E,
                                                            const TwistMapOptions& opt = {})
{
    std::vector<ManifoldIntersection> out;
    for (std::size_t i = 0; i + 1 < arc_u.pts.size(); ++i) {
        double ax = arc_u.pts[i].x, ay = arc_u.pts[i].p;
        double bx = arc_u.pts[i + 1].x, by = arc_u.pts[i + 1].p;
        if (arc_u.piece[i] != arc_u.piece[i + 1]) continue;
        for (std::size_t j = 0; j + 1 < arc_s.pts.size(); ++j) {
            if (arc_s.piece[j] != arc_s.piece[j + 1]) continue;
            double cx = arc_s.pts[j].x, cy = arc_s.pts[j].p;
            double dx = arc_s.pts[j + 1].x, dy = arc_s.pts[j + 1].p;
            double d1 = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
            double d2 = (bx - ax) * (dy - ay) - (by - ay) * (dx - ax);
            double d3 = (dx - cx) * (ay - cy) - (dy - cy) * (ax - cx);
            double d4 = (dx - cx) * (by - cy) - (dy - cy) * (bx - cx);
            if (d1 * d2 >= 0 || d3 * d4 >= 0) continue;
            // Newton on (sU, sS) for arc_u(sU) = arc_s(sS); long map chains
            // leave a roundoff floor, so accept on stall below 1e-8
            double su = 0.5 * (arc_u.param[i] + arc_u.param[i + 1]);
            double ss = 0.5 * (arc_s.param[j] + arc_s.param[j + 1]);
            int pu = arc_u.piece[i], ps = arc_s.piece[j];
            double best = 1e300;
            double best_su = su, best_ss = ss;
            for (int it = 0; it < 30; ++it) {
                CylinderPoint U = detail::arc_point(E, arc_u, pu, su, opt);
                CylinderPoint S = detail::arc_point(E, arc_s, ps, ss, opt);
                double fx = U.x - S.x, fy = U.p - S.p;
                double f = std::fabs(fx) + std::fabs(fy);
                if (f < best) {
                    best = f;
                    best_su = su;
                    best_ss = ss;
                } else if (it > 3) {
                    break;  // stalled at the roundoff floor
                }
                if (f < 1e-13) break;
                double hu = 1e-7, hs = 1e-7;
                CylinderPoint Uh = detail::arc_point(E, arc_u, pu, su + hu, opt);
                CylinderPoint Sh = detail::arc_point(E, arc_s, ps, ss + hs, opt);
                double j00 = (Uh.x - U.x) / hu, j10 = (Uh.p - U.p) / hu;
                double j01 = -(Sh.x - S.x) / hs, j11 = -(Sh.p - S.p) / hs;
                double det = j00 * j11 - j01 * j10;
                if (std::fabs(det) < 1e-300) break;
                double dsu = (-fx * j11 + fy * j01) / det;
                double dss = (-fy * j00 + fx * j10) / det;
                double clamp = std::max({1.0, std::fabs(dsu), std::fabs(dss)});
                su += dsu / clamp;
                ss += dss / clamp;
            }
            if (best > 1e-8) continue;
            su = best_su;
            ss = best_ss;
            ManifoldIntersection isec;
            isec.pt = detail::arc_point(E, arc_u, pu, su, opt);
            isec.piece_u = pu;
            isec.s_u = su;
            isec.piece_s = ps;
            isec.s_s = ss;
            isec.along_u = arc_u.arclength[i];
            out.push_back(isec);
        }
    }
    std::sort(out.begin(), out.end(),
              [](const ManifoldIntersection& a, const ManifoldIntersection& b) {
                  return a.along_u < b.along_u;
              });
    // drop numerically duplicated crossings
    std::vector<ManifoldIntersection> dedup;
    for (const auto& isec : out) {
        if (!dedup.empty() && std::fabs(dedup.back().pt.x - isec.pt.x) < 1e-9 &&
            std::fabs(dedup.back().pt.p - isec.pt.p) < 1e-9)
            continue;
        dedup.push_back(isec);
    }
    return dedup;
}

struct ActionArea {
    double area = 0;     // signed quadrature between the arcs
    double delta_w = 0;  // action difference of the two intersection orbits
};

namespace detail {

/// Orbit positions x_n around an intersection point, indexed from its anchor,
/// evaluated stably through the manifold coordinates: the backward half runs
/// along the unstable arc, the forward half along the stable arc.
class IntersectionOrbit {
public:
    IntersectionOrbit(const TiltedEnergy& E, const ManifoldArc& au, const ManifoldArc& as,
                      const ManifoldIntersection& isec, const TwistMapOptions& opt)
        : E_(E), au_(au), as_(as), isec_(isec), opt_(opt)
    {
    }

    /// x-coordinates of orbit sites j q .. (j+1) q (inclusive), period index j
    /// relative to the intersection anchor.  The forward half (j >= 0) is
    /// evaluated through the stable arc's seed coordinates, the backward half
    /// through the unstable arc's — both directions stay numerically benign.
    Vec block(int j) const
    {
        CylinderPoint z;
        if (j >= 0) {
            // Phi-hat^j(A) = Phi-hat^{j - piece_s}(seed_s(s_s))
            z = seed_point(as_, isec_.s_s);
            int m = j - isec_.piece_s;
            for (int it = 0; it < std::abs(m); ++it)
                z = per_period(E_, as_.p, as_.q, z, m >= 0 ? +1 : -1, opt_);
        } else {
            // Phi-hat^j(A) = Phi-hat^{piece_u + j}(seed_u(s_u))
            z = seed_point(au_, isec_.s_u);
            int m = isec_.piece_u + j;
            for (int it = 0; it < std::abs(m); ++it)
                z = per_period(E_, au_.p, au_.q, z, m >= 0 ? +1 : -1, opt_);
        }
        Vec xs;
        xs.push_back(z.x + double(j) * au_.p);
        CylinderPoint w = z;
        for (int i = 0; i < au_.q; ++i) {
            w = apply(E_, w, opt_);
            xs.push_back(w.x + double(j) * au_.p);
        }
        return xs;
    }

private:
    const TiltedEnergy& E_;
    const ManifoldArc& au_;
    const ManifoldArc& as_;
    const ManifoldIntersection& isec_;
    const TwistMapOptions& opt_;
};

inline double polyline_area_between(const ManifoldArc& arc, const TiltedEnergy& E,
                                    int piece_a, double s_a, int piece_b, double s_b,
                                    const TwistMapOptions& opt, double max_seg)
{
    // integral of p dx along the arc between two manifold coordinates, by
    // re-sampling the stored parameter ranges at quadrature resolution
    // orientation: from (piece_a, s_a) to (piece_b, s_b) in growth order
    struct Coord {
        int piece;
        double s;
    };
    Coord A{piece_a, s_a}, B{piece_b, s_b};
    auto before = [](const Coord& u, const Coord& v) {
        return u.piece < v.piece || (u.piece == v.piece && u.s < v.s);
    };
    double sign = 1.0;
    if (before(B, A)) {
        std::swap(A, B);
        sign = -1.0;
    }
    double area = 0;
    for (int k = A.piece; k <= B.piece; ++k) {
        double s0 = (k == A.piece) ? A.s : 0.0;
        double s1 = (k == B.piece) ? B.s : 1.0;
        if (s1 <= s0) continue;
        // adaptive subdivision of [s0, s1] by arc spacing
        std::vector<double> ss = {s0, s1};
        std::vector<CylinderPoint> pp = {detail::arc_point(E, arc, k, s0, opt),
                                         detail::arc_point(E, arc, k, s1, opt)};
        for (std::size_t i = 0; i + 1 < ss.size();) {
            double dx = pp[i + 1].x - pp[i].x, dp = pp[i + 1].p - pp[i].p;
            if (std::sqrt(dx * dx + dp * dp) > max_seg && ss[i + 1] - ss[i] > 1e-12) {
                double mid = 0.5 * (ss[i] + ss[i + 1]);
                ss.insert(ss.begin() + (long)i + 1, mid);
                pp.insert(pp.begin() + (long)i + 1, detail::arc_point(E, arc, k, mid, opt));
            } else {
                ++i;
            }
        }
        for (std::size_t i = 0; i + 1 < ss.size(); ++i)
            area += 0.5 * (pp[i].p + pp[i + 1].p) * (pp[i + 1].x - pp[i].x);
    }
    return sign * area;
}

}  // namespace detail

/// Lobe data for two manifold intersections: the
/// signed area between the arcs and the action difference of the two orbits.
inline ActionArea action_area(const ManifoldArc& arc_u, const ManifoldArc& arc_s,
                              const ManifoldIntersection& A, const ManifoldIntersection& B,
                              const TiltedEnergy& E, const TwistMapOptions& opt = {},
                              double quad_seg = 3e-4)
{
    ActionArea out;
    double area_u =
        detail::polyline_area_between(arc_u, E, A.piece_u, A.s_u, B.piece_u, B.s_u, opt, quad_seg);
    double area_s =
        detail::polyline_area_between(arc_s, E, A.piece_s, A.s_s, B.piece_s, B.s_s, opt, quad_seg);
    out.area = area_u - area_s;

    detail::IntersectionOrbit orbA(E, arc_u, arc_s, A, opt);
    detail::IntersectionOrbit orbB(E, arc_u, arc_s, B, opt);
    double sum = 0;
    for (int dir = 0; dir < 2; ++dir) {
        int small_terms = 0;
        for (int j = (dir == 0 ? 0 : -1); std::abs(j) < 400; j += (dir == 0 ? 1 : -1)) {
            Vec xa = orbA.block(j), xb = orbB.block(j);
            double term = 0;
            for (std::size_t i = 0; i + 1 < xa.size(); ++i)
                term += E.eval(xb[i], xb[i + 1]).h - E.eval(xa[i], xa[i + 1]).h;
            sum += term;
            if (std::fabs(term) < 1e-15)
                ++small_terms;
            else
                small_terms = 0;
            if (small_terms >= 3) break;
        }
    }
    out.delta_w = sum;
    return out;
}

// ---------------------------------------------------------------------------
// Invariant-circle verdict (F = 0)

enum class CircleVerdictKind {
    CircleOfPeriodic,
    CircleWithAdvancing,
    CircleWithRetreating,
    MixedCircle,
    NoCircle,
    Undetermined
};

struct GapDiagnostics {
    double x_left = 0, x_right = 0;
    bool advancing_coincident = false;
    bool retreating_coincident = false;
    double hausdorff_advancing = 0;
    double hausdorff_retreating = 0;
    double lobe_area = 0;
    int crossings = 0;
};

struct CircleVerdict {
    CircleVerdictKind kind = CircleVerdictKind::Undetermined;
    std::vector<GapDiagnostics> gaps;
    std::string note;
    std::vector<ManifoldArc> arcs;  // the grown branches, for plotting
};

struct CircleVerdictOptions {
    double coincide_tol = 1e-9;  // arclength-normalized Hausdorff
    int grid_density = 6;
    ManifoldOptions manifold;
    double eq_tol = 1e-10;
};

namespace detail {

inline double one_sided_hausdorff(const ManifoldArc& a, const ManifoldArc& b, double x_lo,
                                  double x_hi)
{
    double worst = 0;
    for (std::size_t i = 0; i < a.pts.size(); ++i) {
        double x = a.pts[i].x;
        if (x < x_lo || x > x_hi) continue;
        double best = 1e300;
        for (std::size_t j = 0; j + 1 < b.pts.size(); ++j) {
            double ax = b.pts[j].x, ay = b.pts[j].p;
            double bx = b.pts[j + 1].x, by = b.pts[j + 1].p;
            double vx = bx - ax, vy = by - ay;
            double den = vx * vx + vy * vy;
            double t = (den > 0) ? ((x - ax) * vx + (a.pts[i].p - ay) * vy) / den : 0.0;
            t = std::min(1.0, std::max(0.0, t));
            double dx = x - (ax + t * vx), dy = a.pts[i].p - (ay + t * vy);
            best = std::min(best, dx * dx + dy * dy);
        }
        worst = std::max(worst, std::sqrt(best));
    }
    return worst;
}

}  // namespace detail

/// Verdict on rational invariant circles at F = 0: a circle of
/// (p,q) periodic orbits, a circle closed by one-directional separatrices, a
/// mixed circle, or no circle (with lobe areas as the splitting measure).
inline CircleVerdict circle_verdict(int p, int q, const GeneratingFunction& gf,
                                    CircleVerdictOptions opt = {})
{
    TiltedEnergy E(gf, 0.0);
    CircleVerdict out;

    // integrable detection: the rigid family is an exact circle of equilibria
    bool rigid_family = true;
    for (int i = 0; i <= 32 && rigid_family; ++i)
        if (sup_norm(rhs(PeriodicConfiguration::rigid(p, q, i / 33.0), E)) > opt.eq_tol)
            rigid_family = false;
    if (rigid_family) {
        out.kind = CircleVerdictKind::CircleOfPeriodic;
        out.note = "rigid one-parameter family of equilibria";
        return out;
    }

    EquilibriumCatalog cat = find_all_equilibria(p, q, E, opt.grid_density);
    std::vector<PeriodicOrbit> hyper;
    for (const CatalogEntry& e : cat.entries) {
        if (!is_birkhoff(e.state)) continue;
        try {
            PeriodicOrbit orb = find_periodic_orbit(p, q, E, e.state);
            if (orb.stability == OrbitStability::Hyperbolic) hyper.push_back(std::move(orb));
        } catch (const NumericalError&) {
            continue;
        }
    }
    if (hyper.empty()) {
        out.kind = CircleVerdictKind::Undetermined;
        out.note = "no hyperbolic type-(p,q) orbits found";
        return out;
    }
    std::sort(hyper.begin(), hyper.end(),
              [](const PeriodicOrbit& a, const PeriodicOrbit& b) {
                  return a.points[0].x < b.points[0].x;
              });

    bool all_advancing = true, all_retreating = true, any_gap_open = false, any_undetermined = false;
    for (std::size_t i = 0; i < hyper.size(); ++i) {
        const PeriodicOrbit& left = hyper[i];
        PeriodicOrbit right;
        if (i + 1 < hyper.size()) {
            right = hyper[i + 1];
        } else {
            right = hyper[0];
            for (auto& pt : right.points) pt.x += 1.0;
            for (double& xv : right.config.x) xv += 1.0;
        }
        GapDiagnostics gap;
        gap.x_left = left.points[0].x;
        gap.x_right = right.points[0].x;
        double gap_len = gap.x_right - gap.x_left;

        ManifoldOptions mopt = opt.manifold;
        mopt.target_arclength = std::max(mopt.target_arclength, 2.5 * gap_len + 0.5);
        ManifoldArc uR = grow_manifold(left, Branch::UnstableRight, E, mopt);
        ManifoldArc sL = grow_manifold(right, Branch::StableLeft, E, mopt);
        ManifoldArc sR = grow_manifold(left, Branch::StableRight, E, mopt);
        ManifoldArc uL = grow_manifold(right, Branch::UnstableLeft, E, mopt);

        double pad = 0.05 * gap_len;
        double norm = std::max(uR.arclength.empty() ? 1.0 : uR.arclength.back(), 1e-3);
        gap.hausdorff_advancing = detail::one_sided_hausdorff(uR, sL, gap.x_left + pad,
                                                              gap.x_right - pad) /
                                  norm;
        gap.hausdorff_retreating = detail::one_sided_hausdorff(sR, uL, gap.x_left + pad,
                                                               gap.x_right - pad) /
                                   norm;
        gap.advancing_coincident = gap.hausdorff_advancing < opt.coincide_tol;
        gap.retreating_coincident = gap.hausdorff_retreating < opt.coincide_tol;

        if (!gap.advancing_coincident && !gap.retreating_coincident) {
            auto crossings = find_intersections(uR, sL, E, opt.manifold.map);
            gap.crossings = (int)crossings.size();
            if (crossings.size() >= 2) {
                ActionArea aa = action_area(uR, sL, crossings[0], crossings[1], E,
                                            opt.manifold.map);
                gap.lobe_area = std::fabs(aa.area);
            }
            if (gap.crossings > 0)
                any_gap_open = true;
            else
                any_undetermined = true;
            all_advancing = all_retreating = false;
        } else {
            if (!gap.advancing_coincident) all_advancing = false;
            if (!gap.retreating_coincident) all_retreating = false;
        }
        out.gaps.push_back(gap);
        out.arcs.push_back(std::move(uR));
        out.arcs.push_back(std::move(sL));
        out.arcs.push_back(std::move(sR));
        out.arcs.push_back(std::move(uL));
    }

    if (any_gap_open)
        out.kind = CircleVerdictKind::NoCircle;
    else if (any_undetermined)
        out.kind = CircleVerdictKind::Undetermined;
    else if (all_advancing)
        out.kind = CircleVerdictKind::CircleWithAdvancing;
    else if (all_retreating)
        out.kind = CircleVerdictKind::CircleWithRetreating;
    else {
        bool each_gap_connected = true;
        for (const GapDiagnostics& g : out.gaps)
            if (!g.advancing_coincident && !g.retreating_coincident) each_gap_connected = false;
        out.kind = each_gap_connected ? CircleVerdictKind::MixedCircle
                                      : CircleVerdictKind::Undetermined;
    }
    return out;
}

}  // namespace fk
