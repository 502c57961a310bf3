#pragma once

// Invariant ordered circles of type (p,q): equilibrium catalogs by multistart
// Newton, circle construction by gradient descent from the index-1 saddles,
// verification (order, diagonal periodicity, flow tangency, two-coordinate
// reconstruction), and the mountain-pass saddle search.

#include <algorithm>
#include <map>
#include <set>

#include "fk/disc.hpp"
#include "fk/flow.hpp"

namespace fk {

struct CatalogEntry {
    PeriodicConfiguration state;
    int morse_index = 0;
    double energy = 0;
    Vec spectrum;
    bool degenerate = false;
};

struct EquilibriumCatalog {
    int p = 0, q = 1;
    std::vector<CatalogEntry> entries;  // representatives modulo T_{01}

    const CatalogEntry* nearest(const PeriodicConfiguration& c, double tol,
                                long long* shift_out = nullptr) const
    {
        for (const CatalogEntry& e : entries) {
            for (long long m = -3; m <= 3; ++m) {
                double d = 0;
                for (int i = 0; i < q; ++i)
                    d = std::max(d, std::fabs(c.x[i] - (e.state.x[i] + m)));
                if (d < tol) {
                    if (shift_out) *shift_out = m;
                    return &e;
                }
            }
        }
        return nullptr;
    }
};

/// Multistart Newton over a q-dimensional grid, deduplicated modulo T_{01}.
/// Converged states whose spacings stray more than spacing_window from p/q
/// are discarded (Newton escapees toward alien spacing bands).
inline EquilibriumCatalog find_all_equilibria(int p, int q, const TiltedEnergy& E,
                                              int grid_density = 6, double offset_range = 0.6,
                                              double spacing_window = 1.25)
{
    if (grid_density < 4) throw Error("find_all_equilibria: grid_density >= 4 required");
    EquilibriumCatalog cat;
    cat.p = p;
    cat.q = q;

    int n0 = grid_density;                                         // x_0 over [0,1)
    int noff = std::max(3, (int)(2 * offset_range * grid_density));  // per interior coordinate
    std::vector<int> idx((std::size_t)q, 0);
    auto next = [&]() {
        for (int i = 0; i < q; ++i) {
            int cap = (i == 0) ? n0 : noff;
            if (++idx[(std::size_t)i] < cap) return true;
            idx[(std::size_t)i] = 0;
        }
        return false;
    };
    do {
        Vec x((std::size_t)q);
        x[0] = double(idx[0]) / n0;
        for (int i = 1; i < q; ++i)
            x[(std::size_t)i] = x[0] + double(i) * p / q +
                                (-offset_range + 2 * offset_range * double(idx[(std::size_t)i]) / (noff - 1));
        PeriodicConfiguration seed(p, q, x);
        EquilibriumResult eq;
        try {
            eq = find_equilibrium(seed, E);
        } catch (const NumericalError&) {
            continue;
        }
        PeriodicConfiguration c = eq.state;
        double shift = std::floor(c.x[0]);
        for (int i = 0; i < q; ++i) c.x[i] -= shift;  // representative with x_0 in [0,1)
        bool in_window = true;
        for (int i = 0; i < q; ++i)
            if (std::fabs(c.site(i + 1) - c.site(i) - double(p) / q) > spacing_window)
                in_window = false;
        if (!in_window) continue;
        if (cat.nearest(c, 1e-8)) continue;
        CatalogEntry entry;
        entry.state = c;
        entry.spectrum = eq.hessian_spectrum;
        entry.degenerate = eq.degenerate;
        entry.energy = periodic_energy(c, E);
        double scale = 1e-30;
        for (double ev : entry.spectrum) scale = std::max(scale, std::fabs(ev));
        for (double ev : entry.spectrum)
            if (ev < -1e-10 * scale) ++entry.morse_index;
        cat.entries.push_back(std::move(entry));
    } while (next());
    std::sort(cat.entries.begin(), cat.entries.end(),
              [](const CatalogEntry& a, const CatalogEntry& b) { return a.state.x[0] < b.state.x[0]; });
    return cat;
}

// ---------------------------------------------------------------------------
// Ordered circle samples

struct OrderedCircleSample {
    int p = 0, q = 1;
    std::vector<double> s;                        // uniform grid on [0,1]
    std::vector<PeriodicConfiguration> configs;   // configs.back() = configs.front() + 1
    double margin = 1.0;                          // extension used by consumers

    /// Evaluate by diagonal periodicity and monotone cubic interpolation.
    PeriodicConfiguration at(double sv) const
    {
        double fl = std::floor(sv);
        double sl = sv - fl;
        std::size_t n = s.size();
        // locate the interval (grid may be non-uniform)
        std::size_t j = (std::size_t)(std::upper_bound(s.begin(), s.end(), sl) - s.begin());
        j = (j == 0) ? 0 : j - 1;
        j = std::min(j, n - 2);
        double t = (sl - s[j]) / (s[j + 1] - s[j]);
        Vec out((std::size_t)q);
        for (int c = 0; c < q; ++c) {
            // Fritsch-Carlson limited slopes on the local stencil
            double y0 = configs[j].x[c], y1 = configs[j + 1].x[c];
            double h = s[j + 1] - s[j];
            double dm = (j > 0) ? (y0 - configs[j - 1].x[c]) / (s[j] - s[j - 1]) : (y1 - y0) / h;
            double dp = (j + 2 < n) ? (configs[j + 2].x[c] - y1) / (s[j + 2] - s[j + 1])
                                    : (y1 - y0) / h;
            double d = (y1 - y0) / h;
            auto limit = [&](double m_est) {
                if (d == 0) return 0.0;
                double r = m_est / d;
                return d * std::max(0.0, std::min({r, 3.0}));
            };
            double m0 = limit(0.5 * (dm + d)), m1 = limit(0.5 * (d + dp));
            double t2 = t * t, t3 = t2 * t;
            out[(std::size_t)c] = (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * m0 +
                                  (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * m1 + fl;
        }
        return PeriodicConfiguration(p, q, out);
    }
};

struct IocBuildOptions {
    int max_grid_points = 8000;  // cap on the stored (non-uniform) s-grid
    double descent_offset = 1e-6;
    double descend_eq_tol = 1e-11;
    double dedup_hausdorff = 1e-4;
    double toc_tol = 1e-6;        // translation-invariance (TOC) acceptance
    bool include_index2 = false;  // also build circles from index-2 descents
    int max_circles = 16;
    FlowSettings settings;
};

namespace detail {

struct DescentCurve {
    std::vector<Vec> samples;  // from the saddle to the minimum
    int min_id = -1;
    long long min_shift = 0;
    bool ordered = true;
};

inline DescentCurve descend(const PeriodicConfiguration& saddle, const Vec& direction,
                            double offset, const TiltedEnergy& E, const EquilibriumCatalog& cat,
                            const IocBuildOptions& opt)
{
    const int q = saddle.q;
    DescentCurve out;
    PeriodicConfiguration c = saddle;
    for (int i = 0; i < q; ++i) c.x[i] += offset * direction[(std::size_t)i];
    auto f = [&](const Vec& v) {
        PeriodicConfiguration tmp = c;
        tmp.x = v;
        return rhs(tmp, E);
    };
    StepperState st;
    st.x = c.x;
    st.k1 = f(st.x);
    st.dt = 1e-4;
    out.samples.push_back(saddle.x);
    out.samples.push_back(st.x);
    double t_cap = 1e6;
    while (st.t < t_cap) {
        if (!bs23_step(st, f, 1e-12, t_cap - st.t)) continue;
        out.samples.push_back(st.x);
        if (sup_norm(st.k1) < opt.descend_eq_tol) break;
    }
    // polish and identify the endpoint
    PeriodicConfiguration endc(saddle.p, q, st.x);
    try {
        endc = find_equilibrium(endc, E).state;
    } catch (const NumericalError&) {
    }
    out.samples.push_back(endc.x);
    long long shift = 0;
    const CatalogEntry* hit = cat.nearest(endc, 1e-5, &shift);
    if (hit) {
        out.min_id = (int)(hit - cat.entries.data());
        out.min_shift = shift;
    }
    for (std::size_t j = 1; j < out.samples.size(); ++j)
        for (int i = 0; i < q; ++i) {
            double d = (out.samples[j][i] - out.samples[j - 1][i]) *
                       (direction[(std::size_t)i] >= 0 ? 1.0 : -1.0);
            if (d < -1e-7) out.ordered = false;
        }
    return out;
}

}  // namespace detail

/// Construct IOC samples of type (p,q) by descending from each index-1 saddle
/// along the positive unstable eigenvector and concatenating the heteroclinic
/// curves between consecutive minima around one diagonal period.
inline std::vector<OrderedCircleSample> build_ioc(int p, int q, const TiltedEnergy& E,
                                                  const EquilibriumCatalog& cat,
                                                  IocBuildOptions opt = {})
{
    struct Edge {
        int lo_id;
        long long lo_shift;
        int hi_id;
        long long hi_shift;
        std::vector<Vec> curve;  // ascending from lo to hi
    };
    std::vector<Edge> edges;

    auto add_edges_from = [&](const CatalogEntry& e, int eigen_slot) {
        Mat H = periodic_hessian(e.state, E);
        Mat vecs;
        Vec ev = symmetric_eigenvalues(H, &vecs);
        if (ev[(std::size_t)eigen_slot] >= 0) return;
        Vec dir((std::size_t)q);
        double mean = 0;
        for (int i = 0; i < q; ++i) {
            dir[(std::size_t)i] = vecs((std::size_t)i, (std::size_t)eigen_slot);
            mean += dir[(std::size_t)i];
        }
        if (mean < 0)
            for (double& d : dir) d = -d;
        detail::DescentCurve up = detail::descend(e.state, dir, opt.descent_offset, E, cat, opt);
        Vec ndir = dir;
        for (double& d : ndir) d = -d;
        detail::DescentCurve down = detail::descend(e.state, ndir, opt.descent_offset, E, cat, opt);
        if (up.min_id < 0 || down.min_id < 0) return;
        Edge edge;
        edge.lo_id = down.min_id;
        edge.lo_shift = down.min_shift;
        edge.hi_id = up.min_id;
        edge.hi_shift = up.min_shift;
        edge.curve.assign(down.samples.rbegin(), down.samples.rend());
        edge.curve.insert(edge.curve.end(), up.samples.begin() + 1, up.samples.end());
        edges.push_back(std::move(edge));
    };

    // only weakly ordered states can sit on an ordered circle
    std::vector<bool> birkhoff(cat.entries.size());
    for (std::size_t i = 0; i < cat.entries.size(); ++i)
        birkhoff[i] = is_birkhoff(cat.entries[i].state);

    for (std::size_t i = 0; i < cat.entries.size(); ++i) {
        const CatalogEntry& e = cat.entries[i];
        if (!birkhoff[i]) continue;
        if (e.morse_index == 1) add_edges_from(e, 0);
        if (opt.include_index2 && e.morse_index == 2) add_edges_from(e, 0);
    }

    // enumerate chains from a minimum to its +1 translate
    std::vector<OrderedCircleSample> circles;
    std::vector<int> minima;
    for (std::size_t i = 0; i < cat.entries.size(); ++i)
        if (cat.entries[i].morse_index == 0 && birkhoff[i]) minima.push_back((int)i);
    if (minima.empty() || edges.empty()) return circles;
    struct Node {
        int id;
        long long shift;
        bool operator<(const Node& o) const
        {
            return std::tie(id, shift) < std::tie(o.id, o.shift);
        }
        bool operator==(const Node& o) const { return id == o.id && shift == o.shift; }
    };
    int m0 = minima.front();
    std::vector<std::vector<Vec>> chain;  // current curves
    std::vector<Node> path;

    std::function<void(Node)> dfs = [&](Node at) {
        if ((int)circles.size() >= opt.max_circles) return;
        if (at == Node{m0, 1}) {
            // assemble the circle from the accumulated curves, keeping the
            // integrator's graded sampling (dense through the funnels)
            std::vector<Vec> all;
            for (const auto& cpart : chain)
                for (const Vec& v : cpart)
                    if (all.empty() || sup_dist(all.back(), v) > 1e-14) all.push_back(v);
            std::vector<double> arc(all.size(), 0.0);
            for (std::size_t i = 1; i < all.size(); ++i) {
                double d2 = 0;
                for (int c = 0; c < q; ++c)
                    d2 += (all[i][c] - all[i - 1][c]) * (all[i][c] - all[i - 1][c]);
                arc[i] = arc[i - 1] + std::sqrt(d2);
            }
            double total = arc.back();
            if (total <= 0) return;
            // thin where the curve is straight, but keep the integrator's
            // graded sampling through the high-curvature funnels
            double min_gap = total / opt.max_grid_points;
            OrderedCircleSample sample;
            sample.p = p;
            sample.q = q;
            std::size_t prev_kept = 0;
            for (std::size_t i = 0; i < all.size(); ++i) {
                bool keep = (i == 0) || (i + 1 == all.size());
                if (!keep && arc[i] - arc[prev_kept] >= min_gap) keep = true;
                if (!keep && i + 1 < all.size()) {
                    // turn angle between incoming (from last kept) and outgoing
                    double a2 = 0, b2 = 0, ab = 0;
                    for (int c = 0; c < q; ++c) {
                        double u = all[i][c] - all[prev_kept][c];
                        double v = all[i + 1][c] - all[i][c];
                        a2 += u * u;
                        b2 += v * v;
                        ab += u * v;
                    }
                    if (a2 > 0 && b2 > 0 && ab * ab < (1 - 1e-8) * a2 * b2) keep = true;
                }
                if (keep && i > 0 && i + 1 < all.size()) {
                    // strict order along the grid; roundoff creep near the
                    // equilibria must not produce stalled or reversed points
                    for (int c = 0; c < q; ++c) {
                        if (all[i][c] <= all[prev_kept][c]) keep = false;
                        if (all[i][c] >= all.front()[c] + 1.0) keep = false;
                    }
                }
                if (!keep) continue;
                prev_kept = i;
                sample.s.push_back(arc[i] / total);
                sample.configs.emplace_back(p, q, all[i]);
            }
            sample.s.front() = 0.0;
            sample.s.back() = 1.0;
            // exact diagonal periodicity at the seam
            for (int c = 0; c < q; ++c)
                sample.configs.back().x[(std::size_t)c] =
                    sample.configs.front().x[(std::size_t)c] + 1.0;

            // keep only translation-invariant circles (TOCs): the translate
            // T_{1,0} of a grid config must land back on the curve
            double toc_defect = 0;
            for (std::size_t i = 0; i < sample.configs.size();
                 i += std::max<std::size_t>(1, sample.configs.size() / 48)) {
                PeriodicConfiguration tr = translate(sample.configs[i], 1, 0);
                double target = tr.x[0];
                double slo = -2, shi = 3;
                for (int it = 0; it < 160; ++it) {
                    double mid = 0.5 * (slo + shi);
                    if (sample.at(mid).x[0] < target)
                        slo = mid;
                    else
                        shi = mid;
                }
                PeriodicConfiguration on = sample.at(0.5 * (slo + shi));
                for (int c = 0; c < q; ++c)
                    toc_defect = std::max(toc_defect, std::fabs(on.x[c] - tr.x[c]));
            }
            if (toc_defect > opt.toc_tol) return;  // ordered circle, but not a TOC

            // dedup modulo diagonal shifts: sampled points of the candidate
            // against the dense polyline of each stored circle
            for (const OrderedCircleSample& other : circles) {
                double hd = 0;
                std::size_t stride = std::max<std::size_t>(1, sample.configs.size() / 64);
                for (std::size_t i = 0; i < sample.configs.size(); i += stride) {
                    double best = 1e300;
                    for (std::size_t jj = 0; jj + 1 < other.configs.size(); ++jj) {
                        for (int m = -1; m <= 1; ++m) {
                            // distance to the segment (jj, jj+1) shifted by m
                            double num = 0, den = 0;
                            for (int c = 0; c < q; ++c) {
                                double a = other.configs[jj].x[c] + m;
                                double b = other.configs[jj + 1].x[c] + m;
                                double x = sample.configs[i].x[c];
                                num += (x - a) * (b - a);
                                den += (b - a) * (b - a);
                            }
                            double t = (den > 0) ? std::min(1.0, std::max(0.0, num / den)) : 0.0;
                            double d2 = 0;
                            for (int c = 0; c < q; ++c) {
                                double a = other.configs[jj].x[c] + m;
                                double b = other.configs[jj + 1].x[c] + m;
                                double x = sample.configs[i].x[c];
                                double dd = x - (a + t * (b - a));
                                d2 += dd * dd;
                            }
                            best = std::min(best, std::sqrt(d2));
                        }
                    }
                    hd = std::max(hd, best);
                }
                if (hd < opt.dedup_hausdorff) return;  // duplicate
            }
            circles.push_back(std::move(sample));
            return;
        }
        if (path.size() > 4 * edges.size() + 4) return;
        if (at.shift > 2 || at.shift < -2) return;
        for (const Edge& e : edges) {
            // edge usable from `at` when its low end matches modulo shift
            if (e.lo_id == at.id) {
                Node nxt{e.hi_id, at.shift + (e.hi_shift - e.lo_shift)};
                // guard simple cycles
                bool seen = false;
                for (const Node& n : path)
                    if (n == nxt) seen = true;
                if (seen && !(nxt == Node{m0, 1})) continue;
                long long dshift = at.shift - e.lo_shift;
                std::vector<Vec> cpart = e.curve;
                for (Vec& v : cpart)
                    for (double& xv : v) xv += (double)dshift;
                chain.push_back(std::move(cpart));
                path.push_back(nxt);
                dfs(nxt);
                path.pop_back();
                chain.pop_back();
            }
        }
    };
    for (int start : minima) {
        m0 = start;
        chain.clear();
        path.clear();
        path.push_back(Node{m0, 0});
        dfs(Node{m0, 0});
    }
    return circles;
}

// ---------------------------------------------------------------------------
// Verification

struct IocReport {
    bool ordered = false;            // strict order along the grid
    double min_order_gap = 0;        // min componentwise increase between grid neighbours
    double periodicity_defect = 0;   // |configs(1) - configs(0) - 1|
    double max_tangency = 0;         // flow vector vs curve tangent, normalized
    double reconstruction_error = 0; // two-coordinate rebuild of x_{-1}, x_2
    bool pass(double tangency_tol = 1e-6, double rec_tol = 1e-6) const
    {
        return ordered && periodicity_defect < 1e-12 && max_tangency < tangency_tol &&
               reconstruction_error < rec_tol;
    }
};

inline IocReport verify_ioc(const OrderedCircleSample& sample, const TiltedEnergy& E)
{
    IocReport rep;
    const int q = sample.q;
    const std::size_t M = sample.configs.size();
    if (M < 5) throw Error("verify_ioc: sample too small");

    rep.min_order_gap = 1e300;
    for (std::size_t i = 0; i + 1 < M; ++i)
        for (int c = 0; c < q; ++c)
            rep.min_order_gap =
                std::min(rep.min_order_gap, sample.configs[i + 1].x[c] - sample.configs[i].x[c]);
    rep.ordered = rep.min_order_gap > 0;

    for (int c = 0; c < q; ++c)
        rep.periodicity_defect =
            std::max(rep.periodicity_defect,
                     std::fabs(sample.configs.back().x[c] - sample.configs.front().x[c] - 1.0));

    // flow tangency via centred differences on the (possibly non-uniform)
    // grid, wrapping through the diagonal periodicity
    double vscale = 0;
    std::vector<Vec> speeds(M);
    for (std::size_t i = 0; i < M; ++i) {
        speeds[i] = rhs(sample.configs[i], E);
        vscale = std::max(vscale, sup_norm(speeds[i]));
    }
    if (vscale > 1e-10) {
        auto node = [&](long long i, double* sv) {
            long long k = floor_div(i, (long long)M - 1);
            std::size_t j = (std::size_t)(i - k * ((long long)M - 1));
            Vec x = sample.configs[j].x;
            for (double& xv : x) xv += (double)k;
            *sv = sample.s[j] + (double)k;
            return x;
        };
        for (std::size_t i = 0; i + 1 < M; ++i) {
            double sm, sp;
            Vec xm = node((long long)i - 1, &sm);
            Vec xp = node((long long)i + 1, &sp);
            double s0 = sample.s[i];
            double hm = s0 - sm, hp = sp - s0;
            Vec tangent((std::size_t)q);
            for (int c = 0; c < q; ++c) {
                double dm = (sample.configs[i].x[c] - xm[(std::size_t)c]) / hm;
                double dp = (xp[(std::size_t)c] - sample.configs[i].x[c]) / hp;
                tangent[(std::size_t)c] = (hp * dm + hm * dp) / (hm + hp);
            }
            const Vec& v = speeds[i];
            double tt = 0, vt = 0, vv = 0;
            for (int c = 0; c < q; ++c) {
                tt += tangent[c] * tangent[c];
                vt += v[c] * tangent[c];
                vv += v[c] * v[c];
            }
            double perp2 = std::max(0.0, vv - vt * vt / std::max(tt, 1e-300));
            rep.max_tangency = std::max(rep.max_tangency, std::sqrt(perp2) / vscale);
        }
    }

    // Two-coordinate reconstruction from the pair (x_0(s), x_1(s)):
    // x_2(s) = x_1(s+) with x_0(s+) = x_1(s); x_{-1}(s) = x_0(s-) with
    // x_1(s-) = x_0(s).  Monotone bisection on the extended parameterization.
    auto coord = [&](double sv, int c) { return sample.at(sv).site(c); };
    auto invert = [&](int c, double target, double slo, double shi) {
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (slo + shi);
            if (coord(mid, c) < target)
                slo = mid;
            else
                shi = mid;
        }
        return 0.5 * (slo + shi);
    };
    for (std::size_t i = 0; i < M; i += std::max<std::size_t>(1, M / 64)) {
        double sv = sample.s[i];
        const PeriodicConfiguration& c = sample.configs[i];
        double sp = invert(0, c.site(1), sv - 3, sv + 3);
        double rec2 = coord(sp, 1);
        rep.reconstruction_error =
            std::max(rep.reconstruction_error, std::fabs(rec2 - c.site(2)));
        double sm = invert(1, c.site(0), sv - 3, sv + 3);
        double recm1 = coord(sm, 0);
        rep.reconstruction_error =
            std::max(rep.reconstruction_error, std::fabs(recm1 - c.site(-1)));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Minimax (mountain pass between two minima)

struct MinimaxResult {
    PeriodicConfiguration saddle;
    double height = 0;        // W_{p,q} at the saddle
    int morse_index = 0;      // expected 1; reported either way
    double gradient_norm = 0;
    int string_iterations = 0;
};

struct MinimaxOptions {
    int path_nodes = 33;
    double transverse_tol = 1e-5;
    int max_iterations = 40000;
    Vec bend;  // optional half-sine perturbation of the initial string
};

/// Discrete mountain pass: relax a string of configurations between two
/// minima transverse to its tangent, then refine the climbing node to a
/// critical point by Newton.  (The naive per-coordinate minimax is known to
/// miss critical points; the string avoids it.)
inline MinimaxResult minimax(const PeriodicConfiguration& minA, const PeriodicConfiguration& minB,
                             const TiltedEnergy& E, MinimaxOptions opt = {})
{
    if (minA.q != minB.q || minA.p != minB.p) throw Error("minimax: type mismatch");
    const int q = minA.q;
    if (sup_dist(minA.x, minB.x) < 1e-10) throw Error("minimax: minima coincide");
    for (const auto* c : {&minA, &minB})
        if (sup_norm(rhs(*c, E)) > 1e-8) throw Error("minimax: input is not an equilibrium");

    const int K = std::max(8, opt.path_nodes);
    std::vector<Vec> nodes((std::size_t)K, Vec((std::size_t)q));
    for (int j = 0; j < K; ++j) {
        double t = double(j) / (K - 1);
        for (int c = 0; c < q; ++c)
            nodes[(std::size_t)j][(std::size_t)c] =
                (1 - t) * minA.x[(std::size_t)c] + t * minB.x[(std::size_t)c];
        if (!opt.bend.empty())
            for (int c = 0; c < q && c < (int)opt.bend.size(); ++c)
                nodes[(std::size_t)j][(std::size_t)c] += std::sin(M_PI * t) * opt.bend[(std::size_t)c];
    }
    auto grad = [&](const Vec& x) {
        PeriodicConfiguration c(minA.p, q, x);
        Vec g = rhs(c, E);
        for (double& v : g) v = -v;
        return g;
    };
    auto energy = [&](const Vec& x) {
        return periodic_energy(PeriodicConfiguration(minA.p, q, x), E);
    };

    double dt = 0.05;
    int it = 0;
    double worst = 1e300;
    for (; it < opt.max_iterations; ++it) {
        // transverse gradient step on the interior nodes
        worst = 0;
        std::vector<Vec> gs((std::size_t)K);
        for (int j = 1; j + 1 < K; ++j) gs[(std::size_t)j] = grad(nodes[(std::size_t)j]);
        for (int j = 1; j + 1 < K; ++j) {
            Vec tangent((std::size_t)q);
            double norm = 0;
            for (int c = 0; c < q; ++c) {
                tangent[(std::size_t)c] =
                    nodes[(std::size_t)(j + 1)][(std::size_t)c] - nodes[(std::size_t)(j - 1)][(std::size_t)c];
                norm += tangent[(std::size_t)c] * tangent[(std::size_t)c];
            }
            norm = std::sqrt(std::max(norm, 1e-300));
            double gdott = 0;
            for (int c = 0; c < q; ++c) gdott += gs[(std::size_t)j][(std::size_t)c] * tangent[(std::size_t)c] / norm;
            double r2 = 0;
            for (int c = 0; c < q; ++c) {
                double perp = gs[(std::size_t)j][(std::size_t)c] - gdott * tangent[(std::size_t)c] / norm;
                nodes[(std::size_t)j][(std::size_t)c] -= dt * perp;
                r2 = std::max(r2, std::fabs(perp));
            }
            worst = std::max(worst, r2);
        }
        // reparameterize to equal arclength
        std::vector<double> arc((std::size_t)K, 0.0);
        for (int j = 1; j < K; ++j) {
            double d2 = 0;
            for (int c = 0; c < q; ++c) {
                double d = nodes[(std::size_t)j][(std::size_t)c] - nodes[(std::size_t)(j - 1)][(std::size_t)c];
                d2 += d * d;
            }
            arc[(std::size_t)j] = arc[(std::size_t)(j - 1)] + std::sqrt(d2);
        }
        if (arc.back() < 1e-12) throw NumericalError("minimax: string collapsed");
        std::vector<Vec> renodes = nodes;
        std::size_t seg = 0;
        for (int j = 1; j + 1 < K; ++j) {
            double target = arc.back() * j / (K - 1);
            while (seg + 2 < (std::size_t)K && arc[seg + 1] < target) ++seg;
            double t = (arc[seg + 1] > arc[seg]) ? (target - arc[seg]) / (arc[seg + 1] - arc[seg]) : 0;
            for (int c = 0; c < q; ++c)
                renodes[(std::size_t)j][(std::size_t)c] =
                    nodes[seg][(std::size_t)c] +
                    t * (nodes[seg + 1][(std::size_t)c] - nodes[seg][(std::size_t)c]);
        }
        nodes = std::move(renodes);
        if (worst < opt.transverse_tol) break;
    }

    // climbing node: highest energy, refined by Newton on the full gradient
    int jmax = 1;
    double emax = -1e300;
    for (int j = 1; j + 1 < K; ++j) {
        double e = energy(nodes[(std::size_t)j]);
        if (e > emax) {
            emax = e;
            jmax = j;
        }
    }
    PeriodicConfiguration guess(minA.p, q, nodes[(std::size_t)jmax]);
    EquilibriumResult eq = find_equilibrium(guess, E);
    MinimaxResult out;
    out.saddle = eq.state;
    out.height = periodic_energy(eq.state, E);
    out.gradient_norm = eq.residual;
    out.string_iterations = it;
    double scale = 1e-30;
    for (double ev : eq.hessian_spectrum) scale = std::max(scale, std::fabs(ev));
    for (double ev : eq.hessian_spectrum)
        if (ev < -1e-10 * scale) ++out.morse_index;
    return out;
}

}  // namespace fk
