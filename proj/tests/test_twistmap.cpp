#include <cmath>

#include "doctest.h"
#include "fk/twistmap.hpp"

using namespace fk;

TEST_SUITE("twistmap")
{
    TEST_CASE("apply matches the closed form and preserves area")
    {
        double k = 1.0;
        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(k));
        for (double F : {0.0, 0.07}) {
            TiltedEnergy E(h, F);
            Rng rng(41);
            for (int i = 0; i < 100; ++i) {
                CylinderPoint pt{rng.uniform(-1, 1), rng.uniform(-1.5, 1.5)};
                CylinderPoint im = apply(E, pt);
                double xp = pt.x + pt.p - k / two_pi * std::sin(two_pi * pt.x) - F;
                double pp = pt.p - k / two_pi * std::sin(two_pi * pt.x) - F;
                CHECK(im.x == doctest::Approx(xp).epsilon(1e-12));
                CHECK(im.p == doctest::Approx(pp).epsilon(1e-12));
                CylinderPoint back = inverse(E, im);
                CHECK(std::fabs(back.x - pt.x) < 1e-10);
                CHECK(std::fabs(back.p - pt.p) < 1e-10);
                // numerical jacobian determinant = 1 (area preservation)
                double d = 1e-6;
                CylinderPoint ax = apply(E, {pt.x + d, pt.p}), bx = apply(E, {pt.x - d, pt.p});
                CylinderPoint ap = apply(E, {pt.x, pt.p + d}), bp = apply(E, {pt.x, pt.p - d});
                double det = ((ax.x - bx.x) * (ap.p - bp.p) - (ap.x - bp.x) * (ax.p - bx.p)) /
                             (4 * d * d);
                CHECK(std::fabs(det - 1) < 1e-7);
            }
        }
        // fixed point (1/2, 0) at F=0
        CylinderPoint fp = apply(TiltedEnergy(h, 0.0), {0.5, 0.0});
        CHECK(std::fabs(fp.x - 0.5) < 1e-13);
        CHECK(std::fabs(fp.p) < 1e-13);
    }

    TEST_CASE("mane map: y=0 is invariant, (x,0) -> (g(x),0)")
    {
        GeneratingFunction m = make_builtin(BuiltinSpec::mane());
        TiltedEnergy E(m, 0.0);
        detail::CircleLift lift(0.25, 0.5, 0.75, 0.1, 0.1);
        Rng rng(43);
        for (int i = 0; i < 60; ++i) {
            double x = rng.uniform(0, 1);
            CylinderPoint im = apply(E, {x, 0.0});
            CHECK(im.x == doctest::Approx(lift.g(x)).epsilon(1e-12));
            CHECK(std::fabs(im.p) < 1e-12);
        }
    }

    TEST_CASE("orbit_of_config lifts equilibria and rejects the rest")
    {
        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(1.0));
        TiltedEnergy E(h, 0.0);
        auto orbit = orbit_of_config(PeriodicConfiguration::constant(0.5), E);
        REQUIRE(orbit.size() == 1);
        CHECK(std::fabs(orbit[0].p) < 1e-12);
        CHECK_THROWS_AS(orbit_of_config(PeriodicConfiguration::constant(0.3), E), Error);

        // tilted case: the lift must still satisfy the map recursion
        TiltedEnergy Et(h, 0.05);
        PeriodicConfiguration eq = find_equilibrium(PeriodicConfiguration(0, 1, {0.55}), Et).state;
        CHECK_NOTHROW(orbit_of_config(eq, Et));
        // below F_d(1/3) (about 0.006) so a type-(1,3) equilibrium exists
        TiltedEnergy E13(h, 0.004);
        PeriodicConfiguration seed13 = PeriodicConfiguration::rigid(1, 3, 0.05);
        FlowSettings fs;
        Trajectory tr = integrate(seed13, E13, fs, 200.0, 2);
        seed13.x = tr.x.back();
        PeriodicConfiguration eq2 = find_equilibrium(seed13, E13).state;
        auto lifted = orbit_of_config(eq2, E13);
        CHECK(lifted.size() == 3);

        // heteroclinic window lifts to a point sequence approaching the orbits
        HeteroclinicSolution z = find_equilibrium_disc(PeriodicConfiguration::constant(0.5),
                                                       PeriodicConfiguration::constant(1.5),
                                                       DiscKind::Advancing, E);
        auto pts = orbit_of_config(z.window, E);
        CHECK(std::fabs(pts.front().x - 0.5) < 1e-6);
        CHECK(std::fabs(pts.front().p) < 1e-6);
        CHECK(std::fabs(pts.back().x - 1.5) < 1e-6);
        CHECK(std::fabs(pts.back().p) < 1e-6);
    }

    TEST_CASE("residues: determinant vs monodromy, analytic values")
    {
        for (double k : {0.5, 1.0, 2.0}) {
            GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(k));
            TiltedEnergy E(h, 0.0);
            PeriodicOrbit top = find_periodic_orbit(0, 1, E, PeriodicConfiguration::constant(0.01));
            PeriodicOrbit bot = find_periodic_orbit(0, 1, E, PeriodicConfiguration::constant(0.49));
            CHECK(top.tau == doctest::Approx(-k).epsilon(1e-9));
            CHECK(bot.tau == doctest::Approx(k).epsilon(1e-9));
            CHECK(top.stability == (k < 4 ? OrbitStability::Elliptic : OrbitStability::InverseHyperbolic));
            CHECK(bot.stability == OrbitStability::Hyperbolic);
        }
        // mane fixed points: tau = (1-g')^2 / g'
        GeneratingFunction m = make_builtin(BuiltinSpec::mane());
        TiltedEnergy Em(m, 0.0);
        detail::CircleLift lift(0.25, 0.5, 0.75, 0.1, 0.1);
        for (double xf : {0.0, 0.5}) {
            PeriodicOrbit orb = find_periodic_orbit(0, 1, Em,
                                                    PeriodicConfiguration::constant(xf + 1e-4));
            double gp = lift.g_deriv(xf);
            CHECK(orb.tau == doctest::Approx((1 - gp) * (1 - gp) / gp).epsilon(1e-8));
            CHECK(orb.stability == OrbitStability::Hyperbolic);
        }
    }

    TEST_CASE("manifold growth: seed invariance and mane straight line")
    {
        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(1.0));
        TiltedEnergy E(h, 0.0);
        PeriodicOrbit o5 = find_periodic_orbit(0, 1, E, PeriodicConfiguration::constant(0.49));
        ManifoldOptions mo;
        mo.target_arclength = 2.0;
        ManifoldArc arc = grow_manifold(o5, Branch::UnstableRight, E, mo);
        REQUIRE(arc.pts.size() > 100);
        // consecutive points within the segment cap
        for (std::size_t i = 1; i < arc.pts.size(); ++i) {
            if (arc.piece[i] != arc.piece[i - 1]) continue;
            double dx = arc.pts[i].x - arc.pts[i - 1].x, dp = arc.pts[i].p - arc.pts[i - 1].p;
            CHECK(std::sqrt(dx * dx + dp * dp) <= mo.max_seg * 1.0001);
        }
        // fundamental-domain invariance: the image of the seed endpoint abuts
        // the next piece start
        CylinderPoint seg_end = detail::arc_point(E, arc, 0, 1.0, mo.map);
        CylinderPoint next_start = detail::arc_point(E, arc, 1, 0.0, mo.map);
        CHECK(std::fabs(seg_end.x - next_start.x) < 1e-10);
        CHECK(std::fabs(seg_end.p - next_start.p) < 1e-10);
        // the unstable-right branch reaches the neighbourhood of (3/2, 0)
        double best = 1e300;
        for (const CylinderPoint& pt : arc.pts)
            best = std::min(best, std::hypot(pt.x - 1.5, pt.p));
        CHECK(best < 0.05);
        // elliptic orbits are rejected
        PeriodicOrbit top = find_periodic_orbit(0, 1, E, PeriodicConfiguration::constant(0.01));
        CHECK_THROWS_AS(grow_manifold(top, Branch::UnstableRight, E, mo), Error);

        // mane: the unstable branch of (b, 0) lies on y=0 to 1e-9
        GeneratingFunction m = make_builtin(BuiltinSpec::mane());
        TiltedEnergy Em(m, 0.0);
        PeriodicOrbit ob = find_periodic_orbit(0, 1, Em, PeriodicConfiguration::constant(0.501));
        ManifoldOptions mo2;
        mo2.target_arclength = 0.45;
        ManifoldArc line = grow_manifold(ob, Branch::UnstableRight, Em, mo2);
        for (const CylinderPoint& pt : line.pts) CHECK(std::fabs(pt.p) < 1e-9);
    }

    TEST_CASE("one-step area identity A0 = h(start) - h(end) + A1")
    {
        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(1.0));
        TiltedEnergy E(h, 0.0);
        // random short arcs, trapezoid quadrature on a fine parameterization
        Rng rng(47);
        for (int trial = 0; trial < 8; ++trial) {
            double x0 = rng.uniform(-0.5, 0.5), p0 = rng.uniform(-0.4, 0.4);
            double x1 = x0 + rng.uniform(0.05, 0.2), p1 = p0 + rng.uniform(-0.1, 0.1);
            const int N = 4000;
            double A0 = 0, A1 = 0, hstart = 0, hend = 0;
            CylinderPoint prev{x0, p0}, prev_im = apply(E, prev);
            hstart = E.eval(prev.x, prev_im.x).h;
            for (int i = 1; i <= N; ++i) {
                double t = double(i) / N;
                CylinderPoint cur{x0 + t * (x1 - x0), p0 + t * (p1 - p0)};
                CylinderPoint cur_im = apply(E, cur);
                A0 += 0.5 * (cur.p + prev.p) * (cur.x - prev.x);
                A1 += 0.5 * (cur_im.p + prev_im.p) * (cur_im.x - prev_im.x);
                prev = cur;
                prev_im = cur_im;
            }
            hend = E.eval(prev.x, prev_im.x).h;
            CHECK(A0 == doctest::Approx(hstart - hend + A1).epsilon(1e-7));
        }
    }

    TEST_CASE("primary lobe: quadrature area equals the action difference")
    {
        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(1.0));
        TiltedEnergy E(h, 0.0);
        PeriodicOrbit o5 = find_periodic_orbit(0, 1, E, PeriodicConfiguration::constant(0.49));
        PeriodicOrbit o15 = o5;
        for (auto& pt : o15.points) pt.x += 1;
        for (auto& xv : o15.config.x) xv += 1;
        ManifoldOptions mo;
        mo.target_arclength = 2.6;
        ManifoldArc uR = grow_manifold(o5, Branch::UnstableRight, E, mo);
        ManifoldArc sL = grow_manifold(o15, Branch::StableLeft, E, mo);
        auto crossings = find_intersections(uR, sL, E);
        REQUIRE(crossings.size() >= 2);
        ActionArea aa = action_area(uR, sL, crossings[0], crossings[1], E);
        CHECK(std::fabs(aa.area - aa.delta_w) < 1e-6);
        CHECK(std::fabs(aa.area) > 1e-5);  // genuine splitting at k=1
        // degenerate request: identical endpoints give zero area and action
        ActionArea zero = action_area(uR, sL, crossings[0], crossings[0], E);
        CHECK(std::fabs(zero.area) < 1e-12);
        CHECK(std::fabs(zero.delta_w) < 1e-12);
        // adjacent lobes have actions of equal magnitude and opposite sign
        // (even symmetry of the potential)
        if (crossings.size() >= 3) {
            ActionArea next = action_area(uR, sL, crossings[1], crossings[2], E);
            CHECK(next.delta_w == doctest::Approx(-aa.delta_w).epsilon(1e-4));
        }
    }

    TEST_CASE("circle verdicts across the catalog")
    {
        GeneratingFunction fc = make_builtin(BuiltinSpec::standard_fk(0.0));
        CHECK(circle_verdict(0, 1, fc).kind == CircleVerdictKind::CircleOfPeriodic);
        CHECK(circle_verdict(1, 2, fc).kind == CircleVerdictKind::CircleOfPeriodic);

        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(1.0));
        CircleVerdict split = circle_verdict(0, 1, h);
        CHECK(split.kind == CircleVerdictKind::NoCircle);
        REQUIRE(split.gaps.size() == 1);
        CHECK(split.gaps[0].crossings > 0);
        CHECK(split.gaps[0].lobe_area > 1e-5);

        GeneratingFunction m = make_builtin(BuiltinSpec::mane());
        CircleVerdict mixed = circle_verdict(0, 1, m);
        CHECK(mixed.kind == CircleVerdictKind::MixedCircle);
        REQUIRE(mixed.gaps.size() == 2);
        // one gap closes with a retreating connection, the other advancing
        CHECK(mixed.gaps[0].retreating_coincident);
        CHECK(mixed.gaps[1].advancing_coincident);
    }
}
