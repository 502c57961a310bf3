#include <cmath>

#include "doctest.h"
#include "fk/flow.hpp"

using namespace fk;

namespace {

FlowSettings fast_settings()
{
    FlowSettings s;
    s.step_tol = 1e-12;
    s.t_max = 4000;
    return s;
}

}  // namespace

TEST_SUITE("flow")
{
    TEST_CASE("rhs at simple states")
    {
        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(1.0));
        // potential minimum x = 1/2, F = 0: equilibrium
        Vec v = rhs(PeriodicConfiguration::constant(0.5), TiltedEnergy(h, 0.0));
        CHECK(std::fabs(v[0]) < 1e-15);
        // maximum x = 0 is an equilibrium too
        v = rhs(PeriodicConfiguration::constant(0.0), TiltedEnergy(h, 0.0));
        CHECK(std::fabs(v[0]) < 1e-15);
        // free chain: xdot = F exactly
        GeneratingFunction free_chain = make_builtin(BuiltinSpec::standard_fk(0.0));
        v = rhs(PeriodicConfiguration::constant(0.3), TiltedEnergy(free_chain, 0.17));
        CHECK(v[0] == doctest::Approx(0.17).epsilon(1e-15));
    }

    TEST_CASE("monotone order preservation and translation equivariance")
    {
        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(1.0));
        FlowSettings s = fast_settings();
        s.step_tol = 1e-10;
        Rng rng(23);
        int violations = 0;
        for (int trial = 0; trial < 20; ++trial) {
            double F = rng.uniform(0.0, 0.3);
            TiltedEnergy E(h, F);
            int q = 3;
            Vec xa(q), xb(q);
            for (int i = 0; i < q; ++i) {
                xa[i] = double(i) / q + rng.uniform(-0.2, 0.2);
                xb[i] = xa[i] + rng.uniform(0.01, 0.3);
            }
            PeriodicConfiguration a(1, q, xa), b(1, q, xb);
            Trajectory ta = integrate(a, E, s, 5.0, 4);
            Trajectory tb = integrate(b, E, s, 5.0, 4);
            double mingap = 1e300;
            for (int i = 0; i < q; ++i) mingap = std::min(mingap, tb.x.back()[i] - ta.x.back()[i]);
            if (mingap <= 0) ++violations;
        }
        CHECK(violations == 0);

        // translation equivariance: integrate then translate == translate then integrate
        TiltedEnergy E(h, 0.1);
        PeriodicConfiguration c(1, 3, {0.05, 0.41, 0.66});
        for (auto [q0, p0] : {std::pair{1, 0}, {2, -1}, {0, 2}}) {
            Trajectory t1 = integrate(c, E, s, 5.0, 2);
            PeriodicConfiguration after = c;
            after.x = t1.x.back();
            PeriodicConfiguration lhs = translate(after, q0, p0);
            PeriodicConfiguration shifted = translate(c, q0, p0);
            Trajectory t2 = integrate(shifted, E, s, 5.0, 2);
            Vec rhsv = t2.x.back();
            CHECK(sup_dist(lhs.x, rhsv) < 10 * 1e-8);
        }
    }

    TEST_CASE("energy decreases along the untilted flow")
    {
        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(1.0));
        TiltedEnergy E(h, 0.0);
        PeriodicConfiguration c(0, 1, {0.4});
        FlowSettings s = fast_settings();
        Trajectory t = integrate(c, E, s, 25.0, 50);
        double prev = 1e300;
        for (const Vec& x : t.x) {
            PeriodicConfiguration cc(0, 1, Vec{x});
            double W = periodic_energy(cc, E);
            CHECK(W <= prev + 1e-12);
            prev = W;
        }
        // converges to the minimum x = 1/2
        CHECK(t.x.back()[0] == doctest::Approx(0.5).epsilon(1e-6));
    }

    TEST_CASE("find_equilibrium closed forms")
    {
        double k = 1.0;
        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(k));
        // F=0 from x0=0.4: converges to 1/2
        EquilibriumResult eq = find_equilibrium(PeriodicConfiguration(0, 1, {0.4}),
                                                TiltedEnergy(h, 0.0));
        CHECK(eq.state.x[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(eq.residual < 1e-12);
        // stable branch: sin(2 pi x) = -2 pi F / k with x in (1/4, 3/4)
        for (double F : {0.02, 0.08, 0.14}) {
            EquilibriumResult r = find_equilibrium(PeriodicConfiguration(0, 1, {0.55}),
                                                   TiltedEnergy(h, F));
            double expected = 0.5 + std::asin(two_pi * F / k) / two_pi;
            CHECK(r.state.x[0] == doctest::Approx(expected).epsilon(1e-10));
            CHECK(r.hessian_spectrum[0] > 0);
        }
        // type (1,1): same on-site equation, x_{n+1} = x_n + 1
        EquilibriumResult r11 = find_equilibrium(PeriodicConfiguration(1, 1, {0.52}),
                                                 TiltedEnergy(h, 0.05));
        double expected = 0.5 + std::asin(two_pi * 0.05 / k) / two_pi;
        CHECK(r11.state.x[0] == doctest::Approx(expected).epsilon(1e-10));
    }

    TEST_CASE("classify: pinned, sliding, free chain")
    {
        double k = 1.0;
        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(k));
        FlowSettings s = fast_settings();
        // F below k/(2 pi): pinned
        VelocityVerdict v = classify(PeriodicConfiguration(0, 1, {0.1}), TiltedEnergy(h, 0.1), s);
        REQUIRE(v.kind == VelocityVerdict::Kind::Pinned);
        CHECK(v.pinned->residual < 1e-12);
        // F above k/(2 pi): sliding with positive velocity
        v = classify(PeriodicConfiguration(0, 1, {0.1}), TiltedEnergy(h, 0.2), s);
        REQUIRE(v.kind == VelocityVerdict::Kind::Sliding);
        CHECK(v.sliding->v > 0);
        CHECK(v.sliding->recurrence_error < s.recur_tol);

        // free chain: v = F exactly, T = 1/F
        GeneratingFunction fc = make_builtin(BuiltinSpec::standard_fk(0.0));
        v = classify(PeriodicConfiguration(0, 1, {0.0}), TiltedEnergy(fc, 0.25), s);
        REQUIRE(v.kind == VelocityVerdict::Kind::Sliding);
        CHECK(v.sliding->T == doctest::Approx(4.0).epsilon(1e-9));
        CHECK(v.sliding->v == doctest::Approx(0.25).epsilon(1e-9));
    }

    TEST_CASE("average velocity nondecreasing in F")
    {
        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(1.0));
        FlowSettings s = fast_settings();
        bool seen_sliding = false;
        int inversions = 0;
        double last_v = 0;
        for (int i = 0; i <= 15; ++i) {
            double F = 0.3 * i / 15;
            VelocityVerdict v = classify(PeriodicConfiguration(0, 1, {0.1}), TiltedEnergy(h, F), s);
            if (v.kind == VelocityVerdict::Kind::Sliding) {
                seen_sliding = true;
                if (v.sliding->v < last_v - 1e-9) ++inversions;
                last_v = v.sliding->v;
            } else if (v.kind == VelocityVerdict::Kind::Pinned && seen_sliding) {
                ++inversions;  // pinned after sliding would violate monotonicity
            }
        }
        CHECK(seen_sliding);
        CHECK(inversions == 0);
    }

    TEST_CASE("depinning force: analytic k/(2 pi) and method agreement")
    {
        for (double k : {0.5, 2.0}) {
            GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(k));
            double tol = 1e-4 * k;
            DepinningResult bis = depinning_force(0, 1, h, DepinningMethod::Bisection, tol);
            DepinningResult cont = depinning_force(0, 1, h, DepinningMethod::Continuation, tol);
            double expected = k / two_pi;
            CHECK(std::fabs(bis.F_d - expected) / expected < 1e-3);
            CHECK(std::fabs(cont.F_d - expected) / expected < 1e-3);
            CHECK(std::fabs(bis.F_d - cont.F_d) < 5 * tol);
            CHECK(bis.F_lo <= bis.F_d);
            CHECK(bis.F_d <= bis.F_hi);
            CHECK(bis.F_hi - bis.F_lo <= tol * 1.0001);
        }
        // independence from p for q = 1
        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(1.0));
        DepinningResult r = depinning_force(2, 1, h, DepinningMethod::Continuation, 1e-5);
        CHECK(r.F_d == doctest::Approx(1.0 / two_pi).epsilon(1e-4));
        // free chain: F_d = 0
        GeneratingFunction fc = make_builtin(BuiltinSpec::standard_fk(0.0));
        DepinningResult rz = depinning_force(0, 1, fc, DepinningMethod::Bisection, 1e-4);
        CHECK(rz.F_d < 1e-3);
    }

    TEST_CASE("hull function of a sliding state")
    {
        FlowSettings s = fast_settings();
        // free chain: X(alpha) = alpha + const exactly
        GeneratingFunction fc = make_builtin(BuiltinSpec::standard_fk(0.0));
        VelocityVerdict v = classify(PeriodicConfiguration(0, 1, {0.2}), TiltedEnergy(fc, 0.25), s);
        REQUIRE(v.kind == VelocityVerdict::Kind::Sliding);
        HullTable tab = extract_hull(v, 0.0);
        REQUIRE(tab.alpha.size() > 10);
        double c0 = tab.value[0] - tab.alpha[0];
        for (std::size_t i = 0; i < tab.alpha.size(); ++i)
            CHECK(tab.value[i] - tab.alpha[i] == doctest::Approx(c0).epsilon(1e-7));
        CHECK(tab.monotone_ok);

        // standard FK at F=0.3: monotone hull, clean wrap
        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(1.0));
        v = classify(PeriodicConfiguration(0, 1, {0.2}), TiltedEnergy(h, 0.3), s);
        REQUIRE(v.kind == VelocityVerdict::Kind::Sliding);
        tab = extract_hull(v, 0.0);
        CHECK(tab.max_monotonicity_violation < 10 * s.recur_tol);
        CHECK(tab.wrap_defect < 10 * s.recur_tol);
    }

    TEST_CASE("band escape aborts integration")
    {
        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(1.0));
        // two sites pulled far apart escape the declared band under strong tilt
        PeriodicConfiguration c(0, 2, {0.0, 3.9});
        FlowSettings s = fast_settings();
        CHECK_THROWS_AS(integrate(c, TiltedEnergy(h, 10.0), s, 100.0, 2), BandEscapeError);
    }
}
