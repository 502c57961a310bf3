#include <cmath>

#include "doctest.h"
#include "fk/model.hpp"

using namespace fk;

TEST_SUITE("model")
{
    TEST_CASE("standard FK values and derivatives")
    {
        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(1.0));
        // h(0,0.5) = 0.125 + 1/(4 pi^2)
        CHECK(h.h(0.0, 0.5) == doctest::Approx(0.125 + 1.0 / (4 * M_PI * M_PI)).epsilon(1e-14));
        HBundle b = h.eval(0.0, 0.3);
        CHECK(b.h1 == doctest::Approx(-0.3).epsilon(1e-14));
        CHECK(b.h2 == doctest::Approx(0.3).epsilon(1e-14));
        // quadratic coupling: h12 = -1 everywhere
        Rng rng(1);
        for (int i = 0; i < 50; ++i)
            CHECK(h.h12(rng.uniform(-2, 2), rng.uniform(-2, 2)) == -1.0);
    }

    TEST_CASE("double well minima at +-c with cos(2 pi c) = 1/b")
    {
        double k = 0.03, bw = 2.0;
        GeneratingFunction h = make_builtin(BuiltinSpec::double_well(k, bw));
        double c = std::acos(1.0 / bw) / two_pi;
        CHECK(c == doctest::Approx(1.0 / 6).epsilon(1e-14));
        // V'(x) = h1(x,x) + h2(x,x); vanishes at +-c, 0, 1/2
        for (double x : {c, -c, 0.0, 0.5}) {
            HBundle b = h.eval(x, x);
            CHECK(std::fabs(b.h1 + b.h2) < 1e-14);
        }
        // V'' > 0 at the minima
        auto Vpp = [&](double x) { return h.eval(x, x).h11 + 2 * h.eval(x, x).h12 + h.eval(x, x).h22; };
        CHECK(Vpp(c) > 0);
        CHECK(Vpp(0.0) < 0);
        // h1 + h2 on the diagonal equals the on-site V'
        auto Vp = [&](double x) {
            return std::sin(two_pi * x) / two_pi - bw * std::sin(2 * two_pi * x) / (2 * two_pi);
        };
        Rng rng(2);
        for (int i = 0; i < 100; ++i) {
            double x = rng.uniform(-1, 2);
            HBundle b = h.eval(x, x);
            CHECK(b.h1 + b.h2 == doctest::Approx(Vp(x)).epsilon(1e-12));
        }
        CHECK_THROWS_AS(make_builtin(BuiltinSpec::double_well(0.03, 0.9)), ModelError);
    }

    TEST_CASE("mane lift fixed points and twist bound")
    {
        GeneratingFunction h = make_builtin(BuiltinSpec::mane());
        detail::CircleLift lift(0.25, 0.5, 0.75, 0.1, 0.1);
        CHECK(lift.g(0.0) == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(lift.g(0.5) == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(lift.g(1.0) == doctest::Approx(1.0).epsilon(1e-13));
        // every point (x,0) with g(x)=x is a fixed point of the induced map:
        // h2(x, g(x)) = 0 and -h1(x, g(x)) = 0
        for (double x : {0.0, 0.5}) {
            HBundle b = h.eval(x, lift.g(x));
            CHECK(std::fabs(b.h2) < 1e-14);
            CHECK(std::fabs(b.h1) < 1e-14);
        }
        // min(-h12) = min g' >= about 1/2
        ModelReport rep = verify_properties(h, 1500);
        CHECK(rep.min_minus_h12_on_band >= 0.49);
        CHECK(rep.min_minus_h12_on_band <= 0.52);
        CHECK(rep.twist_ok);
        // periodicity of g - id: g(x+1) = g(x)+1
        Rng rng(3);
        for (int i = 0; i < 100; ++i) {
            double x = rng.uniform(-3, 3);
            CHECK(lift.g(x + 1) == doctest::Approx(lift.g(x) + 1).epsilon(1e-12));
        }
    }

    TEST_CASE("verify_properties: periodicity and derivative consistency")
    {
        for (auto spec : {BuiltinSpec::standard_fk(1.0), BuiltinSpec::double_well(0.03, 2.0),
                          BuiltinSpec::bistable(16.0), BuiltinSpec::mane()}) {
            GeneratingFunction h = make_builtin(spec);
            ModelReport rep = verify_properties(h, 1000);
            INFO(h.name());
            CHECK(rep.max_periodicity_violation < 1e-12);
            CHECK(rep.max_first_derivative_fd_error < 1e-6);
            CHECK(rep.max_second_derivative_fd_error < 2e-5);
            CHECK(rep.twist_ok);
        }
    }

    TEST_CASE("verify_properties: broken periodicity is reported")
    {
        // negative control: inject a period-2 potential
        auto bad = [](double x, double xp) {
            double d = xp - x;
            return 0.5 * d * d + 0.01 * std::cos(M_PI * x);
        };
        GeneratingFunction h = from_plain_h("broken", bad, 1.0, Band{-3, 4});
        ModelReport rep = verify_properties(h, 500);
        CHECK(rep.max_periodicity_violation > 1e-4);
        CHECK(rep.fd_derivatives);
    }

    TEST_CASE("tilt identity")
    {
        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(0.7));
        TiltedEnergy E(h, 0.123);
        Rng rng(4);
        for (int i = 0; i < 200; ++i) {
            double x = rng.uniform(-2, 2), xp = x + rng.uniform(-1, 2);
            CHECK(E.eval(x, xp).h == doctest::Approx(h.h(x, xp) - 0.123 * x).epsilon(1e-14));
            CHECK(E.eval(x + 1, xp + 1).h - E.eval(x, xp).h ==
                  doctest::Approx(-0.123).epsilon(1e-12));
        }
        CHECK_THROWS_AS(TiltedEnergy(h, -0.1), ModelError);
    }

    TEST_CASE("modify_band: identity on the band, C1/C2 seam, twist preserved")
    {
        GeneratingFunction h = make_builtin(BuiltinSpec::mane());
        const int M = -2, N = 2;
        GeneratingFunction ht = modify_band(h, M, N);

        // idempotent on the band
        Rng rng(5);
        for (int i = 0; i < 200; ++i) {
            double x = rng.uniform(-1, 1);
            double s = rng.uniform(M, N);
            HBundle a = h.eval(x, x + s), b = ht.eval(x, x + s);
            CHECK(a.h == b.h);
            CHECK(a.h1 == b.h1);
            CHECK(a.h2 == b.h2);
        }
        // value and first derivatives match at both band edges
        for (int i = 0; i < 40; ++i) {
            double x = rng.uniform(-1, 1);
            for (int E : {M, N}) {
                HBundle inside = h.eval(x, x + E);
                HBundle outside = ht.eval(x, x + E + (E == N ? 1e-12 : -1e-12));
                CHECK(std::fabs(inside.h - outside.h) < 1e-9);
                CHECK(std::fabs(inside.h1 - outside.h1) < 1e-9);
                CHECK(std::fabs(inside.h2 - outside.h2) < 1e-9);
            }
        }
        // h12 formula outside the band: htilde12(x,x') = -j((x'-N+x)/2)
        for (int i = 0; i < 40; ++i) {
            double x = rng.uniform(-1, 1);
            double s = rng.uniform(0.1, 2.0);
            HBundle b = ht.eval(x, x + N + s);
            double mid = x + 0.5 * s;
            CHECK(b.h12 == doctest::Approx(h.eval(mid, mid + N).h12).epsilon(1e-12));
            // finite-difference cross check of the analytic h12 = d(h1)/dx'
            double d = 1e-5;
            double fd = (ht.h1(x, x + N + s + d) - ht.h1(x, x + N + s - d)) / (2 * d);
            CHECK(std::fabs(fd - b.h12) < 1e-6);
            CHECK(b.h12 <= -ht.c() * (1 - 1e-9));
        }
        // for the standard FK model the construction reproduces h exactly
        GeneratingFunction fk1 = make_builtin(BuiltinSpec::standard_fk(1.0));
        GeneratingFunction fk1t = modify_band(fk1, -1, 2);
        for (int i = 0; i < 100; ++i) {
            double x = rng.uniform(-1, 1);
            double s = rng.uniform(-4, 5);
            CHECK(fk1t.h(x, x + s) == doctest::Approx(fk1.h(x, x + s)).epsilon(1e-11));
            CHECK(fk1t.h1(x, x + s) == doctest::Approx(fk1.h1(x, x + s)).epsilon(1e-10));
        }
        CHECK_THROWS_AS(modify_band(h, 3, 3), ModelError);
    }

    TEST_CASE("bistable wells and leveling tilt")
    {
        GeneratingFunction h = make_builtin(BuiltinSpec::bistable(16.0));
        WellSet w0 = find_tilted_wells(h, 0.0);
        REQUIRE(w0.minima.size() == 2);
        REQUIRE(w0.maxima.size() == 2);
        double F = leveling_tilt(h);
        CHECK(F > 0);
        WellSet w = find_tilted_wells(h, F);
        REQUIRE(w.minima.size() == 2);
        double a = w.minima[0], b = w.minima[1];
        auto U = [&](double x) { return h.h(x, x) - F * x; };
        CHECK(U(b) == doctest::Approx(U(a + 1)).epsilon(1e-10));
        // the well at a sits above the well at b by exactly F
        CHECK(U(a) - U(b) == doctest::Approx(F).epsilon(1e-8));
    }
}
