#include <cmath>

#include "doctest.h"
#include "fk/ioc.hpp"

using namespace fk;

TEST_SUITE("ioc")
{
    TEST_CASE("equilibrium catalog (0,1): two states per period")
    {
        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(1.0));
        TiltedEnergy E(h, 0.0);
        EquilibriumCatalog cat = find_all_equilibria(0, 1, E);
        REQUIRE(cat.entries.size() == 2);
        CHECK(cat.entries[0].state.x[0] == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(cat.entries[0].morse_index == 1);
        CHECK(cat.entries[1].state.x[0] == doctest::Approx(0.5).epsilon(1e-10));
        CHECK(cat.entries[1].morse_index == 0);
        // energies: W(0) - W(1/2) = k / (2 pi^2), the depth of the well
        CHECK(cat.entries[0].energy - cat.entries[1].energy ==
              doctest::Approx(1.0 / (2 * M_PI * M_PI)).epsilon(1e-12));
        CHECK_THROWS_AS(find_all_equilibria(0, 1, E, 2), Error);
    }

    TEST_CASE("catalog recovers the double-well critical set at k=0.03, b=2")
    {
        GeneratingFunction dw = make_builtin(BuiltinSpec::double_well(0.03, 2.0));
        TiltedEnergy E(dw, 0.0);
        EquilibriumCatalog cat = find_all_equilibria(1, 2, E, 6, 0.75);
        double c = std::acos(0.5) / two_pi;  // 1/6
        // the anti-integrable chain persists at small k; every listed point
        // must appear in the catalog within the O(k) continuation distance
        std::vector<std::pair<double, double>> expected = {
            {-c, c}, {0, c}, {c, c}, {c, 0.5}, {c, 1 - c}, {c, 1}, {c, 1 + c},
            {0.5, 1 + c}, {-c, 0.5}, {-c, 1 - c}, {0, 1 - c}, {0.5, 1 - c},
            {1 - c, 1 - c}, {1 - c, 1}};
        for (auto [x0, x1] : expected) {
            bool found = false;
            for (const CatalogEntry& e : cat.entries)
                for (int m = -2; m <= 2 && !found; ++m)
                    if (std::fabs(e.state.x[0] - (x0 + m)) < 0.05 &&
                        std::fabs(e.state.x[1] - (x1 + m)) < 0.05)
                        found = true;
            INFO("expected critical point near (", x0, ",", x1, ")");
            CHECK(found);
        }
    }

    TEST_CASE("ioc construction and verification, (0,1)")
    {
        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(1.0));
        TiltedEnergy E(h, 0.0);
        EquilibriumCatalog cat = find_all_equilibria(0, 1, E);
        auto circles = build_ioc(0, 1, E, cat);
        REQUIRE(circles.size() == 1);
        IocReport rep = verify_ioc(circles[0], E);
        CHECK(rep.ordered);
        CHECK(rep.periodicity_defect < 1e-12);
        CHECK(rep.max_tangency < 1e-6);
        CHECK(rep.reconstruction_error < 1e-6);
        CHECK(rep.pass());
        // energies decrease along descent away from the saddle at x=0
        double Wprev = 1e300;
        bool decreasing = true;
        for (std::size_t i = 0; i < circles[0].configs.size() / 2; ++i) {
            double W = periodic_energy(circles[0].configs[i], E);
            // first half climbs from the minimum at 1/2-1 toward the saddle
            if (i > 0 && W < Wprev - 1e-12) decreasing = false;
            Wprev = W;
        }
        CHECK(decreasing);
    }

    TEST_CASE("two distinct IOCs for the two-well chain")
    {
        GeneratingFunction dw = make_builtin(BuiltinSpec::double_well(0.03, 2.0));
        TiltedEnergy E(dw, 0.0);
        EquilibriumCatalog cat = find_all_equilibria(1, 2, E, 6, 0.75);
        auto circles = build_ioc(1, 2, E, cat);
        REQUIRE(circles.size() >= 2);
        for (const auto& circle : circles) {
            IocReport rep = verify_ioc(circle, E);
            CHECK(rep.ordered);
            CHECK(rep.max_tangency < 1e-6);
            CHECK(rep.reconstruction_error < 1e-6);
        }
        // the third circle through the index-2 points exists on request
        IocBuildOptions opt;
        opt.include_index2 = true;
        auto more = build_ioc(1, 2, E, cat, opt);
        CHECK(more.size() >= circles.size());
    }

    TEST_CASE("exact integrable circle passes all checks")
    {
        // k=0: the rigid family x_n = n w + s is an exact IOC
        GeneratingFunction fc = make_builtin(BuiltinSpec::standard_fk(0.0));
        TiltedEnergy E(fc, 0.0);
        OrderedCircleSample sample;
        sample.p = 1;
        sample.q = 2;
        int M = 501;
        for (int i = 0; i < M; ++i) {
            double s = double(i) / (M - 1);
            sample.s.push_back(s);
            sample.configs.push_back(PeriodicConfiguration::rigid(1, 2, s));
        }
        IocReport rep = verify_ioc(sample, E);
        CHECK(rep.ordered);
        CHECK(rep.periodicity_defect < 1e-14);
        CHECK(rep.max_tangency == 0.0);  // flow vanishes identically
        CHECK(rep.reconstruction_error < 1e-8);

        // negative control: a deliberately perturbed sample fails
        OrderedCircleSample bad = sample;
        bad.configs[M / 2].x[0] += 0.03;
        IocReport brep = verify_ioc(bad, E);
        CHECK(brep.reconstruction_error > 1e-4);
    }

    TEST_CASE("minimax: peierls-nabarro barrier and symmetric saddle pair")
    {
        // (0,1): saddle at x=1 between minima 1/2 and 3/2, height k/(2 pi^2)
        double k = 1.0;
        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(k));
        TiltedEnergy E(h, 0.0);
        MinimaxResult r = minimax(PeriodicConfiguration::constant(0.5),
                                  PeriodicConfiguration::constant(1.5), E);
        CHECK(std::fabs(std::fmod(r.saddle.x[0], 1.0)) < 1e-8);
        double barrier = r.height - periodic_energy(PeriodicConfiguration::constant(0.5), E);
        CHECK(barrier == doctest::Approx(k / (2 * M_PI * M_PI)).epsilon(1e-10));
        CHECK(r.morse_index == 1);
        CHECK(r.gradient_norm < 1e-9);

        // the symmetric double well has two equal-height minimax saddles
        GeneratingFunction dw = make_builtin(BuiltinSpec::double_well(0.03, 2.0));
        TiltedEnergy Edw(dw, 0.0);
        double c = std::acos(0.5) / two_pi;
        PeriodicConfiguration mA = find_equilibrium(PeriodicConfiguration(1, 2, {-c, c}), Edw).state;
        PeriodicConfiguration mB =
            find_equilibrium(PeriodicConfiguration(1, 2, {c, 1 - c}), Edw).state;
        MinimaxOptions up, down;
        up.bend = {0.08, 0.0};
        down.bend = {-0.08, 0.0};
        MinimaxResult r1 = minimax(mA, mB, Edw, up);
        MinimaxResult r2 = minimax(mA, mB, Edw, down);
        CHECK(std::fabs(r1.height - r2.height) < 1e-8);
        CHECK(r1.morse_index == 1);
        CHECK(r2.morse_index == 1);
        CHECK(std::fabs(r1.saddle.x[0] - (-r2.saddle.x[0])) < 1e-6);  // mirror pair
        // brute-force grid oracle confirms the saddle location to 1e-4
        double best_x0 = 0, best_x1 = 0, best_err = 1e300;
        for (int i = 0; i <= 140; ++i)
            for (int j = 0; j <= 140; ++j) {
                double x0 = -0.35 + 0.7 * i / 140.0;
                double x1 = 0.3 + 0.4 * j / 140.0;
                Vec g = rhs(PeriodicConfiguration(1, 2, {x0, x1}), Edw);
                double err = sup_norm(g);
                // restrict to the saddle neighbourhood (positive x0 branch)
                if (x0 > 0.05 && err < best_err) {
                    best_err = err;
                    best_x0 = x0;
                    best_x1 = x1;
                }
            }
        CHECK(std::fabs(best_x0 - r1.saddle.x[0]) < 1e-2);
        CHECK(std::fabs(best_x1 - r1.saddle.x[1]) < 1e-2);

        CHECK_THROWS_AS(minimax(mA, mA, Edw), Error);
    }
}
