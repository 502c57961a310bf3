#include <cmath>

#include "doctest.h"
#include "fk/disc.hpp"

using namespace fk;

namespace {

PeriodicConfiguration stable_01(const GeneratingFunction& h, double F)
{
    return find_equilibrium(PeriodicConfiguration(0, 1, {0.55}), TiltedEnergy(h, F)).state;
}

// reflect a (0,1) window about site 0: advancing for the reversed energy
// becomes retreating for the original
WindowConfiguration reflect(const WindowConfiguration& w)
{
    WindowConfiguration out;
    out.l = -w.r();
    out.values.assign(w.values.rbegin(), w.values.rend());
    out.left_asym = w.right_asym;
    out.right_asym = w.left_asym;
    return out;
}

}  // namespace

TEST_SUITE("disc")
{
    TEST_CASE("equilibrium advancing discommensuration at F=0 (classical kink)")
    {
        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(1.0));
        TiltedEnergy E(h, 0.0);
        PeriodicConfiguration xm = PeriodicConfiguration::constant(0.5);
        PeriodicConfiguration xp = PeriodicConfiguration::constant(1.5);
        HeteroclinicSolution z = find_equilibrium_disc(xm, xp, DiscKind::Advancing, E);
        CHECK(z.residual < 1e-10);
        CHECK(z.tails_monotone);
        // tail rate should match log of the map multiplier: tau = k gives
        // lambda + 1/lambda = 2 + k, lambda = (3+sqrt(5))/2 for k=1
        double lam = 0.5 * (3 + std::sqrt(5.0));
        CHECK(z.decay_left == doctest::Approx(std::log(lam)).epsilon(0.02));
        CHECK(z.decay_right == doctest::Approx(std::log(lam)).epsilon(0.02));
        // strictly ordered against its T_{qp} translate on the overlap
        WindowConfiguration t = translate(z.window, 1, 0);
        CHECK(compare(t, z.window, 0) == Order::LessStrict);
        // window increases through the gap
        for (std::size_t i = 1; i < z.window.values.size(); ++i)
            CHECK(z.window.values[i] >= z.window.values[i - 1]);

        // translates approach the asymptotes: tail gaps decay geometrically
        double g1 = std::fabs(z.window.site(z.window.l) - xm.site(z.window.l));
        double g2 = std::fabs(z.window.site(z.window.l + 5) - xm.site(z.window.l + 5));
        CHECK(g2 > g1);  // grows toward the interface
        CHECK(g2 / g1 == doctest::Approx(std::pow(lam, 5)).epsilon(0.2));
    }

    TEST_CASE("equilibrium disc under tilt, retreating via reversed energy")
    {
        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(1.0));
        double F = 0.001;  // below the one-sided depinning threshold (about 0.002)
        TiltedEnergy E(h, F);
        PeriodicConfiguration xm = stable_01(h, F);
        PeriodicConfiguration xp = translate(xm, 0, 1);
        HeteroclinicSolution adv = find_equilibrium_disc(xm, xp, DiscKind::Advancing, E);
        CHECK(adv.residual < 1e-10);

        // retreating for h via the advancing solver on the reversed energy
        GeneratingFunction hr = reversed(h);
        TiltedEnergy Er(hr, F);
        // the reversed standard FK has its on-site terms on the second slot;
        // its (0,1) equilibria coincide with the original ones
        CHECK(sup_norm(rhs(xm, Er)) < 1e-12);
        HeteroclinicSolution radv = find_equilibrium_disc(xm, xp, DiscKind::Advancing, Er);
        WindowConfiguration retr = reflect(radv.window);
        // the reflected window is a retreating equilibrium of the original E
        Vec defect = rhs(retr, E);
        CHECK(sup_norm(defect) < 1e-10);
        // and the direct retreating solve agrees in residual quality
        HeteroclinicSolution direct = find_equilibrium_disc(xm, xp, DiscKind::Retreating, E);
        CHECK(direct.residual < 1e-10);
        for (std::size_t i = 1; i < direct.window.values.size(); ++i)
            CHECK(direct.window.values[i] <= direct.window.values[i - 1] + 1e-12);

        CHECK_THROWS_AS(find_equilibrium_disc(xm, xm, DiscKind::Advancing, E), Error);
    }

    TEST_CASE("sliding advancing discommensuration between the thresholds")
    {
        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(1.0));
        double F = 0.08;  // between F_d(0/1+) ~ 0.002 and F_d(0/1) ~ 0.159
        TiltedEnergy E(h, F);
        PeriodicConfiguration xm = stable_01(h, F);
        PeriodicConfiguration xp = translate(xm, 0, 1);
        DiscOptions opt;
        opt.settings.t_max = 500;
        SlidingFront fr = find_sliding_disc(xm, xp, DiscKind::Advancing, E, opt);
        REQUIRE(fr.found);
        CHECK(fr.T > 0);
        CHECK(fr.v == doctest::Approx(-1.0 / fr.T));
        CHECK(fr.recurrence_error < opt.settings.recur_tol);

        // F = 0, symmetric: the front is pinned
        TiltedEnergy E0(h, 0.0);
        DiscOptions opt0;
        opt0.settings.t_max = 200;
        SlidingFront pinned = find_sliding_disc(PeriodicConfiguration::constant(0.5),
                                                PeriodicConfiguration::constant(1.5),
                                                DiscKind::Advancing, E0, opt0);
        CHECK_FALSE(pinned.found);
        CHECK(std::fabs(pinned.displacement) < 1.0);
    }

    TEST_CASE("coexistence: traveling front and equilibrium disc at one tilt")
    {
        double k = 16.0;
        GeneratingFunction h = make_builtin(BuiltinSpec::bistable(k));
        double F = leveling_tilt(h);
        WellSet w = find_tilted_wells(h, F);
        REQUIRE(w.minima.size() == 2);
        double a = w.minima[0], b = w.minima[1];
        TiltedEnergy E(h, F);

        DiscOptions fopt;
        fopt.settings.t_max = 3000;
        fopt.half_width = 120;
        SlidingFront fr = find_sliding_disc(PeriodicConfiguration::constant(a),
                                            PeriodicConfiguration::constant(b),
                                            DiscKind::Advancing, E, fopt);
        REQUIRE(fr.found);
        CHECK(fr.T > 0);
        CHECK(fr.v < 0);
        CHECK(fr.recurrence_error < 1e-6);

        DiscOptions eopt;
        eopt.half_width = 100;
        HeteroclinicSolution z = find_equilibrium_disc(PeriodicConfiguration::constant(b),
                                                       PeriodicConfiguration::constant(a + 1),
                                                       DiscKind::Advancing, E, eopt);
        CHECK(z.residual < 1e-10);
    }

    TEST_CASE("gluing")
    {
        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(1.0));
        TiltedEnergy E(h, 0.0);
        PeriodicConfiguration y = PeriodicConfiguration::constant(0.5);
        HeteroclinicSolution z = find_equilibrium_disc(y, translate(y, 0, 1),
                                                       DiscKind::Advancing, E);

        // self-gluing: zero mismatch, zero junction speed
        GluingPlan self;
        self.pieces = {y, y};
        self.cuts = {0};
        GluingReport rs = glue(self, E);
        CHECK(rs.delta == 0.0);
        CHECK(rs.max_junction_speed < 1e-14);

        // y | disc | T_{q'p'} y, junction speed bounded by C delta
        GluingPlan plan;
        plan.pieces = {y, z.window, translate(y, 1, 1)};
        plan.cuts = {-14, 14};
        GluingReport rep = glue(plan, E);
        CHECK(rep.delta > 0);
        CHECK(rep.bound_ok);
        CHECK(rep.max_junction_speed <= rep.C * rep.delta * (1 + 1e-6) + 1e-12);

        // junction speed scales linearly with delta across cut positions
        std::vector<double> deltas, speeds;
        for (long long cut : {-16, -13, -10, -7}) {
            GluingPlan p2;
            p2.pieces = {y, z.window, translate(y, 1, 1)};
            p2.cuts = {cut, 18};
            GluingReport r2 = glue(p2, E);
            deltas.push_back(r2.delta);
            speeds.push_back(r2.max_junction_speed);
        }
        for (std::size_t i = 0; i + 1 < deltas.size(); ++i) {
            CHECK(deltas[i] < deltas[i + 1]);
            double ratio = speeds[i] / deltas[i];
            CHECK(ratio <= rep.C * (1 + 1e-6));
            CHECK(ratio >= rep.C / 2);  // slope within a factor 2 of C
        }

        // requested delta enforcement
        GluingPlan tight = plan;
        tight.requested_delta = 1e-18;
        CHECK_THROWS_AS(glue(tight, E), NumericalError);
    }

    TEST_CASE("mediant configuration from a kink")
    {
        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(1.0));
        TiltedEnergy E(h, 0.0);
        PeriodicConfiguration y = PeriodicConfiguration::constant(0.5);
        DiscOptions opt;
        opt.half_width = 60;
        HeteroclinicSolution z = find_equilibrium_disc(y, translate(y, 0, 1),
                                                       DiscKind::Advancing, E, opt);

        MediantConfigResult r6 = build_mediant_config(y, z, 1, 1, 6, E);
        CHECK(r6.config.p == 1);
        CHECK(r6.config.q == 7);
        // lemma bound |xdot| < 2 eps with eps = C delta
        CHECK(r6.max_speed <= 2 * E.h.h12_sup_on_band() * r6.delta + 1e-12);

        // residual decreases with n (tail decay)
        double prev = 1e300;
        for (int n : {4, 8, 12, 16}) {
            MediantConfigResult r = build_mediant_config(y, z, 1, 1, n, E);
            CHECK(r.max_speed < prev);
            prev = r.max_speed;
        }

        // m-fold repetition: type (n p + m p', n q + m q')
        MediantConfigResult rm = build_mediant_config(y, z, 1, 1, 16, E, 2);
        CHECK(rm.config.p == 2);
        CHECK(rm.config.q == 18);
        CHECK(rm.max_speed < 0.2);

        // the mediant state seeds a depinning continuation
        EquilibriumResult eq = find_equilibrium(r6.config, E);
        CHECK(eq.residual < 1e-12);

        // requested-delta enforcement reports "use larger n"
        CHECK_THROWS_AS(build_mediant_config(y, z, 1, 1, 6, E, 1, 1e-6), NumericalError);
    }

    TEST_CASE("truncated morse index: toeplitz oracle")
    {
        double k = 6.0;
        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(k));
        TiltedEnergy E(h, 0.0);
        // constant x = 0 (potential maximum): A has diagonal k-2, off-diag 1,
        // eigenvalues (k-2) + 2 cos(j pi / (n+1)), all positive -> index n
        PeriodicConfiguration top = PeriodicConfiguration::constant(0.0);
        for (long long n : {1, 3, 7, 12}) {
            TruncatedMorse tm = morse_index_truncated(top, 0, n + 1, E);
            CHECK(tm.dimension == (int)n);
            CHECK(tm.index == (int)n);
            double expected_edge = (k - 2) + 2 * std::cos(M_PI / (n + 1));
            CHECK(tm.edge == doctest::Approx(expected_edge).epsilon(1e-10));
        }
        // constant x = 1/2 (minimum): A negative definite -> index 0
        PeriodicConfiguration bot = PeriodicConfiguration::constant(0.5);
        for (long long n : {1, 5, 9}) {
            TruncatedMorse tm = morse_index_truncated(bot, 0, n + 1, E);
            CHECK(tm.index == 0);
        }
        // scalar case: index = (beta_1 > 0)
        TruncatedMorse s1 = morse_index_truncated(top, 0, 2, E);
        CHECK(s1.dimension == 1);
        CHECK(s1.index == 1);
        CHECK_THROWS_AS(morse_index_truncated(top, 0, 1, E), Error);

        // nested windows differ by at most the boundary effect
        GeneratingFunction h1 = make_builtin(BuiltinSpec::standard_fk(1.0));
        TiltedEnergy E1(h1, 0.0);
        HeteroclinicSolution z = find_equilibrium_disc(PeriodicConfiguration::constant(0.5),
                                                       PeriodicConfiguration::constant(1.5),
                                                       DiscKind::Advancing, E1);
        int prev_index = -1;
        for (long long half : {5, 10, 15, 20}) {
            TruncatedMorse tm = morse_index_truncated(z.window, -half, half, E1);
            if (prev_index >= 0) CHECK(std::abs(tm.index - prev_index) <= 2);
            prev_index = tm.index;
        }
    }

    TEST_CASE("periodic hessian spectra: closed forms")
    {
        // (0,1) standard FK: single eigenvalue -k at x=0, +k at x=1/2
        double k = 0.7;
        GeneratingFunction h = make_builtin(BuiltinSpec::standard_fk(k));
        TiltedEnergy E(h, 0.0);
        HessianSummary at0 = hessian_spectrum_periodic(PeriodicConfiguration::constant(0.0), E);
        REQUIRE(at0.eigenvalues.size() == 1);
        CHECK(at0.eigenvalues[0] == doctest::Approx(-k).epsilon(1e-12));
        CHECK(at0.morse_index == 1);
        HessianSummary at5 = hessian_spectrum_periodic(PeriodicConfiguration::constant(0.5), E);
        CHECK(at5.eigenvalues[0] == doctest::Approx(k).epsilon(1e-12));
        CHECK(at5.morse_index == 0);

        // (1,2) double well: eigenvalues 2k + (V''(x0)+V''(x1))/2
        //                     +- sqrt((V''(x0)-V''(x1))^2/4 + 4k^2)
        double kk = 0.03, bw = 2.0;
        GeneratingFunction dw = make_builtin(BuiltinSpec::double_well(kk, bw));
        TiltedEnergy Edw(dw, 0.0);
        auto Vpp = [&](double x) {
            return std::cos(two_pi * x) - bw * std::cos(2 * two_pi * x);
        };
        double c = std::acos(1.0 / bw) / two_pi;
        PeriodicConfiguration saddle(1, 2, {c, 0.5});
        HessianSummary hs = hessian_spectrum_periodic(saddle, Edw);
        double mean = 2 * kk + 0.5 * (Vpp(c) + Vpp(0.5));
        double rad = std::sqrt(0.25 * std::pow(Vpp(c) - Vpp(0.5), 2) + 4 * kk * kk);
        CHECK(hs.eigenvalues[0] == doctest::Approx(mean - rad).epsilon(1e-10));
        CHECK(hs.eigenvalues[1] == doctest::Approx(mean + rad).epsilon(1e-10));
    }
}
