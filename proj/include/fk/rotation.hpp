#pragma once

// Farey machinery: minimal-denominator neighbours, mediant sequences toward
// p/q from either side, and the one-sided depinning limit F_d(p/q+-) via
// mediants with Aitken extrapolation.

#include <future>
#include <vector>

#include "fk/flow.hpp"

namespace fk {

struct Rational {
    long long p = 0, q = 1;
    double value() const { return double(p) / q; }
};

struct FareyPair {
    Rational center;
    Rational upper;  // p'/q' > p/q with |p' q - p q'| = 1, q' minimal
    Rational lower;  // p'/q' < p/q likewise
};

/// Minimal-denominator Farey neighbours of a reduced p/q.  For q = 1 the
/// neighbours are (p+-1)/1; the choice is the minimal-denominator convention.
inline FareyPair farey_neighbours(long long p, long long q)
{
    if (q < 1) throw Error("farey_neighbours: q >= 1 required");
    bool reduced = (p == 0) ? (q == 1) : (gcd_ll(p, q) == 1);
    if (!reduced) throw Error("farey_neighbours: p/q must be in lowest terms");
    FareyPair out;
    out.center = {p, q};
    if (q == 1) {
        out.upper = {p + 1, 1};
        out.lower = {p - 1, 1};
        return out;
    }
    // p' q - p q' = +1 for the upper neighbour, -1 for the lower; the unique
    // q' in 1..q-1 comes from q' = -+ p^{-1} mod q
    auto solve = [&](int sign) -> Rational {
        for (long long qp = 1; qp < q; ++qp) {
            long long num = sign + p * qp;
            if (num % q == 0) return {num / q, qp};
        }
        throw Error("farey_neighbours: no solution (input not reduced?)");
    };
    out.upper = solve(+1);
    out.lower = solve(-1);
    return out;
}

enum class Side { Plus, Minus };

/// Mediants (n p + p')/(n q + q') for n = 1..n_max, strictly monotone toward
/// p/q from the requested side.
inline std::vector<Rational> mediant_sequence(long long p, long long q, Side side, int n_max)
{
    if (n_max < 1) throw Error("mediant_sequence: n_max >= 1 required");
    FareyPair fp = farey_neighbours(p, q);
    Rational nb = (side == Side::Plus) ? fp.upper : fp.lower;
    std::vector<Rational> out;
    out.reserve(n_max);
    for (int n = 1; n <= n_max; ++n) out.push_back({n * p + nb.p, n * q + nb.q});
    return out;
}

struct LimitEstimate {
    Side side = Side::Plus;
    long long p = 0, q = 1;
    std::vector<Rational> mediants;
    std::vector<double> fd_values;   // F_d at each mediant, by index
    std::vector<double> increments;  // fd_values[i] - fd_values[i-1]
    double estimate = 0;             // Aitken extrapolant over the last three samples
    double last_raw = 0;             // final raw sample, reported beside the extrapolant
    double fd_center = -1;           // F_d(p/q) when the bound check ran
    bool bound_ok = true;            // -tol_F <= estimate <= F_d(p/q) + tol_F
    bool complete = true;            // false when some depinning run was unresolved
    std::string note;
};

struct FdLimitOptions {
    int n_max = 8;
    double tol_F = 1e-5;
    DepinningMethod method = DepinningMethod::Continuation;
    FlowSettings settings;
    int jobs = 2;
    bool check_bound = true;  // also compute F_d(p/q) and verify the inequality
};

/// F_d(p/q+-) by computing F_d along the mediant sequence and extrapolating.
/// The F_d evaluations are independent and run on a small worker pool;
/// assembly is deterministic by index.
inline LimitEstimate fd_limit(long long p, long long q, Side side, const GeneratingFunction& gf,
                              const FdLimitOptions& opt = {})
{
    if (opt.n_max < 3) throw Error("fd_limit: n_max >= 3 required");
    LimitEstimate out;
    out.side = side;
    out.p = p;
    out.q = q;
    out.mediants = mediant_sequence(p, q, side, opt.n_max);
    out.fd_values.assign(out.mediants.size(), 0.0);
    std::vector<int> status(out.mediants.size(), 0);

    std::atomic<std::size_t> cursor{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = cursor.fetch_add(1);
            if (i >= out.mediants.size()) return;
            const Rational& r = out.mediants[i];
            try {
                DepinningResult d = depinning_force((int)r.p, (int)r.q, gf, opt.method, opt.tol_F,
                                                    opt.settings);
                out.fd_values[i] = d.F_d;
                status[i] = d.resolved ? 1 : 2;
            } catch (const Error&) {
                status[i] = 3;
            }
        }
    };
    int jobs = std::max(1, opt.jobs);
    std::vector<std::future<void>> pool;
    for (int j = 0; j < jobs - 1; ++j) pool.push_back(std::async(std::launch::async, worker));
    worker();
    for (auto& f : pool) f.get();

    for (std::size_t i = 0; i < status.size(); ++i) {
        if (status[i] != 1) {
            out.complete = false;
            out.note = "mediant " + std::to_string(out.mediants[i].p) + "/" +
                       std::to_string(out.mediants[i].q) + " unresolved; partial results returned";
            out.mediants.resize(i);
            out.fd_values.resize(i);
            break;
        }
    }
    for (std::size_t i = 1; i < out.fd_values.size(); ++i)
        out.increments.push_back(out.fd_values[i] - out.fd_values[i - 1]);
    if (out.fd_values.size() >= 3) {
        double a = out.fd_values[out.fd_values.size() - 3];
        double b = out.fd_values[out.fd_values.size() - 2];
        double c = out.fd_values[out.fd_values.size() - 1];
        double denom = c - 2 * b + a;
        out.estimate = (std::fabs(denom) > 1e-15) ? c - (c - b) * (c - b) / denom : c;
    } else if (!out.fd_values.empty()) {
        out.estimate = out.fd_values.back();
        out.complete = false;
    }
    if (!out.fd_values.empty()) out.last_raw = out.fd_values.back();
    if (opt.check_bound && !out.fd_values.empty()) {
        try {
            DepinningResult center =
                depinning_force((int)p, (int)q, gf, opt.method, opt.tol_F, opt.settings);
            out.fd_center = center.F_d;
            out.bound_ok =
                out.estimate >= -opt.tol_F && out.estimate <= center.F_d + opt.tol_F;
            if (!out.bound_ok)
                out.note += (out.note.empty() ? "" : "; ") +
                            std::string("estimate violates 0 <= F_d(p/q+-) <= F_d(p/q)");
        } catch (const Error&) {
            out.fd_center = -1;
        }
    }
    return out;
}

}  // namespace fk
