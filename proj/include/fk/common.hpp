#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace fk {

inline constexpr double two_pi = 6.283185307179586476925286766559;

using Vec = std::vector<double>;

/// Base class for all errors thrown by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct ModelError : Error {
    using Error::Error;
};
struct NumericalError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

// Floor division / modulus that behave for negative numerators.
inline long long floor_div(long long a, long long b)
{
    long long q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

inline long long floor_mod(long long a, long long b)
{
    return a - floor_div(a, b) * b;
}

inline long long gcd_ll(long long a, long long b)
{
    a = std::llabs(a);
    b = std::llabs(b);
    while (b) {
        long long t = a % b;
        a = b;
        b = t;
    }
    return a;
}

inline double sup_norm(const Vec& v)
{
    double m = 0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

inline double sup_dist(const Vec& a, const Vec& b)
{
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

// splitmix64; used wherever reproducible sampling is needed.
struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t seed = 0x9e3779b97f4a7c15ull) : state(seed) {}

    std::uint64_t next_u64()
    {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0,1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    long long uniform_int(long long lo, long long hi)  // inclusive
    {
        return lo + (long long)(next_u64() % (std::uint64_t)(hi - lo + 1));
    }
};

}  // namespace fk
