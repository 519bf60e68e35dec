#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace fedsim {

/// splitmix64 finalizer; used to derive independent seeds from a base seed
/// plus stream identifiers (client id, round, purpose tag).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ splitmix64(b));
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix_seed(mix_seed(a, b), c);
}

/// Deterministic random stream. mt19937_64 is bit-exact across platforms and
/// all distributions below are implemented here rather than via <random>'s
/// implementation-defined distribution objects, so identical seeds give
/// identical draws everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1) with 53 bits of mantissa.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi], inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (hi < lo) throw std::invalid_argument("Rng::uniform_int: hi < lo");
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(gen_());
        // rejection sampling to avoid modulo bias
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t draw;
        do {
            draw = gen_();
        } while (draw >= limit);
        return lo + static_cast<std::int64_t>(draw % span);
    }

    /// Standard normal via Box-Muller (no cached spare).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Gamma(alpha, 1) via Marsaglia-Tsang; alpha < 1 handled with the
    /// usual boost Gamma(alpha) = Gamma(alpha+1) * U^(1/alpha).
    double gamma(double alpha) {
        if (alpha <= 0.0) throw std::invalid_argument("Rng::gamma: alpha must be > 0");
        if (alpha < 1.0) {
            const double u = uniform();
            return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
        }
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    /// Symmetric Dirichlet(beta) over k categories.
    std::vector<double> dirichlet(double beta, int k) {
        if (beta <= 0.0) throw std::invalid_argument("Rng::dirichlet: beta must be > 0");
        if (k < 1) throw std::invalid_argument("Rng::dirichlet: k must be >= 1");
        std::vector<double> draws(static_cast<std::size_t>(k));
        double sum = 0.0;
        for (auto& d : draws) {
            d = gamma(beta);
            sum += d;
        }
        if (sum <= 0.0) {
            // all gammas underflowed (tiny beta); fall back to uniform mass
            for (auto& d : draws) d = 1.0 / k;
            return draws;
        }
        for (auto& d : draws) d /= sum;
        return draws;
    }

    /// Fisher-Yates shuffle driven by uniform_int (deterministic).
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// First `count` elements of a shuffle of [0, n); used for subsampling.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        shuffle(idx);
        if (count < n) idx.resize(count);
        return idx;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace fedsim
