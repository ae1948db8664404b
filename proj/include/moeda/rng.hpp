#pragma once

#include <cassert>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace moeda {

namespace detail {

inline std::uint64_t splitmix64_next(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Deterministic, platform-stable random stream: xoshiro256++ seeded from
// (seed, stream) through splitmix64.  Distinct stream indices give
// independent sequences; every draw path below is self-contained so the
// byte sequence never depends on the standard library implementation.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream)
        : seed_(seed), stream_(stream) {
        std::uint64_t x = seed;
        (void)detail::splitmix64_next(x);
        x ^= stream * 0xbf58476d1ce4e5b9ULL + 0x94d049bb133111ebULL;
        for (auto& word : s_) word = detail::splitmix64_next(x);
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
    }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl64(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = detail::rotl64(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // True with probability p; p outside [0,1] is a caller bug.
    bool bernoulli(double p) {
        assert(p >= 0.0 && p <= 1.0);
        return uniform_double() < p;
    }

    // Uniform in [0, bound); unbiased via multiply-shift with rejection.
    std::uint64_t uniform_index(std::uint64_t bound) {
        assert(bound >= 1);
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (lo < threshold) {
                m = static_cast<unsigned __int128>(next_u64()) * bound;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // Unbiased fair bit for coin-flip tie rules.
    bool coin() { return (next_u64() & 1ULL) != 0; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t s_[4];
};

// k distinct indices drawn uniformly from [0, n), in draw order.
// Rejection sampling when k is small relative to n, partial Fisher-Yates
// otherwise; both paths consume only RngStream draws.
inline std::vector<std::uint32_t> sample_without_replacement(std::uint64_t n,
                                                             std::uint64_t k,
                                                             RngStream& rng) {
    if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
    std::vector<std::uint32_t> out;
    out.reserve(k);
    if (k <= 128 && k * 2 <= n) {
        while (out.size() < k) {
            const auto idx = static_cast<std::uint32_t>(rng.uniform_index(n));
            bool fresh = true;
            for (const auto prior : out) {
                if (prior == idx) {
                    fresh = false;
                    break;
                }
            }
            if (fresh) out.push_back(idx);
        }
    } else if (k * 2 <= n) {
        std::vector<bool> seen(n, false);
        while (out.size() < k) {
            const auto idx = static_cast<std::uint32_t>(rng.uniform_index(n));
            if (!seen[idx]) {
                seen[idx] = true;
                out.push_back(idx);
            }
        }
    } else {
        std::vector<std::uint32_t> pool(n);
        for (std::uint64_t i = 0; i < n; ++i) pool[i] = static_cast<std::uint32_t>(i);
        for (std::uint64_t i = 0; i < k; ++i) {
            const std::uint64_t j = i + rng.uniform_index(n - i);
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
    }
    return out;
}

}  // namespace moeda
