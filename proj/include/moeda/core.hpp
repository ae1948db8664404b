#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "moeda/rng.hpp"

namespace moeda {

// Fixed-length packed bitstring.  Lengths up to 64 live in a single inline
// word (no allocation); longer genomes fall back to a heap array.  Bits above
// the length are kept zero so whole-word operations stay exact.
class Genome {
public:
    Genome() noexcept : len_(0), inline_word_(0) {}

    explicit Genome(std::uint32_t len) : len_(len), inline_word_(0) {
        if (!is_inline()) heap_ = new std::uint64_t[word_count()]();
    }

    Genome(const Genome& other) : len_(other.len_), inline_word_(other.inline_word_) {
        if (!is_inline()) {
            heap_ = new std::uint64_t[word_count()];
            std::memcpy(heap_, other.heap_, word_count() * sizeof(std::uint64_t));
        }
    }

    Genome(Genome&& other) noexcept : len_(other.len_), inline_word_(other.inline_word_) {
        other.len_ = 0;
        other.inline_word_ = 0;
    }

    Genome& operator=(const Genome& other) {
        if (this != &other) {
            Genome tmp(other);
            swap(tmp);
        }
        return *this;
    }

    Genome& operator=(Genome&& other) noexcept {
        if (this != &other) {
            release();
            len_ = other.len_;
            inline_word_ = other.inline_word_;
            other.len_ = 0;
            other.inline_word_ = 0;
        }
        return *this;
    }

    ~Genome() { release(); }

    void swap(Genome& other) noexcept {
        std::swap(len_, other.len_);
        std::swap(inline_word_, other.inline_word_);
    }

    std::uint32_t size() const noexcept { return len_; }
    std::uint32_t word_count() const noexcept { return (len_ + 63u) / 64u; }

    bool get(std::uint32_t i) const {
        return (word(i >> 6) >> (i & 63u)) & 1ULL;
    }

    void set(std::uint32_t i, bool v) {
        std::uint64_t& w = word_ref(i >> 6);
        const std::uint64_t bit = 1ULL << (i & 63u);
        w = v ? (w | bit) : (w & ~bit);
    }

    void flip(std::uint32_t i) { word_ref(i >> 6) ^= 1ULL << (i & 63u); }

    std::uint64_t word(std::uint32_t wi) const {
        return is_inline() ? inline_word_ : heap_[wi];
    }

    // Stores a whole word, masking bits beyond the genome length.
    void set_word(std::uint32_t wi, std::uint64_t value) {
        word_ref(wi) = value & word_mask(wi);
    }

    std::uint64_t ones() const {
        if (is_inline()) return static_cast<std::uint64_t>(std::popcount(inline_word_));
        std::uint64_t total = 0;
        for (std::uint32_t wi = 0; wi < word_count(); ++wi)
            total += static_cast<std::uint64_t>(std::popcount(heap_[wi]));
        return total;
    }

    // The genome as an integer, bit i of the value = bit i of the genome.
    std::uint64_t as_bits() const {
        if (len_ > 64) throw std::logic_error("Genome::as_bits requires length <= 64");
        return inline_word_;
    }

    bool operator==(const Genome& other) const {
        if (len_ != other.len_) return false;
        if (is_inline()) return inline_word_ == other.inline_word_;
        return std::memcmp(heap_, other.heap_, word_count() * sizeof(std::uint64_t)) == 0;
    }

    bool operator!=(const Genome& other) const { return !(*this == other); }

    // Unsigned-integer ordering for equal lengths; shorter genomes sort first.
    bool operator<(const Genome& other) const {
        if (len_ != other.len_) return len_ < other.len_;
        if (is_inline()) return inline_word_ < other.inline_word_;
        for (std::uint32_t wi = word_count(); wi-- > 0;)
            if (heap_[wi] != other.heap_[wi]) return heap_[wi] < other.heap_[wi];
        return false;
    }

private:
    bool is_inline() const noexcept { return len_ <= 64; }

    std::uint64_t& word_ref(std::uint32_t wi) {
        return is_inline() ? inline_word_ : heap_[wi];
    }

    std::uint64_t word_mask(std::uint32_t wi) const {
        const std::uint32_t rem = len_ & 63u;
        if (rem != 0 && wi == word_count() - 1) return (1ULL << rem) - 1u;
        return ~0ULL;
    }

    void release() noexcept {
        if (!is_inline()) delete[] heap_;
    }

    std::uint32_t len_;
    union {
        std::uint64_t inline_word_;
        std::uint64_t* heap_;
    };
};

inline Genome genome_from_string(const std::string& bits) {
    Genome g(static_cast<std::uint32_t>(bits.size()));
    for (std::uint32_t i = 0; i < bits.size(); ++i) {
        if (bits[i] == '1')
            g.set(i, true);
        else if (bits[i] != '0')
            throw std::invalid_argument("genome string must contain only 0 and 1");
    }
    return g;
}

inline std::string genome_to_string(const Genome& g) {
    std::string s(g.size(), '0');
    for (std::uint32_t i = 0; i < g.size(); ++i)
        if (g.get(i)) s[i] = '1';
    return s;
}

inline std::uint32_t hamming_distance(const Genome& a, const Genome& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("hamming_distance: genome lengths differ");
    std::uint32_t total = 0;
    for (std::uint32_t wi = 0; wi < a.word_count(); ++wi)
        total += static_cast<std::uint32_t>(std::popcount(a.word(wi) ^ b.word(wi)));
    return total;
}

// Both objectives are maximized; NaN marks "not yet evaluated".
struct ObjectiveVector {
    double f1 = std::numeric_limits<double>::quiet_NaN();
    double f2 = std::numeric_limits<double>::quiet_NaN();

    bool evaluated() const { return !std::isnan(f1) && !std::isnan(f2); }
};

// rank 0 means unset; rank and crowding are assigned together by a
// sort+crowding pass and must be treated as stale after any genome change.
struct Individual {
    Genome genome;
    ObjectiveVector objectives;
    double crowding = 0.0;
    std::int32_t rank = 0;
};

using Population = std::vector<Individual>;

inline std::uint32_t genome_length(const Population& pop) {
    return pop.empty() ? 0u : pop.front().genome.size();
}

inline Population random_population(std::uint64_t n, std::uint32_t ell, RngStream& rng) {
    if (n == 0 || ell == 0)
        throw std::invalid_argument("random_population: n and ell must be positive");
    Population pop;
    pop.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        Individual ind;
        ind.genome = Genome(ell);
        for (std::uint32_t wi = 0; wi < ind.genome.word_count(); ++wi)
            ind.genome.set_word(wi, rng.next_u64());
        pop.push_back(std::move(ind));
    }
    return pop;
}

}  // namespace moeda
