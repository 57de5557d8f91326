#ifndef DETFREE_MONOMIAL_HPP
#define DETFREE_MONOMIAL_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace detfree {

// Hard cap on ring variables: the largest supported shape is 3x5.
inline constexpr int kMaxVars = 15;

// Packed exponent vector: bytes 0..14 hold per-variable exponents, byte 15
// caches the total degree.  Comparison is graded reverse lexicographic with
// variable 0 largest.
struct Monomial {
    std::array<std::uint8_t, 16> b{};

    static Monomial one() { return {}; }

    static Monomial variable(int v, int power = 1) {
        Monomial m;
        m.b[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(power);
        m.b[15] = static_cast<std::uint8_t>(power);
        return m;
    }

    static Monomial from_exponents(const std::vector<int>& exps);

    int degree() const { return b[15]; }
    int exp(int v) const { return b[static_cast<std::size_t>(v)]; }
    bool is_one() const { return b[15] == 0; }

    Monomial operator*(const Monomial& o) const {
        Monomial r;
        for (int i = 0; i < 16; ++i) {
            unsigned s = unsigned(b[i]) + unsigned(o.b[i]);
            if (s > 0xff) throw std::overflow_error("monomial exponent overflow");
            r.b[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(s);
        }
        return r;
    }

    bool divisible_by(const Monomial& o) const {
        for (int i = 0; i < 15; ++i)
            if (b[i] < o.b[i]) return false;
        return true;
    }

    std::optional<Monomial> divided_by(const Monomial& o) const {
        if (!divisible_by(o)) return std::nullopt;
        Monomial r;
        for (int i = 0; i < 16; ++i) r.b[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(b[i] - o.b[i]);
        return r;
    }

    bool operator==(const Monomial& o) const { return b == o.b; }
    bool operator!=(const Monomial& o) const { return b != o.b; }
};

// a < b in grevlex: smaller degree, or equal degree and the rightmost
// differing exponent of a exceeds that of b.
inline bool grevlex_less(const Monomial& a, const Monomial& b) {
    if (a.b[15] != b.b[15]) return a.b[15] < b.b[15];
    for (int i = 14; i >= 0; --i)
        if (a.b[i] != b.b[i]) return a.b[i] > b.b[i];
    return false;
}

inline bool grevlex_greater(const Monomial& a, const Monomial& b) { return grevlex_less(b, a); }

// Comparator putting the canonical leading term first.
struct GrevlexDesc {
    bool operator()(const Monomial& a, const Monomial& b) const { return grevlex_greater(a, b); }
};

// All monomials of total degree d in nvars variables, descending grevlex.
std::vector<Monomial> monomials_of_degree(int nvars, int d);

// Number of monomials of degree d in nvars variables: C(d + nvars - 1, nvars - 1).
unsigned long long monomial_count(int nvars, int d);

struct MonomialHash {
    std::size_t operator()(const Monomial& m) const {
        std::uint64_t lo, hi;
        __builtin_memcpy(&lo, m.b.data(), 8);
        __builtin_memcpy(&hi, m.b.data() + 8, 8);
        std::uint64_t h = lo * 0x9e3779b97f4a7c15ULL;
        h ^= hi + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

}  // namespace detfree

#endif
