#ifndef DETFREE_MODULAR_HPP
#define DETFREE_MODULAR_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <gmpxx.h>

namespace detfree {

// Raised when an arithmetic step hits a zero divisor for the current prime
// (denominator divisible by p).  Callers resample the prime.
struct ZeroDivisorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainMismatchError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Arithmetic context for F_p with p < 2^63.  Elements are plain uint64_t.
class PrimeField {
  public:
    explicit PrimeField(std::uint64_t p) : p_(p) {
        if (p < 3 || p >= (1ULL << 63)) throw std::invalid_argument("prime out of range");
    }

    std::uint64_t modulus() const { return p_; }

    std::uint64_t add(std::uint64_t a, std::uint64_t b) const {
        std::uint64_t s = a + b;
        return s >= p_ ? s - p_ : s;
    }
    std::uint64_t sub(std::uint64_t a, std::uint64_t b) const { return a >= b ? a - b : a + p_ - b; }
    std::uint64_t neg(std::uint64_t a) const { return a == 0 ? 0 : p_ - a; }

    std::uint64_t mul(std::uint64_t a, std::uint64_t b) const {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % p_);
    }

    // Precomputed-quotient multiplication for a fixed scalar w (Shoup).
    struct Scaled {
        std::uint64_t w = 0;
        std::uint64_t wp = 0;  // floor(w * 2^64 / p)
    };
    Scaled scale(std::uint64_t w) const {
        Scaled s;
        s.w = w;
        s.wp = static_cast<std::uint64_t>((static_cast<unsigned __int128>(w) << 64) / p_);
        return s;
    }
    std::uint64_t mul_scaled(const Scaled& s, std::uint64_t x) const {
        std::uint64_t q = static_cast<std::uint64_t>((static_cast<unsigned __int128>(s.wp) * x) >> 64);
        std::uint64_t r = s.w * x - q * p_;
        if (r >= p_) r -= p_;
        return r;
    }

    std::uint64_t pow(std::uint64_t a, std::uint64_t e) const;
    std::uint64_t inv(std::uint64_t a) const;  // throws ZeroDivisorError on 0

    std::uint64_t from_int(long long v) const {
        long long r = v % static_cast<long long>(p_);
        return r < 0 ? static_cast<std::uint64_t>(r + static_cast<long long>(p_)) : static_cast<std::uint64_t>(r);
    }
    std::uint64_t from_mpz(const mpz_class& z) const;
    // num/den mod p; throws ZeroDivisorError when p | den.
    std::uint64_t from_mpq(const mpq_class& q) const;

    bool operator==(const PrimeField& o) const { return p_ == o.p_; }

  private:
    std::uint64_t p_;
};

// Tagged prime-field element: carries its modulus so mixed-domain use is
// detected at run time.
struct Zp {
    std::uint64_t v = 0;
    std::uint64_t p = 0;  // p == 0 marks a domain-less zero

    Zp() = default;
    Zp(std::uint64_t value, std::uint64_t modulus) : v(value % modulus), p(modulus) {}

    bool is_zero() const { return v == 0; }
};

Zp operator+(const Zp& a, const Zp& b);
Zp operator-(const Zp& a, const Zp& b);
Zp operator*(const Zp& a, const Zp& b);
Zp operator-(const Zp& a);
bool operator==(const Zp& a, const Zp& b);

// Deterministic Miller-Rabin, exact for 64-bit inputs.
bool is_prime_u64(std::uint64_t n);

// Next prime with the given bit size from a seeded stream.  Bits must lie in
// [32, 62].
std::uint64_t random_prime(int bits, std::uint64_t& rng_state);

// SplitMix64 step; used everywhere a cheap deterministic stream is needed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Combine residues by the Chinese remainder theorem.  Moduli must be pairwise
// coprime; inconsistent inputs under a shared factor raise invalid_argument.
// Returns (value in [0, M), M).
std::pair<mpz_class, mpz_class> crt_combine(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& residues);

// Rational reconstruction of r mod M: returns n/d with n ≡ r·d (mod M),
// |n| bounded by floor(sqrt(M/2)) and 2|n|d < M; absent when no candidate
// survives within bounds.
std::optional<mpq_class> rational_reconstruct(const mpz_class& r, const mpz_class& M);

// CRT combine then reconstruct.
std::optional<mpq_class> lift_rational(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& residues);

}  // namespace detfree

#endif
