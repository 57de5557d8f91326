#include "detfree/modular.hpp"

namespace detfree {

std::uint64_t PrimeField::pow(std::uint64_t a, std::uint64_t e) const {
    std::uint64_t r = 1;
    a %= p_;
    while (e) {
        if (e & 1) r = mul(r, a);
        a = mul(a, a);
        e >>= 1;
    }
    return r;
}

std::uint64_t PrimeField::inv(std::uint64_t a) const {
    if (a == 0) throw ZeroDivisorError("inverse of zero");
    // extended Euclid on (a, p); p is prime so gcd = 1
    std::int64_t t0 = 0, t1 = 1;
    std::uint64_t r0 = p_, r1 = a;
    while (r1 != 0) {
        std::uint64_t q = r0 / r1;
        std::uint64_t r2 = r0 - q * r1;
        r0 = r1;
        r1 = r2;
        std::int64_t t2 = t0 - static_cast<std::int64_t>(q) * t1;
        t0 = t1;
        t1 = t2;
    }
    return t0 < 0 ? static_cast<std::uint64_t>(t0 + static_cast<std::int64_t>(p_)) : static_cast<std::uint64_t>(t0);
}

std::uint64_t PrimeField::from_mpz(const mpz_class& z) const {
    mpz_class r = z % mpz_class(mpz_class(p_));
    if (r < 0) r += mpz_class(p_);
    return mpz_get_ui(r.get_mpz_t());
}

std::uint64_t PrimeField::from_mpq(const mpq_class& q) const {
    std::uint64_t num = from_mpz(mpz_class(q.get_num()));
    std::uint64_t den = from_mpz(mpz_class(q.get_den()));
    if (den == 0) throw ZeroDivisorError("denominator divisible by prime");
    return mul(num, inv(den));
}

static void check_same_domain(const Zp& a, const Zp& b) {
    if (a.p != 0 && b.p != 0 && a.p != b.p)
        throw DomainMismatchError("prime field moduli differ");
}

static std::uint64_t zp_mod(const Zp& a, const Zp& b) {
    std::uint64_t p = a.p ? a.p : b.p;
    if (p == 0) throw DomainMismatchError("operation on domain-less zeros");
    return p;
}

Zp operator+(const Zp& a, const Zp& b) {
    check_same_domain(a, b);
    std::uint64_t p = zp_mod(a, b);
    return Zp(PrimeField(p).add(a.v, b.v), p);
}
Zp operator-(const Zp& a, const Zp& b) {
    check_same_domain(a, b);
    std::uint64_t p = zp_mod(a, b);
    return Zp(PrimeField(p).sub(a.v, b.v), p);
}
Zp operator*(const Zp& a, const Zp& b) {
    check_same_domain(a, b);
    std::uint64_t p = zp_mod(a, b);
    return Zp(PrimeField(p).mul(a.v, b.v), p);
}
Zp operator-(const Zp& a) {
    if (a.p == 0) return a;
    return Zp(PrimeField(a.p).neg(a.v), a.p);
}
bool operator==(const Zp& a, const Zp& b) {
    check_same_domain(a, b);
    return a.v == b.v;
}

bool is_prime_u64(std::uint64_t n) {
    if (n < 2) return false;
    for (std::uint64_t q : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
        if (n % q == 0) return n == q;
    }
    std::uint64_t d = n - 1;
    int s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    auto mulmod = [n](std::uint64_t a, std::uint64_t b) {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % n);
    };
    auto powmod = [&](std::uint64_t a, std::uint64_t e) {
        std::uint64_t r = 1;
        a %= n;
        while (e) {
            if (e & 1) r = mulmod(r, a);
            a = mulmod(a, a);
            e >>= 1;
        }
        return r;
    };
    // deterministic witness set for 64-bit integers
    for (std::uint64_t a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
        std::uint64_t x = powmod(a, d);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int i = 1; i < s; ++i) {
            x = mulmod(x, x);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

std::uint64_t random_prime(int bits, std::uint64_t& rng_state) {
    if (bits < 32 || bits > 62) throw std::invalid_argument("prime size must be 32..62 bits");
    for (;;) {
        std::uint64_t cand = splitmix64(rng_state);
        cand >>= (64 - bits);
        cand |= (1ULL << (bits - 1)) | 1ULL;
        if (is_prime_u64(cand)) return cand;
    }
}

std::pair<mpz_class, mpz_class> crt_combine(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& residues) {
    if (residues.empty()) throw std::invalid_argument("crt_combine: no residues");
    mpz_class value(0), modulus(1);
    for (const auto& [r, p] : residues) {
        mpz_class pz(static_cast<unsigned long>(p));
        mpz_class g;
        mpz_gcd(g.get_mpz_t(), modulus.get_mpz_t(), pz.get_mpz_t());
        if (g != 1) {
            if ((value - mpz_class(static_cast<unsigned long>(r))) % g != 0)
                throw std::invalid_argument("crt_combine: inconsistent residues under shared factor");
            throw std::invalid_argument("crt_combine: moduli not pairwise coprime");
        }
        // value' = value + modulus * ((r - value) * modulus^{-1} mod p)
        mpz_class inv;
        if (mpz_invert(inv.get_mpz_t(), modulus.get_mpz_t(), pz.get_mpz_t()) == 0)
            throw std::invalid_argument("crt_combine: non-invertible modulus");
        mpz_class diff = (mpz_class(static_cast<unsigned long>(r)) - value) % pz;
        if (diff < 0) diff += pz;
        mpz_class t = (diff * inv) % pz;
        value += modulus * t;
        modulus *= pz;
    }
    value %= modulus;
    if (value < 0) value += modulus;
    return {value, modulus};
}

std::optional<mpq_class> rational_reconstruct(const mpz_class& r, const mpz_class& M) {
    if (M <= 1) return std::nullopt;
    mpz_class bound;
    mpz_class half = M / 2;
    mpz_sqrt(bound.get_mpz_t(), half.get_mpz_t());

    mpz_class r0 = M, r1 = ((r % M) + M) % M;
    mpz_class t0 = 0, t1 = 1;
    while (r1 > bound) {
        mpz_class q = r0 / r1;
        mpz_class r2 = r0 - q * r1;
        mpz_class t2 = t0 - q * t1;
        r0 = r1;
        r1 = r2;
        t0 = t1;
        t1 = t2;
    }
    if (t1 == 0) return std::nullopt;
    mpz_class num = r1, den = t1;
    if (den < 0) {
        den = -den;
        num = -num;
    }
    mpz_class g;
    mpz_gcd(g.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    if (g != 1) return std::nullopt;
    // uniqueness window: 2|n|d < M
    if (2 * abs(num) * den >= M && !(num == 0 && den == 1)) return std::nullopt;
    mpz_class gm;
    mpz_gcd(gm.get_mpz_t(), den.get_mpz_t(), M.get_mpz_t());
    if (gm != 1) return std::nullopt;
    mpq_class out(num, den);
    out.canonicalize();
    return out;
}

std::optional<mpq_class> lift_rational(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& residues) {
    auto [value, modulus] = crt_combine(residues);
    return rational_reconstruct(value, modulus);
}

}  // namespace detfree
