#ifndef DETFREE_POLYNOMIAL_HPP
#define DETFREE_POLYNOMIAL_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <utility>
#include <vector>

#include "detfree/modular.hpp"
#include "detfree/monomial.hpp"

namespace detfree {

// Coefficient domains.  A domain carries whatever run-time state the field
// needs (nothing for Q, the modulus for F_p) and is compared when two
// polynomials meet in an operation.
struct RationalDomain {
    using Elem = mpq_class;
    static Elem zero() { return mpq_class(0); }
    static bool is_zero(const Elem& e) { return sgn(e) == 0; }
    bool operator==(const RationalDomain&) const { return true; }
    bool operator!=(const RationalDomain&) const { return false; }
};

struct PrimeDomain {
    std::uint64_t p = 0;
    using Elem = Zp;
    Elem zero() const { return Zp(0, p); }
    static bool is_zero(const Elem& e) { return e.v == 0; }
    bool operator==(const PrimeDomain& o) const { return p == o.p; }
    bool operator!=(const PrimeDomain& o) const { return p != o.p; }
};

// Sparse multivariate polynomial: strictly descending grevlex term list with
// no zero coefficients.
template <class D>
class Polynomial {
  public:
    using K = typename D::Elem;
    using Term = std::pair<Monomial, K>;

    Polynomial() = default;
    explicit Polynomial(D domain) : domain_(std::move(domain)) {}

    // Canonicalizes: sorts, merges duplicates, drops zeros.
    Polynomial(D domain, std::vector<Term> terms) : domain_(std::move(domain)) {
        std::sort(terms.begin(), terms.end(),
                  [](const Term& a, const Term& b) { return grevlex_greater(a.first, b.first); });
        terms_.reserve(terms.size());
        for (auto& t : terms) {
            if (!terms_.empty() && terms_.back().first == t.first) {
                terms_.back().second = terms_.back().second + t.second;
                if (D::is_zero(terms_.back().second)) terms_.pop_back();
            } else if (!D::is_zero(t.second)) {
                terms_.push_back(std::move(t));
            }
        }
    }

    const D& domain() const { return domain_; }
    const std::vector<Term>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t term_count() const { return terms_.size(); }

    // Degree of the leading term; -1 for the zero polynomial.
    int degree() const { return terms_.empty() ? -1 : terms_.front().first.degree(); }

    bool is_homogeneous() const {
        for (const auto& t : terms_)
            if (t.first.degree() != degree()) return false;
        return true;
    }

    const Term& leading_term() const {
        if (terms_.empty()) throw std::invalid_argument("leading term of zero polynomial");
        return terms_.front();
    }

    bool operator==(const Polynomial& o) const {
        if (domain_ != o.domain_ || terms_.size() != o.terms_.size()) return false;
        for (std::size_t i = 0; i < terms_.size(); ++i)
            if (terms_[i].first != o.terms_[i].first || !D::is_zero(terms_[i].second - o.terms_[i].second))
                return false;
        return true;
    }
    bool operator!=(const Polynomial& o) const { return !(*this == o); }

    Polynomial operator+(const Polynomial& o) const { return merged(o, false); }
    Polynomial operator-(const Polynomial& o) const { return merged(o, true); }

    Polynomial operator-() const {
        Polynomial r(domain_);
        r.terms_.reserve(terms_.size());
        for (const auto& t : terms_) r.terms_.emplace_back(t.first, -t.second);
        return r;
    }

    Polynomial operator*(const Polynomial& o) const {
        require_same_domain(o);
        // term-by-term accumulation into an ordered buffer
        std::map<Monomial, K, GrevlexDesc> acc;
        for (const auto& a : terms_) {
            for (const auto& b : o.terms_) {
                Monomial m = a.first * b.first;
                K prod = a.second * b.second;
                auto it = acc.find(m);
                if (it == acc.end()) {
                    if (!D::is_zero(prod)) acc.emplace(m, std::move(prod));
                } else {
                    it->second = it->second + prod;
                    if (D::is_zero(it->second)) acc.erase(it);
                }
            }
        }
        Polynomial r(domain_);
        r.terms_.reserve(acc.size());
        for (auto& [m, c] : acc) r.terms_.emplace_back(m, std::move(c));
        return r;
    }

    Polynomial scaled(const K& s) const {
        if (D::is_zero(s)) return Polynomial(domain_);
        Polynomial r(domain_);
        r.terms_.reserve(terms_.size());
        for (const auto& t : terms_) r.terms_.emplace_back(t.first, t.second * s);
        return r;
    }

    Polynomial times_monomial(const Monomial& m) const {
        Polynomial r(domain_);
        r.terms_.reserve(terms_.size());
        for (const auto& t : terms_) r.terms_.emplace_back(t.first * m, t.second);
        return r;
    }

    void require_same_domain(const Polynomial& o) const {
        if (domain_ != o.domain_) throw DomainMismatchError("coefficient domains differ");
    }

  private:
    Polynomial merged(const Polynomial& o, bool subtract) const {
        require_same_domain(o);
        Polynomial r(domain_);
        r.terms_.reserve(terms_.size() + o.terms_.size());
        std::size_t i = 0, j = 0;
        while (i < terms_.size() || j < o.terms_.size()) {
            bool take_left;
            if (i == terms_.size())
                take_left = false;
            else if (j == o.terms_.size())
                take_left = true;
            else if (terms_[i].first == o.terms_[j].first) {
                K c = subtract ? K(terms_[i].second - o.terms_[j].second)
                               : K(terms_[i].second + o.terms_[j].second);
                if (!D::is_zero(c)) r.terms_.emplace_back(terms_[i].first, std::move(c));
                ++i;
                ++j;
                continue;
            } else {
                take_left = grevlex_greater(terms_[i].first, o.terms_[j].first);
            }
            if (take_left) {
                r.terms_.push_back(terms_[i++]);
            } else {
                const auto& t = o.terms_[j++];
                r.terms_.emplace_back(t.first, subtract ? K(-t.second) : t.second);
            }
        }
        return r;
    }

    D domain_;
    std::vector<Term> terms_;
};

using PolyQ = Polynomial<RationalDomain>;
using PolyP = Polynomial<PrimeDomain>;

inline mpq_class coef_quotient(const RationalDomain&, const mpq_class& a, const mpq_class& b) {
    mpq_class q = a / b;
    q.canonicalize();
    return q;
}
inline Zp coef_quotient(const PrimeDomain& d, const Zp& a, const Zp& b) {
    PrimeField F(d.p);
    return Zp(F.mul(a.v, F.inv(b.v)), d.p);
}

inline mpq_class zero_of(const RationalDomain&) { return mpq_class(0); }
inline Zp zero_of(const PrimeDomain& d) { return Zp(0, d.p); }

// Formal partial derivative with respect to variable v.
template <class D>
Polynomial<D> partial_derivative(const Polynomial<D>& a, int v) {
    if (v < 0 || v >= kMaxVars) throw std::invalid_argument("variable index out of range");
    std::vector<typename Polynomial<D>::Term> terms;
    for (const auto& [m, c] : a.terms()) {
        int e = m.exp(v);
        if (e == 0) continue;
        Monomial q = *m.divided_by(Monomial::variable(v));
        // multiply coefficient by the exponent
        typename D::Elem ce = c;
        typename D::Elem acc = ce;
        for (int i = 1; i < e; ++i) acc = acc + ce;
        terms.emplace_back(q, acc);
    }
    return Polynomial<D>(a.domain(), std::move(terms));
}

template <class D>
std::optional<Polynomial<D>> divide_impl(const Polynomial<D>& g, const Polynomial<D>& f, Monomial* bad_lt);

// Quotient g / f when f exactly divides g; absent otherwise.  Single-divisor
// reduction under grevlex: a nonzero remainder step means no quotient exists.
template <class D>
std::optional<Polynomial<D>> exact_divide(const Polynomial<D>& g, const Polynomial<D>& f) {
    g.require_same_domain(f);
    if (f.is_zero()) throw std::invalid_argument("division by zero polynomial");
    if (g.is_zero()) return Polynomial<D>(g.domain());
    return divide_impl(g, f, nullptr);
}

// Like exact_divide but reports the offending leading monomial on failure.
template <class D>
std::optional<Polynomial<D>> divide_impl(const Polynomial<D>& g, const Polynomial<D>& f, Monomial* bad_lt) {
    Polynomial<D> r = g;
    std::vector<typename Polynomial<D>::Term> q;
    const auto& flt = f.leading_term();
    while (!r.is_zero()) {
        const auto& rlt = r.leading_term();
        auto m = rlt.first.divided_by(flt.first);
        if (!m) {
            if (bad_lt) *bad_lt = rlt.first;
            return std::nullopt;
        }
        typename D::Elem c = coef_quotient(r.domain(), rlt.second, flt.second);
        q.emplace_back(*m, c);
        Polynomial<D> sub = f.times_monomial(*m).scaled(c);
        r = r - sub;
    }
    return Polynomial<D>(g.domain(), std::move(q));
}

// Exact evaluation; the point must supply one element per variable in use.
template <class D>
typename D::Elem evaluate(const Polynomial<D>& a, const std::vector<typename D::Elem>& point, int nvars) {
    typename D::Elem total = zero_of(a.domain());
    for (const auto& [m, c] : a.terms()) {
        typename D::Elem v = c;
        for (int i = 0; i < nvars; ++i) {
            for (int e = 0; e < m.exp(i); ++e) v = v * point[static_cast<std::size_t>(i)];
        }
        total = total + v;
    }
    return total;
}

// Reduce a rational polynomial modulo p.  Throws ZeroDivisorError when a
// denominator vanishes mod p.
inline PolyP reduce_mod(const PolyQ& a, std::uint64_t p) {
    PrimeField F(p);
    std::vector<PolyP::Term> ts;
    ts.reserve(a.term_count());
    for (const auto& [m, c] : a.terms()) {
        std::uint64_t v = F.from_mpq(c);
        if (v) ts.emplace_back(m, Zp(v, p));
    }
    return PolyP(PrimeDomain{p}, std::move(ts));
}

// Evaluate a rational polynomial at a point of F_p^n without materializing
// the reduced polynomial.
inline std::uint64_t evaluate_mod(const PolyQ& a, const PrimeField& F, const std::vector<std::uint64_t>& point,
                                  int nvars) {
    std::uint64_t total = 0;
    for (const auto& [m, c] : a.terms()) {
        std::uint64_t v = F.from_mpq(c);
        for (int i = 0; i < nvars; ++i) {
            int e = m.exp(i);
            if (e) v = F.mul(v, F.pow(point[static_cast<std::size_t>(i)], static_cast<std::uint64_t>(e)));
        }
        total = F.add(total, v);
    }
    return total;
}

}  // namespace detfree

#endif
