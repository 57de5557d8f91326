#include "detfree/monomial.hpp"

#include <algorithm>

namespace detfree {

Monomial Monomial::from_exponents(const std::vector<int>& exps) {
    if (exps.size() > static_cast<std::size_t>(kMaxVars))
        throw std::invalid_argument("too many variables");
    Monomial m;
    int deg = 0;
    for (std::size_t i = 0; i < exps.size(); ++i) {
        if (exps[i] < 0 || exps[i] > 255) throw std::invalid_argument("exponent out of range");
        m.b[i] = static_cast<std::uint8_t>(exps[i]);
        deg += exps[i];
    }
    if (deg > 255) throw std::overflow_error("monomial degree overflow");
    m.b[15] = static_cast<std::uint8_t>(deg);
    return m;
}

unsigned long long monomial_count(int nvars, int d) {
    // C(d + nvars - 1, nvars - 1)
    unsigned long long r = 1;
    for (int i = 1; i <= nvars - 1; ++i) {
        r = r * static_cast<unsigned long long>(d + i) / static_cast<unsigned long long>(i);
    }
    return r;
}

std::vector<Monomial> monomials_of_degree(int nvars, int d) {
    if (d < 0) throw std::invalid_argument("negative degree");
    std::vector<Monomial> out;
    out.reserve(monomial_count(nvars, d));
    std::vector<int> exps(static_cast<std::size_t>(nvars), 0);
    // enumerate compositions, then sort into the canonical order
    auto rec = [&](auto&& self, int pos, int left) -> void {
        if (pos == nvars - 1) {
            exps[static_cast<std::size_t>(pos)] = left;
            out.push_back(Monomial::from_exponents(exps));
            return;
        }
        for (int e = left; e >= 0; --e) {
            exps[static_cast<std::size_t>(pos)] = e;
            self(self, pos + 1, left - e);
        }
        exps[static_cast<std::size_t>(pos)] = 0;
    };
    rec(rec, 0, d);
    std::sort(out.begin(), out.end(), GrevlexDesc{});
    return out;
}

}  // namespace detfree
