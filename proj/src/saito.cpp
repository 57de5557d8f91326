#include "detfree/saito.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "detfree/runtime.hpp"

namespace detfree {

SaitoMatrix saito_matrix(const Model& model, const std::vector<Derivation>& derivs) {
    const int nv = model.nvars();
    if (static_cast<int>(derivs.size()) != nv - 1)
        throw std::invalid_argument("Saito matrix needs exactly " + std::to_string(nv - 1) + " derivations");
    SaitoMatrix mat;
    mat.nvars = nv;
    mat.entries.assign(static_cast<std::size_t>(nv), std::vector<PolyQ>());
    Derivation euler = euler_derivation(model.shape());
    for (int r = 0; r < nv; ++r) {
        auto& row = mat.entries[static_cast<std::size_t>(r)];
        row.reserve(static_cast<std::size_t>(nv));
        row.push_back(euler.coeffs[static_cast<std::size_t>(r)]);
        for (const auto& d : derivs) row.push_back(d.coeffs[static_cast<std::size_t>(r)]);
    }
    mat.col_degrees.push_back(1);
    for (const auto& d : derivs) {
        int deg = d.degree();
        if (deg < 0) deg = 0;  // zero derivation column; determinant will vanish
        mat.col_degrees.push_back(deg);
    }
    return mat;
}

namespace {

// determinant of the evaluated matrix over F_p by Gaussian elimination
std::uint64_t det_mod_p(std::vector<std::uint64_t>& m, int n, const PrimeField& F) {
    std::uint64_t det = 1;
    bool negate = false;
    for (int col = 0; col < n; ++col) {
        int sel = -1;
        for (int r = col; r < n; ++r) {
            if (m[static_cast<std::size_t>(r) * n + col] != 0) {
                sel = r;
                break;
            }
        }
        if (sel < 0) return 0;
        if (sel != col) {
            for (int j = col; j < n; ++j)
                std::swap(m[static_cast<std::size_t>(sel) * n + j], m[static_cast<std::size_t>(col) * n + j]);
            negate = !negate;
        }
        std::uint64_t pivot = m[static_cast<std::size_t>(col) * n + col];
        det = F.mul(det, pivot);
        std::uint64_t inv = F.inv(pivot);
        for (int r = col + 1; r < n; ++r) {
            std::uint64_t v = m[static_cast<std::size_t>(r) * n + col];
            if (!v) continue;
            auto s = F.scale(F.mul(v, inv));
            for (int j = col; j < n; ++j) {
                std::uint64_t& cell = m[static_cast<std::size_t>(r) * n + j];
                cell = F.sub(cell, F.mul_scaled(s, m[static_cast<std::size_t>(col) * n + j]));
            }
        }
    }
    return negate ? F.neg(det) : det;
}

}  // namespace

std::optional<mpq_class> pit_certify(const Model& model, const Arrangement& arr,
                                     const std::vector<Derivation>& derivs, const PitConfig& cfg,
                                     PitEvidence* evidence) {
    const int nv = model.nvars();
    // exact tangency precheck
    for (const auto& d : derivs) {
        if (std::holds_alternative<TangencyFailure>(tangency(model, d, arr)))
            throw std::invalid_argument("pit_certify requires exactly tangent derivations");
    }
    // degree bookkeeping: det(Phi) is homogeneous of degree 1 + sum deg(theta);
    // it can only be c*F when that matches deg F
    long long deg_sum = 1;
    for (const auto& d : derivs) deg_sum += std::max(0, d.degree());
    if (deg_sum != arr.degree()) return std::nullopt;

    SaitoMatrix mat = saito_matrix(model, derivs);

    std::uint64_t stream = labels_hash(arr.labels, cfg.seed ^ 0x5a17c0de00beefULL);
    std::vector<std::pair<std::uint64_t, std::uint64_t>> residues;
    std::vector<std::uint64_t> primes_used;

    int prime_attempts = 0;
    while (static_cast<int>(primes_used.size()) < cfg.primes) {
        if (++prime_attempts > cfg.primes + 8) break;
        std::uint64_t p = random_prime(cfg.prime_bits, stream);
        if (std::find(primes_used.begin(), primes_used.end(), p) != primes_used.end()) continue;
        PrimeField F(p);
        try {
            std::optional<std::uint64_t> ratio;
            for (int pt = 0; pt < cfg.points_per_prime; ++pt) {
                std::uint64_t fval = 0;
                std::vector<std::uint64_t> point(static_cast<std::size_t>(nv));
                int tries = 0;
                for (;;) {
                    if (++tries > cfg.resample_limit)
                        throw std::runtime_error("could not sample a point off the arrangement");
                    for (auto& x : point) x = splitmix64(stream) % p;
                    fval = 1;
                    for (int id : arr.labels) {
                        fval = F.mul(fval, evaluate_mod(model.minor(id), F, point, nv));
                        if (!fval) break;
                    }
                    if (fval) break;
                }
                std::vector<std::uint64_t> dm(static_cast<std::size_t>(nv) * static_cast<std::size_t>(nv));
                for (int r = 0; r < nv; ++r)
                    for (int c = 0; c < nv; ++c)
                        dm[static_cast<std::size_t>(r) * nv + c] =
                            evaluate_mod(mat.entries[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)], F,
                                         point, nv);
                std::uint64_t det = det_mod_p(dm, nv, F);
                std::uint64_t r = F.mul(det, F.inv(fval));
                if (!ratio)
                    ratio = r;
                else if (*ratio != r)
                    return std::nullopt;  // ratio not constant: not a basis
            }
            if (!ratio || *ratio == 0) return std::nullopt;  // determinant vanishes identically
            residues.emplace_back(*ratio, p);
            primes_used.push_back(p);
        } catch (const ZeroDivisorError&) {
            continue;  // derivation coefficient denominator hit the prime; resample
        }
    }
    if (static_cast<int>(primes_used.size()) < cfg.primes) return std::nullopt;

    auto c = lift_rational(residues);
    if (!c || sgn(*c) == 0) return std::nullopt;

    if (evidence) {
        evidence->primes = primes_used;
        evidence->points_per_prime = cfg.points_per_prime;
        evidence->seed = cfg.seed;
        // per confirming evaluation the false-pass chance is deg F / p
        // (Schwartz-Zippel on det(Phi) - c*F); the first point only selects c
        mpq_class prod(1);
        int confirmations = cfg.primes * cfg.points_per_prime - 1;
        std::uint64_t pmin = *std::min_element(primes_used.begin(), primes_used.end());
        mpq_class per(static_cast<long>(arr.degree()), 1);
        per /= mpq_class(static_cast<unsigned long>(pmin));
        for (int i = 0; i < confirmations; ++i) prod *= per;
        evidence->error_bound = prod;
    }
    return c;
}

PolyQ exact_det(const SaitoMatrix& mat, std::size_t term_budget) {
    const int n = mat.nvars;
    // order columns by ascending total nonzero count; only the sign of the
    // determinant changes
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::size_t> weight(static_cast<std::size_t>(n), 0);
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) weight[static_cast<std::size_t>(c)] += mat.entries[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].term_count();
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return weight[static_cast<std::size_t>(a)] < weight[static_cast<std::size_t>(b)]; });
    int inversions = 0;
    for (std::size_t i = 0; i < order.size(); ++i)
        for (std::size_t j = i + 1; j < order.size(); ++j)
            if (order[i] > order[j]) ++inversions;
    bool negate = inversions % 2 == 1;
    // each level-r expansion contributes a uniform (-1)^r
    if ((n * (n - 1) / 2) % 2 == 1) negate = !negate;

    if (n > 16) throw std::invalid_argument("exact determinant supported up to 16x16");

    // dp over column subsets, row by row: minors of the first r rows
    std::vector<PolyQ> cur(1, PolyQ(RationalDomain{}, {{Monomial::one(), mpq_class(1)}}));
    std::vector<std::uint32_t> cur_masks(1, 0);
    std::size_t live_terms = 1;
    for (int r = 0; r < n; ++r) {
        // all (r+1)-subsets built from nonzero r-subsets
        std::unordered_map<std::uint32_t, PolyQ> next;
        next.reserve(cur.size() * static_cast<std::size_t>(n - r));
        for (std::size_t i = 0; i < cur.size(); ++i) {
            const PolyQ& minor = cur[i];
            if (minor.is_zero()) continue;
            std::uint32_t mask = cur_masks[i];
            int sign_toggle = 0;
            for (int c = 0; c < n; ++c) {
                std::uint32_t bit = 1u << c;
                if (mask & bit) {
                    ++sign_toggle;
                    continue;
                }
                const PolyQ& entry = mat.entries[static_cast<std::size_t>(r)][static_cast<std::size_t>(order[static_cast<std::size_t>(c)])];
                if (entry.is_zero()) continue;
                PolyQ contrib = minor * entry;
                if (sign_toggle % 2 == 1) contrib = -contrib;
                auto [it, inserted] = next.try_emplace(mask | bit, std::move(contrib));
                if (!inserted) it->second = it->second + contrib;
            }
        }
        cur.clear();
        cur_masks.clear();
        live_terms = 0;
        std::vector<std::pair<std::uint32_t, PolyQ>> sorted;
        sorted.reserve(next.size());
        for (auto& [mask, poly] : next) sorted.emplace_back(mask, std::move(poly));
        std::sort(sorted.begin(), sorted.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (auto& [mask, poly] : sorted) {
            if (poly.is_zero()) continue;
            live_terms += poly.term_count();
            cur_masks.push_back(mask);
            cur.push_back(std::move(poly));
        }
        if (live_terms > term_budget)
            throw std::length_error("exact determinant exceeded the term budget; use the probabilistic mode");
    }
    if (cur.empty()) return PolyQ(RationalDomain{});
    PolyQ det = std::move(cur.front());
    return negate ? -det : det;
}

CertifyOutcome certify_free(const Model& model, const Arrangement& arr, const std::vector<Derivation>& derivs,
                            SaitoMode mode, const PitConfig& cfg, const std::string& source) {
    // stage 1: exact tangency
    for (std::size_t i = 0; i < derivs.size(); ++i) {
        auto tv = tangency(model, derivs[i], arr);
        if (std::holds_alternative<TangencyFailure>(tv)) {
            const auto& tf = std::get<TangencyFailure>(tv);
            CertifyFailure fail{CertifyFailure::Stage::Tangency,
                                "derivation " + std::to_string(i + 1) + " is not tangent to factor " +
                                    std::to_string(arr.labels[static_cast<std::size_t>(tf.factor_index)]),
                                static_cast<int>(i), tf.factor_index};
            return fail;
        }
    }
    // stage 2: degree bookkeeping
    long long deg_sum = 0;
    std::vector<int> exps;
    for (const auto& d : derivs) {
        int dd = std::max(0, d.degree());
        exps.push_back(dd);
        deg_sum += dd;
    }
    if (deg_sum + 1 != arr.degree()) {
        return CertifyFailure{CertifyFailure::Stage::DegreeSum,
                              "column degrees sum to " + std::to_string(deg_sum + 1) + ", deg F is " +
                                  std::to_string(arr.degree()),
                              -1, -1};
    }
    // stage 3: determinant
    SaitoCertificate cert;
    cert.arr = arr;
    cert.derivations = derivs;
    std::sort(exps.begin(), exps.end());
    cert.exponents = std::move(exps);
    cert.mode = mode == SaitoMode::Exact ? SaitoMode::Exact : SaitoMode::Probabilistic;
    cert.source = source;
    if (mode == SaitoMode::Exact) {
        try {
            PolyQ det = exact_det(saito_matrix(model, derivs));
            if (det.is_zero())
                return CertifyFailure{CertifyFailure::Stage::Determinant, "determinant vanishes identically", -1, -1};
            PolyQ f = model.expand_defining(arr);
            auto q = exact_divide(det, f);
            if (!q || q->term_count() != 1 || q->degree() != 0)
                return CertifyFailure{CertifyFailure::Stage::Determinant,
                                      "determinant is not a constant multiple of F", -1, -1};
            cert.constant = q->terms().front().second;
        } catch (const std::length_error& e) {
            return CertifyFailure{CertifyFailure::Stage::Budget, e.what(), -1, -1};
        }
    } else {
        auto c = pit_certify(model, arr, derivs, cfg, &cert.evidence);
        if (!c)
            return CertifyFailure{CertifyFailure::Stage::Determinant,
                                  "determinant vanishes or is inconsistent at sampled points", -1, -1};
        cert.constant = *c;
    }
    return cert;
}

}  // namespace detfree
