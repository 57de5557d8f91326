#include "detfree/analyzer.hpp"

#include <algorithm>
#include <functional>

namespace detfree {

namespace {

long long binom_dim(int nvars, int e) { return poly_dim(nvars, e); }

// Collect certified (degree, dim AR) pairs from a report.
std::vector<std::pair<int, long long>> certified_dims(const DimReport& dims) {
    std::vector<std::pair<int, long long>> out;
    for (const auto& e : dims.entries)
        if (e.certified) out.emplace_back(e.degree, e.dim_ar);
    return out;
}

}  // namespace

std::optional<std::string> degree_count_test(int nvars, int z0, long long deg_f) {
    long long positive_needed = static_cast<long long>(nvars - 1) - z0;
    if (deg_f - 1 < positive_needed) {
        return "a free basis would need " + std::to_string(positive_needed) +
               " positive exponents summing to deg F - 1 = " + std::to_string(deg_f - 1);
    }
    return std::nullopt;
}

int essential_defect(const Model& model, const Arrangement& arr, const AnalyzeConfig& cfg) {
    ScanConfig sc;
    sc.d_max = 0;
    sc.prime_count = cfg.prime_count;
    sc.prime_bits = cfg.prime_bits;
    sc.seed = cfg.seed;
    sc.threads = cfg.threads;
    GradedScan scan = scan_arrangement(model, arr, sc);
    if (scan.certified_through < 0) throw std::runtime_error("degree-0 tangency space could not be certified");
    return static_cast<int>(scan.degrees.front().dim_ar_upper);
}

int regularity_from_exponents(const std::vector<int>& exponents, long long deg_f) {
    if (exponents.empty()) throw std::invalid_argument("regularity requires certified exponents");
    int mx = *std::max_element(exponents.begin(), exponents.end());
    return static_cast<int>(mx + deg_f - 3);
}

namespace {

// Enumerate sorted exponent multisets consistent with the certified data.
// Parts larger than the explored degree form one collapsed class: they add
// nothing to any certified dimension, so only the sum constraint sees them.
bool exists_free_multiset(int nvars, long long deg_f, const std::vector<std::pair<int, long long>>& dims) {
    if (dims.empty()) return true;
    int explored = 0;
    for (auto& [d, v] : dims) explored = std::max(explored, d);
    const int parts_total = nvars - 1;
    std::vector<long long> pred(dims.size(), 0);

    std::function<bool(int, int, long long)> rec = [&](int idx, int min_part, long long sum_small) -> bool {
        // close with t parts above the explored range
        long long t = parts_total - idx;
        long long remaining = deg_f - 1 - sum_small;
        bool sum_ok = (t == 0 && remaining == 0) ||
                      (t > 0 && remaining >= t * (explored + 1) && remaining <= t * (deg_f - 1));
        if (sum_ok) {
            bool all_match = true;
            for (std::size_t k = 0; k < dims.size(); ++k)
                if (pred[k] != dims[k].second) all_match = false;
            if (all_match) return true;
        }
        if (idx == parts_total) return false;
        for (int v = min_part; v <= explored; ++v) {
            if (sum_small + v > deg_f - 1) break;
            bool ok = true;
            for (std::size_t k = 0; k < dims.size(); ++k) {
                pred[k] += binom_dim(nvars, dims[k].first - v);
                if (pred[k] > dims[k].second) ok = false;
            }
            if (ok && rec(idx + 1, v, sum_small + v)) return true;
            for (std::size_t k = 0; k < dims.size(); ++k) pred[k] -= binom_dim(nvars, dims[k].first - v);
        }
        return false;
    };
    return rec(0, 0, 0);
}

// Nearly-free shapes: ambient n = nvars - 1, parts d_0 <= ... <= d_n with
// sum of the first n parts equal to deg F, and a single relation in degree
// d_n + 1.  Small parts (<= explored) are enumerated; larger parts only face
// the sum constraint.
bool nearly_free_search(int nvars, long long deg_f, const std::vector<std::pair<int, long long>>& dims) {
    if (dims.empty()) return true;
    int explored = 0;
    for (auto& [d, v] : dims) explored = std::max(explored, d);
    const int lead_parts = nvars - 1;  // d_0..d_{n-1}, carrying the sum constraint
    std::vector<long long> pred(dims.size(), 0);

    auto dims_match_with_last = [&](bool last_small, int dn) {
        for (std::size_t k = 0; k < dims.size(); ++k) {
            long long v = pred[k];
            if (last_small) v += binom_dim(nvars, dims[k].first - dn);
            v -= binom_dim(nvars, dims[k].first - (dn + 1));  // the relation
            if (v != dims[k].second) return false;
        }
        return true;
    };

    // idx small parts assigned among d_0..d_{n-1}; close with t big parts
    std::function<bool(int, int, long long)> rec = [&](int idx, int min_part, long long sum_small) -> bool {
        long long t = lead_parts - idx;
        long long remaining = deg_f - sum_small;
        bool lead_ok = (t == 0 && remaining == 0) ||
                       (t > 0 && remaining >= t * (explored + 1) && remaining <= t * deg_f);
        if (lead_ok) {
            if (t > 0) {
                // some lead part exceeds the explored range, hence so does d_n
                if (dims_match_with_last(false, explored + 1)) return true;
            } else {
                for (int dn = min_part; dn <= explored; ++dn)
                    if (dims_match_with_last(true, dn)) return true;
                if (dims_match_with_last(false, explored + 1)) return true;  // big d_n
            }
        }
        if (idx == lead_parts) return false;
        for (int v = min_part; v <= explored; ++v) {
            if (sum_small + v > deg_f) break;
            bool ok = true;
            for (std::size_t k = 0; k < dims.size(); ++k) {
                pred[k] += binom_dim(nvars, dims[k].first - v);
                // the relation can cancel at most C(d-1+nv-1, nv-1)
                if (pred[k] > dims[k].second + binom_dim(nvars, dims[k].first - 1)) ok = false;
            }
            if (ok && rec(idx + 1, v, sum_small + v)) return true;
            for (std::size_t k = 0; k < dims.size(); ++k) pred[k] -= binom_dim(nvars, dims[k].first - v);
        }
        return false;
    };
    return rec(0, 0, 0);
}

}  // namespace

bool exists_consistent_free_multiset(int nvars, int z0, long long deg_f, const DimReport& dims) {
    (void)z0;  // the zero count is pinned by the certified d = 0 entry itself
    return exists_free_multiset(nvars, deg_f, certified_dims(dims));
}

bool exists_consistent_nearly_free_shape(int nvars, int z0, long long deg_f, const DimReport& dims) {
    (void)z0;
    return nearly_free_search(nvars, deg_f, certified_dims(dims));
}

std::optional<int> shape_consistency(int nvars, const DimReport& dims, const ShapeHypothesis& hyp) {
    for (const auto& e : dims.entries) {
        if (!e.certified) continue;
        long long pred = 0;
        for (int d_i : hyp.exponents) pred += binom_dim(nvars, e.degree - d_i);
        if (hyp.kind == ShapeHypothesis::Kind::NearlyFree) {
            int dn = hyp.exponents.empty() ? 0 : hyp.exponents.back();
            pred -= binom_dim(nvars, e.degree - (dn + 1));
        }
        if (pred != e.dim_ar) return e.degree;
    }
    return std::nullopt;
}

namespace {

Derivation normalize_first_coefficient(const Derivation& d) {
    for (const auto& c : d.coeffs) {
        if (c.is_zero()) continue;
        mpq_class lead = c.terms().front().second;
        if (lead == 1) return d;
        Derivation out = d;
        mpq_class inv = 1 / lead;
        for (auto& cc : out.coeffs) cc = cc.scaled(inv);
        return out;
    }
    return d;
}

DimReport dims_from_scan(const Model& model, const GradedScan& scan) {
    DimReport rep;
    rep.arr = scan.arr;
    rep.primes = scan.lift.primes;
    rep.instability = scan.instability;
    rep.certified_through = scan.certified_through;
    for (const auto& ds : scan.degrees) {
        DimReport::Entry e;
        e.degree = ds.degree;
        long long euler_part = poly_dim(model.nvars(), ds.degree - 1);
        e.dim_d_upper = ds.dim_ar_upper + euler_part;
        e.dim_d_lower = ds.dim_ar_lower + euler_part;
        e.dim_ar = ds.dim_ar_upper;
        e.certified = ds.certified;
        rep.entries.push_back(e);
    }
    return rep;
}

}  // namespace

FreenessVerdict analyze(const Model& model, const Arrangement& arr, const AnalyzeConfig& cfg) {
    const int nv = model.nvars();
    const bool is_35 = model.shape() == MatrixShape{3, 5};
    if (is_35 && arr.factor_count() >= 8 && !cfg.experimental)
        throw std::invalid_argument(
            "arrangements with 8 or more factors run under --experimental (budgeted evidence scan)");

    FreenessVerdict verdict;
    verdict.arr = arr;
    verdict.deg_f = arr.degree();

    ScanConfig sc;
    sc.d_max = cfg.d_max;
    sc.prime_count = cfg.prime_count;
    sc.prime_bits = cfg.prime_bits;
    sc.seed = cfg.seed;
    sc.threads = cfg.threads;

    PitConfig pit;
    pit.seed = cfg.seed;
    pit.prime_bits = cfg.prime_bits;

    GradedScanner scanner(model, arr, sc);

    auto snapshot = [&]() {
        GradedScan s;
        s.arr = arr;
        s.degrees = scanner.degrees();
        s.generators = scanner.generators();
        s.lift = scanner.lift_report();
        s.instability = scanner.instability_seen();
        s.certified_through = scanner.certified_through();
        return s;
    };

    // degree 0: essential defect
    bool ok0 = scanner.advance();
    verdict.explored_d_max = 0;
    if (!ok0) {
        verdict.kind = FreenessVerdict::Kind::Undetermined;
        verdict.dims = dims_from_scan(model, snapshot());
        verdict.instability = scanner.instability_seen();
        verdict.note = "degree 0 not certified";
        return verdict;
    }
    verdict.z0 = static_cast<int>(scanner.degrees().front().dim_ar_upper);

    auto deg_obstruction = degree_count_test(nv, verdict.z0, verdict.deg_f);
    if (deg_obstruction && !cfg.experimental && !cfg.full_depth) {
        verdict.kind = FreenessVerdict::Kind::NotFreeByDegreeCount;
        verdict.obstruction = *deg_obstruction;
        verdict.dims = dims_from_scan(model, snapshot());
        return verdict;
    }

    bool saito_failed = false;
    for (int d = 1; d <= cfg.d_max; ++d) {
        bool ok = scanner.advance();
        verdict.explored_d_max = d;
        if (!ok) {
            verdict.kind = FreenessVerdict::Kind::Undetermined;
            verdict.dims = dims_from_scan(model, snapshot());
            verdict.instability = scanner.instability_seen();
            verdict.note = "graded dimensions not certified at degree " + std::to_string(d);
            return verdict;
        }

        if (cfg.experimental) continue;

        // complete generating set of the right size and degree sum -> Saito
        const auto& gens = scanner.generators();
        long long gen_sum = 0;
        for (const auto& g : gens) gen_sum += g.degree;
        if (!saito_failed && !deg_obstruction && static_cast<int>(gens.size()) == nv - 1 &&
            gen_sum == verdict.deg_f - 1) {
            std::vector<Derivation> candidates;
            std::string source = "lifted";
            std::string note;
            if (cfg.prefer_paper_basis) {
                if (auto pb = known_family_basis(model, arr)) {
                    // ship the transcription through the same exact pipeline;
                    // a failure is reported, never silently patched
                    std::vector<Derivation> paper = pb->derivations;
                    CertifyOutcome out = certify_free(model, arr, paper, cfg.mode, pit, "paper-basis");
                    if (std::holds_alternative<SaitoCertificate>(out)) {
                        auto cert = std::get<SaitoCertificate>(out);
                        verdict.kind = FreenessVerdict::Kind::CertifiedFree;
                        verdict.certificate = cert;
                        verdict.exponents = cert.exponents;
                        verdict.regularity = regularity_from_exponents(cert.exponents, verdict.deg_f);
                        verdict.dims = dims_from_scan(model, snapshot());
                        return verdict;
                    }
                    const auto& fail = std::get<CertifyFailure>(out);
                    if (fail.stage == CertifyFailure::Stage::Tangency) {
                        note = "paper basis transcription check failed: " + fail.detail;
                    } else {
                        note = "paper basis rejected: " + fail.detail;
                    }
                }
            }
            candidates.reserve(gens.size());
            for (const auto& g : gens) candidates.push_back(normalize_first_coefficient(g.deriv));
            CertifyOutcome out = certify_free(model, arr, candidates, cfg.mode, pit, source);
            if (std::holds_alternative<SaitoCertificate>(out)) {
                auto cert = std::get<SaitoCertificate>(out);
                verdict.kind = FreenessVerdict::Kind::CertifiedFree;
                verdict.certificate = cert;
                verdict.exponents = cert.exponents;
                verdict.regularity = regularity_from_exponents(cert.exponents, verdict.deg_f);
                verdict.dims = dims_from_scan(model, snapshot());
                verdict.note = note;
                return verdict;
            }
            saito_failed = true;  // generators do not form a basis; keep scanning
            verdict.note = note.empty() ? std::get<CertifyFailure>(out).detail : note;
        }

        if (!cfg.full_depth) {
            DimReport dims = dims_from_scan(model, snapshot());
            if (!exists_consistent_free_multiset(nv, verdict.z0, verdict.deg_f, dims)) {
                verdict.kind = FreenessVerdict::Kind::NotFreeByGradedObstruction;
                verdict.dims = std::move(dims);
                verdict.obstruction =
                    "no exponent multiset matches the certified graded dimensions through degree " +
                    std::to_string(d);
                return verdict;
            }
        }
    }

    DimReport dims = dims_from_scan(model, snapshot());
    if (cfg.experimental) {
        verdict.kind = FreenessVerdict::Kind::Experimental;
        verdict.dims = std::move(dims);
        verdict.note = "experimental evidence scan; no verdict claimed";
        return verdict;
    }
    if (deg_obstruction) {
        verdict.kind = FreenessVerdict::Kind::NotFreeByDegreeCount;
        verdict.obstruction = *deg_obstruction;
        verdict.dims = std::move(dims);
        return verdict;
    }
    if (!exists_consistent_free_multiset(nv, verdict.z0, verdict.deg_f, dims)) {
        verdict.kind = FreenessVerdict::Kind::NotFreeByGradedObstruction;
        verdict.dims = std::move(dims);
        verdict.obstruction = "no exponent multiset matches the certified graded dimensions through degree " +
                              std::to_string(verdict.explored_d_max);
        return verdict;
    }
    verdict.kind = FreenessVerdict::Kind::Undetermined;
    verdict.dims = std::move(dims);
    verdict.instability = scanner.instability_seen();
    return verdict;
}

}  // namespace detfree
