#include "detfree/graded.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cassert>
#include <memory>
#include <mutex>
#include <ostream>
#include <unordered_map>

#include "detfree/runtime.hpp"

namespace detfree {

long long poly_dim(int nvars, int e) {
    if (e < 0) return 0;
    return static_cast<long long>(monomial_count(nvars, e));
}

namespace {

// ---------------------------------------------------------------------------
// degree tables: canonical monomial list + rank lookup, cached per (nvars, d)

struct DegreeTable {
    std::vector<Monomial> mons;  // descending grevlex
    std::unordered_map<Monomial, std::uint32_t, MonomialHash> rank;
};

const DegreeTable& degree_table(int nvars, int d) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::unique_ptr<DegreeTable>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(nvars, d);
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;
    auto tab = std::make_unique<DegreeTable>();
    tab->mons = monomials_of_degree(nvars, d);
    tab->rank.reserve(tab->mons.size() * 2);
    for (std::uint32_t i = 0; i < tab->mons.size(); ++i) tab->rank.emplace(tab->mons[i], i);
    return *cache.emplace(key, std::move(tab)).first->second;
}

// ---------------------------------------------------------------------------
// bidegree bookkeeping (column marginals then row marginals)

using Bideg = std::array<int, 9>;  // cols (up to 6) then rows (up to 3)

int bideg_len(const MatrixShape& s) { return s.cols + s.rows; }

Bideg bideg_of_monomial(const MatrixShape& s, const Monomial& m) {
    Bideg b{};
    for (int v = 0; v < s.vars(); ++v) {
        int e = m.exp(v);
        if (!e) continue;
        b[static_cast<std::size_t>(s.col_of(v))] += e;
        b[static_cast<std::size_t>(s.cols + s.row_of(v))] += e;
    }
    return b;
}

Bideg bideg_sub(const Bideg& a, const Bideg& b) {
    Bideg r{};
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

Bideg bideg_add(const Bideg& a, const Bideg& b) {
    Bideg r{};
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

std::uint64_t pack_bideg(const MatrixShape& s, const Bideg& b) {
    std::uint64_t key = 0;
    for (int i = 0; i < bideg_len(s); ++i) {
        int v = b[static_cast<std::size_t>(i)] + 1;  // -1 is legal (variable shifts)
        assert(v >= 0 && v < 64);
        key |= static_cast<std::uint64_t>(v) << (6 * i);
    }
    return key;
}

Bideg bideg_of_var(const MatrixShape& s, int u) {
    return bideg_of_monomial(s, Monomial::variable(u));
}

// ---------------------------------------------------------------------------
// dense reduced row echelon over F_p

struct Dense {
    std::size_t rows = 0, cols = 0;
    std::vector<std::uint64_t> a;
    void init(std::size_t r, std::size_t c) {
        rows = r;
        cols = c;
        a.assign(r * c, 0);
    }
    std::uint64_t* row(std::size_t r) { return a.data() + r * cols; }
    const std::uint64_t* row(std::size_t r) const { return a.data() + r * cols; }
};

// In-place Gauss-Jordan; returns pivot columns ascending.  The result is the
// unique RREF, so the outcome does not depend on the elimination path.
void rref(Dense& m, const PrimeField& F, std::vector<std::uint32_t>& pivots) {
    pivots.clear();
    std::size_t rank = 0;
    for (std::size_t col = 0; col < m.cols && rank < m.rows; ++col) {
        std::size_t sel = rank;
        while (sel < m.rows && m.row(sel)[col] == 0) ++sel;
        if (sel == m.rows) continue;
        if (sel != rank) std::swap_ranges(m.row(sel), m.row(sel) + m.cols, m.row(rank));
        std::uint64_t* prow = m.row(rank);
        if (prow[col] != 1) {
            auto s = F.scale(F.inv(prow[col]));
            for (std::size_t j = col; j < m.cols; ++j) prow[j] = F.mul_scaled(s, prow[j]);
        }
        for (std::size_t r = 0; r < m.rows; ++r) {
            if (r == rank) continue;
            std::uint64_t v = m.row(r)[col];
            if (!v) continue;
            auto s = F.scale(v);
            std::uint64_t* rr = m.row(r);
            for (std::size_t j = col; j < m.cols; ++j) rr[j] = F.sub(rr[j], F.mul_scaled(s, prow[j]));
        }
        pivots.push_back(static_cast<std::uint32_t>(col));
        ++rank;
    }
}

// Nullspace basis of an RREF matrix: one vector per free column, entry 1 at
// the free column and the negated column values at the pivot positions.
std::vector<std::vector<std::pair<std::uint32_t, std::uint64_t>>> rref_nullspace(
    const Dense& m, const PrimeField& F, const std::vector<std::uint32_t>& pivots) {
    std::vector<std::vector<std::pair<std::uint32_t, std::uint64_t>>> out;
    std::vector<bool> is_pivot(m.cols, false);
    for (auto p : pivots) is_pivot[p] = true;
    for (std::uint32_t j = 0; j < m.cols; ++j) {
        if (is_pivot[j]) continue;
        std::vector<std::pair<std::uint32_t, std::uint64_t>> vec;
        for (std::size_t t = 0; t < pivots.size(); ++t) {
            std::uint64_t v = m.row(t)[j];
            if (v) vec.emplace_back(pivots[t], F.neg(v));
        }
        vec.emplace_back(j, 1);
        std::sort(vec.begin(), vec.end());
        out.push_back(std::move(vec));
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// system assembly

namespace {

struct BlockDraft {
    std::vector<std::uint32_t> cols;
    std::vector<std::tuple<std::uint64_t, std::uint32_t, std::int8_t>> trips;  // row gid, col gid, value
};

}  // namespace

struct SystemLayout {
    int nvars = 0;
    std::size_t n_d = 0, n_dm1 = 0, n_eq = 0;
    std::size_t a_off_end = 0;  // nvars * n_d

    std::uint32_t a_gid(int u, std::uint32_t rank) const {
        return static_cast<std::uint32_t>(static_cast<std::size_t>(u) * n_d + rank);
    }
    std::uint32_t g_gid(int factor, std::uint32_t rank) const {
        return static_cast<std::uint32_t>(a_off_end + static_cast<std::size_t>(factor) * n_dm1 + rank);
    }
};

TangencySystem build_tangency_system(const Model& model, const Arrangement& arr, int degree, std::uint64_t prime,
                                     bool ar_mode) {
    if (degree < 0) throw std::invalid_argument("negative degree");
    const MatrixShape& shape = model.shape();
    const int nv = shape.vars();
    const int m = shape.rows;
    const int nf = arr.factor_count();

    const DegreeTable& tab_d = degree_table(nv, degree);
    const DegreeTable* tab_g = degree >= 1 ? &degree_table(nv, degree - 1) : nullptr;
    const DegreeTable& tab_eq = degree_table(nv, degree + m - 1);

    SystemLayout lay;
    lay.nvars = nv;
    lay.n_d = tab_d.mons.size();
    lay.n_dm1 = tab_g ? tab_g->mons.size() : 0;
    lay.n_eq = tab_eq.mons.size();
    lay.a_off_end = static_cast<std::size_t>(nv) * lay.n_d;

    TangencySystem sys;
    sys.model = &model;
    sys.arr = arr;
    sys.degree = degree;
    sys.prime = prime;
    sys.ar_mode = ar_mode;
    sys.a_unknowns = lay.a_off_end;
    sys.g_unknowns = static_cast<std::size_t>(nf) * lay.n_dm1;
    sys.equation_rows = static_cast<std::size_t>(nf) * lay.n_eq;
    sys.constraint_rows = ar_mode ? lay.n_dm1 : 0;

    // derivative term lists per factor and variable
    struct DTerm {
        Monomial mon;
        std::int8_t sign;
    };
    std::vector<std::vector<std::vector<DTerm>>> dterms(static_cast<std::size_t>(nf));
    std::vector<Bideg> factor_bideg(static_cast<std::size_t>(nf));
    for (int i = 0; i < nf; ++i) {
        const PolyQ& f = model.minor(arr.labels[static_cast<std::size_t>(i)]);
        factor_bideg[static_cast<std::size_t>(i)] = bideg_of_monomial(shape, f.terms().front().first);
        auto& per_var = dterms[static_cast<std::size_t>(i)];
        per_var.resize(static_cast<std::size_t>(nv));
        for (int u = 0; u < nv; ++u) {
            PolyQ d = partial_derivative(f, u);
            for (const auto& [mon, c] : d.terms())
                per_var[static_cast<std::size_t>(u)].push_back(DTerm{mon, static_cast<std::int8_t>(sgn(c) > 0 ? 1 : -1)});
        }
    }

    std::unordered_map<std::uint64_t, BlockDraft> drafts;
    drafts.reserve(4096);

    std::vector<Bideg> var_bidegs(static_cast<std::size_t>(nv));
    for (int u = 0; u < nv; ++u) var_bidegs[static_cast<std::size_t>(u)] = bideg_of_var(shape, u);

    std::size_t nnz = 0;
    // a-unknowns
    for (int u = 0; u < nv; ++u) {
        for (std::uint32_t r = 0; r < lay.n_d; ++r) {
            const Monomial& mu = tab_d.mons[r];
            std::uint64_t key = pack_bideg(shape, bideg_sub(bideg_of_monomial(shape, mu), var_bidegs[static_cast<std::size_t>(u)]));
            BlockDraft& bd = drafts[key];
            std::uint32_t cgid = lay.a_gid(u, r);
            bd.cols.push_back(cgid);
            for (int i = 0; i < nf; ++i) {
                for (const DTerm& t : dterms[static_cast<std::size_t>(i)][static_cast<std::size_t>(u)]) {
                    Monomial nu = mu * t.mon;
                    std::uint64_t row = static_cast<std::uint64_t>(i) * lay.n_eq + tab_eq.rank.at(nu);
                    bd.trips.emplace_back(row, cgid, t.sign);
                    ++nnz;
                }
            }
        }
    }
    // cofactor unknowns (g_i has degree d-1; the constraint row block matches)
    if (tab_g) {
        for (std::uint32_t r = 0; r < lay.n_dm1; ++r) {
            const Monomial& nu_g = tab_g->mons[r];
            std::uint64_t key = pack_bideg(shape, bideg_of_monomial(shape, nu_g));
            BlockDraft& bd = drafts[key];
            for (int i = 0; i < nf; ++i) {
                std::uint32_t cgid = lay.g_gid(i, r);
                bd.cols.push_back(cgid);
                const PolyQ& f = model.minor(arr.labels[static_cast<std::size_t>(i)]);
                for (const auto& [mon, c] : f.terms()) {
                    Monomial nu = nu_g * mon;
                    std::uint64_t row = static_cast<std::uint64_t>(i) * lay.n_eq + tab_eq.rank.at(nu);
                    bd.trips.emplace_back(row, cgid, static_cast<std::int8_t>(sgn(c) > 0 ? -1 : 1));
                    ++nnz;
                }
                if (ar_mode) {
                    std::uint64_t row = static_cast<std::uint64_t>(nf) * lay.n_eq + r;
                    bd.trips.emplace_back(row, cgid, 1);
                    ++nnz;
                }
            }
        }
    }
    sys.nnz = nnz;

    // sparsity contract: <= 2 entries per a-unknown per factor plus the
    // cofactor block (m! per g-unknown, +1 in AR mode)
    std::size_t fact = 1;
    for (int i = 2; i <= m; ++i) fact *= static_cast<std::size_t>(i);
    if (nnz > sys.a_unknowns * 2 * static_cast<std::size_t>(nf) + sys.g_unknowns * (fact + (ar_mode ? 1 : 0)))
        throw std::logic_error("tangency system sparsity bound violated");

    sys.blocks.reserve(drafts.size());
    for (auto& [key, bd] : drafts) {
        TangencySystem::Block blk;
        blk.key = key;
        std::sort(bd.cols.begin(), bd.cols.end());
        blk.cols = std::move(bd.cols);
        std::vector<std::uint64_t> rows;
        rows.reserve(bd.trips.size());
        for (const auto& t : bd.trips) rows.push_back(std::get<0>(t));
        std::sort(rows.begin(), rows.end());
        rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
        blk.row_ids = std::move(rows);
        sys.blocks.push_back(std::move(blk));
    }
    std::sort(sys.blocks.begin(), sys.blocks.end(),
              [](const TangencySystem::Block& a, const TangencySystem::Block& b) { return a.key < b.key; });

    // attach entries with local indices encoded in the dense triplet list
    // (kept sparse; dense matrices are materialized per block when solving)
    std::unordered_map<std::uint64_t, std::size_t> block_index;
    block_index.reserve(sys.blocks.size() * 2);
    for (std::size_t i = 0; i < sys.blocks.size(); ++i) block_index.emplace(sys.blocks[i].key, i);
    for (auto& [key, bd] : drafts) {
        auto& blk = sys.blocks[block_index.at(key)];
        blk.dense.reserve(bd.trips.size());
        for (const auto& [row, col, val] : bd.trips) {
            std::uint32_t lr = static_cast<std::uint32_t>(
                std::lower_bound(blk.row_ids.begin(), blk.row_ids.end(), row) - blk.row_ids.begin());
            std::uint32_t lc = static_cast<std::uint32_t>(
                std::lower_bound(blk.cols.begin(), blk.cols.end(), col) - blk.cols.begin());
            // encode (local row, local col, sign bit) in one word
            std::uint64_t enc = (static_cast<std::uint64_t>(lr) << 32) | (static_cast<std::uint64_t>(lc) << 1) |
                                (val < 0 ? 1u : 0u);
            blk.dense.push_back(enc);
        }
    }
    return sys;
}

const TangencySystem::Block* TangencySystem::block_of_unknown(std::uint32_t col) const {
    for (const auto& b : blocks)
        if (std::binary_search(b.cols.begin(), b.cols.end(), col)) return &b;
    return nullptr;
}

void dump_triplets(const TangencySystem& sys, std::ostream& os) {
    os << "%%detfree tangency system: triplet format\n";
    os << "% arrangement:";
    for (int l : sys.arr.labels) os << ' ' << l;
    os << "\n% degree " << sys.degree << " prime " << sys.prime << (sys.ar_mode ? " ar" : " full") << "\n";
    os << sys.equation_rows + sys.constraint_rows << ' ' << sys.unknown_count() << ' ' << sys.nnz << "\n";
    for (const auto& b : sys.blocks) {
        for (std::uint64_t enc : b.dense) {
            std::uint32_t lr = static_cast<std::uint32_t>(enc >> 32);
            std::uint32_t lc = static_cast<std::uint32_t>((enc & 0xffffffffu) >> 1);
            int val = (enc & 1u) ? -1 : 1;
            os << b.row_ids[lr] << ' ' << b.cols[lc] << ' ' << val << "\n";
        }
    }
}

namespace {

Dense materialize(const TangencySystem::Block& blk, const PrimeField& F) {
    Dense d;
    d.init(blk.row_ids.size(), blk.cols.size());
    const std::uint64_t neg1 = F.modulus() - 1;
    for (std::uint64_t enc : blk.dense) {
        std::uint32_t lr = static_cast<std::uint32_t>(enc >> 32);
        std::uint32_t lc = static_cast<std::uint32_t>((enc & 0xffffffffu) >> 1);
        std::uint64_t v = (enc & 1u) ? neg1 : 1;
        std::uint64_t& cell = d.row(lr)[lc];
        cell = F.add(cell, v);
    }
    return d;
}

// materialize with a column subset removed (local indices)
Dense materialize_filtered(const TangencySystem::Block& blk, const PrimeField& F,
                           const std::vector<std::uint32_t>& dropped_local,
                           std::vector<std::uint32_t>& kept_local) {
    std::vector<bool> drop(blk.cols.size(), false);
    for (auto c : dropped_local) drop[c] = true;
    kept_local.clear();
    std::vector<std::uint32_t> remap(blk.cols.size(), 0);
    for (std::uint32_t c = 0; c < blk.cols.size(); ++c) {
        if (!drop[c]) {
            remap[c] = static_cast<std::uint32_t>(kept_local.size());
            kept_local.push_back(c);
        }
    }
    Dense d;
    d.init(blk.row_ids.size(), kept_local.size());
    const std::uint64_t neg1 = F.modulus() - 1;
    for (std::uint64_t enc : blk.dense) {
        std::uint32_t lr = static_cast<std::uint32_t>(enc >> 32);
        std::uint32_t lc = static_cast<std::uint32_t>((enc & 0xffffffffu) >> 1);
        if (drop[lc]) continue;
        std::uint64_t v = (enc & 1u) ? neg1 : 1;
        std::uint64_t& cell = d.row(lr)[remap[lc]];
        cell = F.add(cell, v);
    }
    return d;
}

}  // namespace

NullspaceResult nullspace(const TangencySystem& sys) {
    PrimeField F(sys.prime);
    NullspaceResult out;
    std::vector<SparseVecP> vecs;
    for (const auto& blk : sys.blocks) {
        Dense d = materialize(blk, F);
        std::vector<std::uint32_t> pivots;
        rref(d, F, pivots);
        auto basis = rref_nullspace(d, F, pivots);
        for (auto& v : basis) {
            SparseVecP sv;
            sv.entries.reserve(v.size());
            for (auto& [lc, val] : v) sv.entries.emplace_back(blk.cols[lc], val);
            vecs.push_back(std::move(sv));
        }
    }
    // canonical order: by free column = the coordinate carrying the trailing 1
    auto free_col = [](const SparseVecP& v) {
        return v.entries.back().first;  // entries sorted; free col is where value is forced 1
    };
    // the free column is the unique coordinate not a pivot: from construction
    // it is the largest index with value 1 contributed last; recompute robustly
    std::sort(vecs.begin(), vecs.end(), [&](const SparseVecP& a, const SparseVecP& b) {
        return free_col(a) < free_col(b);
    });
    out.dimension = static_cast<long long>(vecs.size());
    out.basis = std::move(vecs);
    return out;
}

// ---------------------------------------------------------------------------
// graded scan

namespace {

struct GenShiftInfo {
    Bideg shift{};
    bool valid = false;
};

GenShiftInfo generator_shift(const MatrixShape& shape, const RationalGenerator& g) {
    GenShiftInfo info;
    for (int u = 0; u < shape.vars(); ++u) {
        const PolyQ& c = g.deriv.coeffs[static_cast<std::size_t>(u)];
        if (c.is_zero()) continue;
        Bideg s = bideg_sub(bideg_of_monomial(shape, c.terms().front().first), bideg_of_var(shape, u));
        if (!info.valid) {
            info.shift = s;
            info.valid = true;
        }
    }
    return info;
}

struct PrimeDegreeData {
    std::uint64_t prime = 0;
    // per block, aligned with the system's block order
    struct BlockStat {
        std::uint64_t key = 0;
        long long nullity = 0;
        long long w_rank = 0;
        std::vector<std::uint32_t> w_pivots_global;
        std::vector<std::uint32_t> candidate_free_global;
        std::vector<SparseVecP> candidates;  // new-generator vectors, global ids
    };
    std::vector<BlockStat> stats;
    long long nullity_total = 0;
    long long w_total = 0;
};

struct ProductRow {
    std::vector<std::pair<std::uint32_t, std::uint64_t>> entries;  // global id, value mod p
};

}  // namespace

struct GradedScanner::Impl {
    const Model& model;
    Arrangement arr;
    ScanConfig cfg;
    std::uint64_t prime_stream;
    std::vector<std::uint64_t> primes;
    std::vector<DegreeSummary> degree_data;
    std::vector<RationalGenerator> gens;
    LiftReport lift;
    bool instability = false;
    int certified_through = -1;
    int next_d = 0;
    bool stopped = false;

    Impl(const Model& m, const Arrangement& a, const ScanConfig& c) : model(m), arr(a), cfg(c) {
        prime_stream = labels_hash(arr.labels, cfg.seed ^ 0x8f1bbcdc1a2b3c4dULL);
        for (int i = 0; i < cfg.prime_count; ++i) primes.push_back(fresh_prime());
        lift.primes = primes;
    }

    std::uint64_t fresh_prime() {
        for (;;) {
            std::uint64_t p = random_prime(cfg.prime_bits, prime_stream);
            if (std::find(primes.begin(), primes.end(), p) == primes.end()) return p;
        }
    }

    // products of monomials with all verified generators of lower degree,
    // reduced mod p and bucketed by block key
    std::unordered_map<std::uint64_t, std::vector<ProductRow>> product_rows(int d, const PrimeField& F,
                                                                            const SystemLayout& lay) const {
        const MatrixShape& shape = model.shape();
        std::unordered_map<std::uint64_t, std::vector<ProductRow>> buckets;
        for (const auto& g : gens) {
            int e = d - g.degree;
            if (e < 0) continue;
            if (e == 0) continue;  // same-degree generators are handled as candidates, not products
            GenShiftInfo shift = generator_shift(shape, g);
            if (!shift.valid) continue;
            const DegreeTable& tab_e = degree_table(shape.vars(), e);
            const DegreeTable& tab_d = degree_table(shape.vars(), d);
            const DegreeTable* tab_g = d >= 1 ? &degree_table(shape.vars(), d - 1) : nullptr;
            for (const Monomial& mu : tab_e.mons) {
                std::uint64_t key = pack_bideg(shape, bideg_add(shift.shift, bideg_of_monomial(shape, mu)));
                ProductRow row;
                for (int u = 0; u < shape.vars(); ++u) {
                    for (const auto& [mon, c] : g.deriv.coeffs[static_cast<std::size_t>(u)].terms()) {
                        std::uint64_t v = F.from_mpq(c);
                        if (!v) continue;
                        row.entries.emplace_back(lay.a_gid(u, tab_d.rank.at(mon * mu)), v);
                    }
                }
                for (std::size_t i = 0; i < g.cofactors.size(); ++i) {
                    for (const auto& [mon, c] : g.cofactors[i].terms()) {
                        std::uint64_t v = F.from_mpq(c);
                        if (!v) continue;
                        row.entries.emplace_back(lay.g_gid(static_cast<int>(i), tab_g->rank.at(mon * mu)), v);
                    }
                }
                std::sort(row.entries.begin(), row.entries.end());
                buckets[key].push_back(std::move(row));
            }
        }
        return buckets;
    }

    PrimeDegreeData compute_prime(int d, std::uint64_t p) const {
        PrimeField F(p);
        TangencySystem sys = build_tangency_system(model, arr, d, p, /*ar_mode=*/true);

        SystemLayout lay;
        lay.nvars = model.nvars();
        lay.n_d = static_cast<std::size_t>(poly_dim(model.nvars(), d));
        lay.n_dm1 = static_cast<std::size_t>(poly_dim(model.nvars(), d - 1));
        lay.n_eq = static_cast<std::size_t>(poly_dim(model.nvars(), d + model.shape().rows - 1));
        lay.a_off_end = static_cast<std::size_t>(model.nvars()) * lay.n_d;

        auto products = product_rows(d, F, lay);

        PrimeDegreeData out;
        out.prime = p;
        out.stats.resize(sys.blocks.size());

        std::atomic<bool> failed{false};
        std::atomic<bool> zero_div{false};
        std::string fail_what;
        std::mutex fail_mu;

        parallel_for(sys.blocks.size(), cfg.threads, [&](std::size_t bi) {
            if (failed.load()) return;
            try {
                const auto& blk = sys.blocks[bi];
                auto& stat = out.stats[bi];
                stat.key = blk.key;

                // W = products of lower-degree generators falling in this block
                std::vector<std::uint32_t> wpiv_local;
                auto it = products.find(blk.key);
                if (it != products.end()) {
                    Dense wm;
                    wm.init(it->second.size(), blk.cols.size());
                    for (std::size_t r = 0; r < it->second.size(); ++r) {
                        for (const auto& [gid, val] : it->second[r].entries) {
                            auto pos = std::lower_bound(blk.cols.begin(), blk.cols.end(), gid);
                            if (pos == blk.cols.end() || *pos != gid)
                                throw std::logic_error("product coordinate outside its block");
                            wm.row(r)[static_cast<std::size_t>(pos - blk.cols.begin())] = val;
                        }
                    }
                    rref(wm, F, wpiv_local);
                }
                stat.w_rank = static_cast<long long>(wpiv_local.size());
                for (auto c : wpiv_local) stat.w_pivots_global.push_back(blk.cols[c]);

                Dense tm = materialize(blk, F);
                std::vector<std::uint32_t> tpiv;
                rref(tm, F, tpiv);
                stat.nullity = static_cast<long long>(blk.cols.size()) - static_cast<long long>(tpiv.size());

                long long mu_b = stat.nullity - stat.w_rank;
                if (mu_b < 0) throw std::logic_error("product rank exceeds nullspace dimension");
                if (mu_b > 0) {
                    std::vector<std::uint32_t> kept;
                    Dense rm = materialize_filtered(blk, F, wpiv_local, kept);
                    std::vector<std::uint32_t> rpiv;
                    rref(rm, F, rpiv);
                    auto basis = rref_nullspace(rm, F, rpiv);
                    if (static_cast<long long>(basis.size()) != mu_b)
                        throw std::logic_error("reduced nullspace dimension mismatch");
                    for (auto& v : basis) {
                        SparseVecP sv;
                        std::uint32_t free_local = kept[v.back().first];
                        for (auto& [rc, val] : v) sv.entries.emplace_back(blk.cols[kept[rc]], val);
                        stat.candidate_free_global.push_back(blk.cols[free_local]);
                        stat.candidates.push_back(std::move(sv));
                    }
                }
            } catch (const ZeroDivisorError& e) {
                std::lock_guard<std::mutex> lock(fail_mu);
                zero_div.store(true);
                if (!failed.exchange(true)) fail_what = e.what();
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(fail_mu);
                if (!failed.exchange(true)) fail_what = e.what();
            }
        });
        if (failed.load()) {
            if (zero_div.load()) throw ZeroDivisorError(fail_what);
            throw std::logic_error(fail_what);
        }

        // every product bucket must have landed in an existing block
        {
            std::size_t consumed = 0;
            for (const auto& blk : sys.blocks)
                if (products.count(blk.key)) ++consumed;
            if (consumed != products.size()) throw std::logic_error("product bucket without a matching block");
        }

        for (const auto& s : out.stats) {
            out.nullity_total += s.nullity;
            out.w_total += s.w_rank;
        }
        return out;
    }

    static bool consistent(const PrimeDegreeData& a, const PrimeDegreeData& b) {
        if (a.stats.size() != b.stats.size()) return false;
        for (std::size_t i = 0; i < a.stats.size(); ++i) {
            const auto& x = a.stats[i];
            const auto& y = b.stats[i];
            if (x.key != y.key || x.nullity != y.nullity || x.w_rank != y.w_rank) return false;
            if (x.w_pivots_global != y.w_pivots_global) return false;
            if (x.candidate_free_global != y.candidate_free_global) return false;
        }
        return true;
    }

    // Decode a lifted coordinate vector into a derivation + cofactors.
    RationalGenerator decode(int d, const std::vector<std::pair<std::uint32_t, mpq_class>>& coords) const {
        const MatrixShape& shape = model.shape();
        const DegreeTable& tab_d = degree_table(shape.vars(), d);
        const DegreeTable* tab_g = d >= 1 ? &degree_table(shape.vars(), d - 1) : nullptr;
        std::size_t n_d = tab_d.mons.size();
        std::size_t a_end = static_cast<std::size_t>(shape.vars()) * n_d;
        std::vector<std::vector<PolyQ::Term>> coeff_terms(static_cast<std::size_t>(shape.vars()));
        std::vector<std::vector<PolyQ::Term>> cof_terms(arr.labels.size());
        for (const auto& [gid, val] : coords) {
            if (gid < a_end) {
                int u = static_cast<int>(gid / n_d);
                std::uint32_t r = static_cast<std::uint32_t>(gid % n_d);
                coeff_terms[static_cast<std::size_t>(u)].emplace_back(tab_d.mons[r], val);
            } else {
                std::size_t rest = gid - a_end;
                std::size_t n_g = tab_g->mons.size();
                int i = static_cast<int>(rest / n_g);
                std::uint32_t r = static_cast<std::uint32_t>(rest % n_g);
                cof_terms[static_cast<std::size_t>(i)].emplace_back(tab_g->mons[r], val);
            }
        }
        RationalGenerator g;
        g.degree = d;
        g.deriv = zero_derivation(shape);
        for (int u = 0; u < shape.vars(); ++u)
            g.deriv.coeffs[static_cast<std::size_t>(u)] = PolyQ(RationalDomain{}, std::move(coeff_terms[static_cast<std::size_t>(u)]));
        g.cofactors.reserve(arr.labels.size());
        for (auto& terms : cof_terms) g.cofactors.emplace_back(RationalDomain{}, std::move(terms));
        return g;
    }

    bool advance_degree() {
        const int d = next_d;
        std::vector<PrimeDegreeData> data;
        int retries = 0;
        for (;;) {
            data.clear();
            bool zero_divisor = false;
            for (std::uint64_t p : primes) {
                try {
                    data.push_back(compute_prime(d, p));
                } catch (const ZeroDivisorError&) {
                    zero_divisor = true;
                    break;
                }
            }
            if (!zero_divisor) {
                bool ok = true;
                for (std::size_t i = 1; i < data.size(); ++i)
                    if (!consistent(data[0], data[i])) ok = false;
                if (ok) break;
                instability = true;  // dimensions disagreed, not just a bad denominator
            }
            if (++retries > cfg.max_prime_retries) {
                DegreeSummary ds;
                ds.degree = d;
                ds.dim_ar_upper = data.empty() ? -1 : data[0].nullity_total;
                ds.dim_ar_lower = 0;
                ds.certified = false;
                degree_data.push_back(ds);
                lift.note = "prime instability persisted; degree " + std::to_string(d) + " uncertified";
                stopped = true;
                return false;
            }
            primes.clear();
            for (int i = 0; i < cfg.prime_count; ++i) primes.push_back(fresh_prime());
            lift.primes = primes;
        }

        const long long nullity = data[0].nullity_total;
        const long long w = data[0].w_total;
        const long long mu = nullity - w;

        DegreeSummary ds;
        ds.degree = d;
        ds.dim_ar_upper = nullity;
        ds.dim_ar_lower = w;
        ds.new_generators = 0;

        // lift the new canonical generators, extending the prime set on demand
        std::vector<RationalGenerator> fresh;
        bool lift_ok = true;
        std::size_t n_candidates = 0;
        for (const auto& s : data[0].stats) n_candidates += s.candidates.size();
        if (mu != static_cast<long long>(n_candidates)) throw std::logic_error("candidate count mismatch");

        for (std::size_t bi = 0; bi < data[0].stats.size() && lift_ok; ++bi) {
            for (std::size_t ci = 0; ci < data[0].stats[bi].candidates.size() && lift_ok; ++ci) {
                // union of supports across primes
                std::vector<std::uint32_t> support;
                for (const auto& pd : data)
                    for (const auto& [gid, val] : pd.stats[bi].candidates[ci].entries) support.push_back(gid);
                std::sort(support.begin(), support.end());
                support.erase(std::unique(support.begin(), support.end()), support.end());

                std::vector<std::pair<std::uint32_t, mpq_class>> coords;
                int used_primes = static_cast<int>(data.size());
                bool coords_ok = true;
                for (std::uint32_t gid : support) {
                    std::vector<std::pair<std::uint64_t, std::uint64_t>> residues;
                    for (const auto& pd : data) {
                        std::uint64_t v = 0;
                        const auto& es = pd.stats[bi].candidates[ci].entries;
                        auto it = std::lower_bound(es.begin(), es.end(), gid,
                                                   [](const std::pair<std::uint32_t, std::uint64_t>& e, std::uint32_t g) {
                                                       return e.first < g;
                                                   });
                        if (it != es.end() && it->first == gid) v = it->second;
                        residues.emplace_back(v, pd.prime);
                    }
                    auto q = lift_rational(residues);
                    if (!q) {
                        coords_ok = false;
                        break;
                    }
                    if (sgn(*q) != 0) coords.emplace_back(gid, *q);
                }

                if (!coords_ok) {
                    // add primes and retry this degree wholesale
                    if (static_cast<int>(data.size()) - cfg.prime_count >= cfg.lift_extra_primes) {
                        lift_ok = false;
                        lift.note = "rational reconstruction failed after prime budget";
                        break;
                    }
                    std::uint64_t p = fresh_prime();
                    primes.push_back(p);
                    lift.primes = primes;
                    try {
                        auto extra = compute_prime(d, p);
                        if (!consistent(data[0], extra)) {
                            instability = true;
                            lift_ok = false;
                            lift.note = "extra prime disagreed during lifting";
                            break;
                        }
                        data.push_back(std::move(extra));
                    } catch (const ZeroDivisorError&) {
                        primes.pop_back();
                    }
                    --ci;  // retry the same candidate with more primes
                    continue;
                }

                RationalGenerator g = decode(d, coords);
                LiftRecord rec;
                rec.degree = d;
                rec.generator_index = static_cast<int>(fresh.size());
                rec.primes_used = used_primes = static_cast<int>(data.size());
                rec.reconstructed = true;
                auto tv = tangency(model, g.deriv, arr);
                if (std::holds_alternative<TangencyFailure>(tv)) {
                    rec.exact_verified = false;
                    lift.records.push_back(rec);
                    lift_ok = false;
                    lift.note = "lifted generator failed exact tangency";
                    break;
                }
                // exact cofactors from the division, replacing the lifted ones
                auto cert = std::get<CofactorCertificate>(tv);
                PolyQ cof_sum(RationalDomain{});
                for (const auto& cq : cert.cofactors) cof_sum = cof_sum + cq;
                if (!cof_sum.is_zero()) {
                    rec.exact_verified = false;
                    lift.records.push_back(rec);
                    lift_ok = false;
                    lift.note = "lifted generator is tangent but not a Jacobian syzygy";
                    break;
                }
                g.cofactors = std::move(cert.cofactors);
                rec.exact_verified = true;
                lift.records.push_back(rec);
                fresh.push_back(std::move(g));
            }
        }

        if (!lift_ok) {
            ds.dim_ar_lower = w + static_cast<long long>(fresh.size());
            ds.certified = false;
            degree_data.push_back(ds);
            stopped = true;
            return false;
        }

        ds.dim_ar_lower = w + static_cast<long long>(fresh.size());
        ds.new_generators = static_cast<int>(fresh.size());
        ds.certified = (ds.dim_ar_lower == ds.dim_ar_upper);
        degree_data.push_back(ds);
        for (auto& g : fresh) gens.push_back(std::move(g));
        if (ds.certified && certified_through == d - 1) certified_through = d;
        ++next_d;
        if (!ds.certified) {
            stopped = true;
            return false;
        }
        return true;
    }
};

GradedScanner::GradedScanner(const Model& model, const Arrangement& arr, const ScanConfig& cfg)
    : impl_(new Impl(model, arr, cfg)) {}

GradedScanner::~GradedScanner() { delete impl_; }

bool GradedScanner::advance() {
    if (impl_->stopped) return false;
    return impl_->advance_degree();
}

int GradedScanner::next_degree() const { return impl_->next_d; }
const std::vector<DegreeSummary>& GradedScanner::degrees() const { return impl_->degree_data; }
const std::vector<RationalGenerator>& GradedScanner::generators() const { return impl_->gens; }
const LiftReport& GradedScanner::lift_report() const { return impl_->lift; }
bool GradedScanner::instability_seen() const { return impl_->instability; }
int GradedScanner::certified_through() const { return impl_->certified_through; }

GradedScan scan_arrangement(const Model& model, const Arrangement& arr, const ScanConfig& cfg) {
    GradedScanner scanner(model, arr, cfg);
    while (scanner.next_degree() <= cfg.d_max) {
        if (!scanner.advance()) break;
    }
    GradedScan out;
    out.arr = arr;
    out.degrees = scanner.degrees();
    out.generators = scanner.generators();
    out.lift = scanner.lift_report();
    out.instability = scanner.instability_seen();
    out.certified_through = scanner.certified_through();
    return out;
}

DimReport graded_dimensions(const Model& model, const Arrangement& arr, int d_max, const ScanConfig& cfg) {
    ScanConfig c = cfg;
    c.d_max = d_max;
    GradedScan scan = scan_arrangement(model, arr, c);
    DimReport rep;
    rep.arr = arr;
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

GeneratorSet minimal_generators(const Model& model, const Arrangement& arr, int d_max, const ScanConfig& cfg) {
    ScanConfig c = cfg;
    c.d_max = d_max;
    GradedScan scan = scan_arrangement(model, arr, c);
    if (scan.certified_through < d_max) {
        throw std::runtime_error("graded dimensions not certified through degree " +
                                 std::to_string(scan.certified_through + 1));
    }
    GeneratorSet out;
    out.arr = arr;
    out.mu.assign(static_cast<std::size_t>(d_max) + 1, 0);
    for (const auto& ds : scan.degrees)
        if (ds.degree <= d_max) out.mu[static_cast<std::size_t>(ds.degree)] = ds.new_generators;
    out.generators = scan.generators;
    return out;
}

}  // namespace detfree
