#include "detfree/model.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

namespace detfree {

void MatrixShape::validate() const {
    if (rows != 2 && rows != 3) throw std::invalid_argument("matrix must have 2 or 3 rows");
    if (cols <= rows) throw std::invalid_argument("matrix must have more columns than rows");
    if (rows == 2 && cols > 6) throw std::invalid_argument("2xN supported up to N=6");
    if (rows == 3 && cols > 5) throw std::invalid_argument("3xN supported up to N=5");
}

std::string MatrixShape::var_name(int v) const {
    static const char* rows3[] = {"x", "y", "z"};
    return std::string(rows3[row_of(v)]) + std::to_string(col_of(v) + 1);
}

std::optional<MatrixShape> parse_shape(const std::string& text) {
    int m = 0, n = 0;
    char sep = 0;
    if (std::sscanf(text.c_str(), "%d%c%d", &m, &sep, &n) != 3 || (sep != 'x' && sep != 'X')) return std::nullopt;
    MatrixShape s{m, n};
    try {
        s.validate();
    } catch (const std::exception&) {
        return std::nullopt;
    }
    return s;
}

namespace {

std::vector<std::vector<int>> colex_subsets(int n, int m) {
    // all m-subsets of {1..n}, sorted colexicographically (largest element first)
    std::vector<std::vector<int>> subs;
    std::vector<int> cur(static_cast<std::size_t>(m));
    auto rec = [&](auto&& self, int pos, int lo) -> void {
        if (pos == m) {
            subs.push_back(cur);
            return;
        }
        for (int c = lo; c <= n; ++c) {
            cur[static_cast<std::size_t>(pos)] = c;
            self(self, pos + 1, c + 1);
        }
    };
    rec(rec, 0, 1);
    std::sort(subs.begin(), subs.end(), [](const std::vector<int>& a, const std::vector<int>& b) {
        for (std::size_t i = a.size(); i-- > 0;)
            if (a[i] != b[i]) return a[i] < b[i];
        return false;
    });
    return subs;
}

PolyQ expand_minor(const MatrixShape& shape, const std::vector<int>& columns) {
    // signed sum over permutations of the rows
    int m = shape.rows;
    std::vector<int> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<PolyQ::Term> terms;
    do {
        int inv = 0;
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j)
                if (perm[static_cast<std::size_t>(i)] > perm[static_cast<std::size_t>(j)]) ++inv;
        Monomial mon = Monomial::one();
        for (int r = 0; r < m; ++r)
            mon = mon * Monomial::variable(shape.var_index(r, columns[static_cast<std::size_t>(perm[static_cast<std::size_t>(r)])] - 1));
        terms.emplace_back(mon, mpq_class(inv % 2 == 0 ? 1 : -1));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return PolyQ(RationalDomain{}, std::move(terms));
}

}  // namespace

Model::Model(MatrixShape shape) : shape_(shape) {
    shape_.validate();
    auto subs = colex_subsets(shape_.cols, shape_.rows);
    labels_.reserve(subs.size());
    minors_.reserve(subs.size());
    for (std::size_t i = 0; i < subs.size(); ++i) {
        labels_.push_back(MinorLabel{static_cast<int>(i) + 1, subs[i]});
        minors_.push_back(expand_minor(shape_, subs[i]));
    }
}

const MinorLabel& Model::label(int id) const {
    if (id < 1 || id > minor_count()) throw std::invalid_argument("minor label out of range");
    return labels_[static_cast<std::size_t>(id - 1)];
}

int Model::label_from_columns(const std::vector<int>& columns) const {
    if (static_cast<int>(columns.size()) != shape_.rows)
        throw std::invalid_argument("column set has wrong size for a maximal minor");
    std::vector<int> sorted = columns;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i] == sorted[i - 1]) throw std::invalid_argument("duplicate column");
    if (sorted.front() < 1 || sorted.back() > shape_.cols) throw std::invalid_argument("column out of range");
    for (const auto& l : labels_)
        if (l.columns == sorted) return l.id;
    throw std::logic_error("label lookup failed");
}

const PolyQ& Model::minor(int id) const {
    label(id);
    return minors_[static_cast<std::size_t>(id - 1)];
}

Arrangement Model::arrangement(const std::vector<int>& labels) const {
    if (labels.empty()) throw std::invalid_argument("arrangement needs at least one factor");
    std::vector<int> sorted = labels;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i] == sorted[i - 1])
            throw std::invalid_argument("duplicate factor: divisor would not be reduced");
    for (int id : sorted) label(id);
    return Arrangement{shape_, std::move(sorted)};
}

std::vector<int> Model::column_support(const Arrangement& arr) const {
    std::set<int> cols;
    for (int id : arr.labels)
        for (int c : label(id).columns) cols.insert(c);
    return {cols.begin(), cols.end()};
}

PolyQ Model::expand_defining(const Arrangement& arr) const {
    PolyQ prod(RationalDomain{}, {{Monomial::one(), mpq_class(1)}});
    for (int id : arr.labels) prod = prod * minor(id);
    return prod;
}

std::string Model::poly_to_string(const PolyQ& p) const {
    if (p.is_zero()) return "0";
    std::string out;
    bool first = true;
    for (const auto& [m, c] : p.terms()) {
        mpq_class a = c;
        bool neg = sgn(a) < 0;
        if (neg) a = -a;
        if (first) {
            if (neg) out += "-";
            first = false;
        } else {
            out += neg ? " - " : " + ";
        }
        std::string mon;
        for (int v = 0; v < nvars(); ++v) {
            int e = m.exp(v);
            if (!e) continue;
            if (!mon.empty()) mon += "*";
            mon += shape_.var_name(v);
            if (e > 1) mon += "^" + std::to_string(e);
        }
        if (a != 1 || mon.empty()) {
            out += a.get_str();
            if (!mon.empty()) out += "*";
        }
        out += mon;
    }
    return out;
}

bool Derivation::is_zero() const {
    for (const auto& c : coeffs)
        if (!c.is_zero()) return false;
    return true;
}

int Derivation::degree() const {
    int d = -1;
    for (const auto& c : coeffs) {
        if (c.is_zero()) continue;
        if (!c.is_homogeneous()) throw std::invalid_argument("derivation coefficient not homogeneous");
        if (d == -1)
            d = c.degree();
        else if (d != c.degree())
            throw std::invalid_argument("derivation coefficients of mixed degree");
    }
    return d;
}

Derivation euler_derivation(const MatrixShape& shape) {
    Derivation e;
    e.coeffs.reserve(static_cast<std::size_t>(shape.vars()));
    for (int v = 0; v < shape.vars(); ++v)
        e.coeffs.emplace_back(RationalDomain{},
                              std::vector<PolyQ::Term>{{Monomial::variable(v), mpq_class(1)}});
    return e;
}

Derivation zero_derivation(const MatrixShape& shape) {
    Derivation z;
    z.coeffs.assign(static_cast<std::size_t>(shape.vars()), PolyQ(RationalDomain{}));
    return z;
}

PolyQ apply_derivation(const Model& model, const Derivation& theta, const PolyQ& g) {
    PolyQ acc(RationalDomain{});
    for (int v = 0; v < model.nvars(); ++v) {
        const PolyQ& a = theta.coeffs[static_cast<std::size_t>(v)];
        if (a.is_zero()) continue;
        PolyQ d = partial_derivative(g, v);
        if (d.is_zero()) continue;
        acc = acc + a * d;
    }
    return acc;
}

std::variant<CofactorCertificate, TangencyFailure> tangency(const Model& model, const Derivation& theta,
                                                            const Arrangement& arr) {
    CofactorCertificate cert;
    cert.cofactors.reserve(arr.labels.size());
    for (std::size_t i = 0; i < arr.labels.size(); ++i) {
        const PolyQ& f = model.minor(arr.labels[i]);
        PolyQ tf = apply_derivation(model, theta, f);
        if (tf.is_zero()) {
            cert.cofactors.emplace_back(RationalDomain{});
            continue;
        }
        Monomial bad;
        auto q = divide_impl(tf, f, &bad);
        if (!q) return TangencyFailure{static_cast<int>(i), bad};
        cert.cofactors.push_back(std::move(*q));
    }
    return cert;
}

PolyQ permute_columns(const MatrixShape& shape, const PolyQ& p, const std::vector<int>& perm) {
    std::vector<PolyQ::Term> terms;
    terms.reserve(p.term_count());
    for (const auto& [m, c] : p.terms()) {
        std::vector<int> exps(static_cast<std::size_t>(kMaxVars), 0);
        for (int v = 0; v < shape.vars(); ++v) {
            int e = m.exp(v);
            if (!e) continue;
            int target = shape.var_index(shape.row_of(v), perm[static_cast<std::size_t>(shape.col_of(v))]);
            exps[static_cast<std::size_t>(target)] += e;
        }
        terms.emplace_back(Monomial::from_exponents(exps), c);
    }
    return PolyQ(RationalDomain{}, std::move(terms));
}

Derivation permute_columns(const MatrixShape& shape, const Derivation& theta, const std::vector<int>& perm) {
    Derivation out = zero_derivation(shape);
    for (int v = 0; v < shape.vars(); ++v) {
        const PolyQ& a = theta.coeffs[static_cast<std::size_t>(v)];
        if (a.is_zero()) continue;
        int target = shape.var_index(shape.row_of(v), perm[static_cast<std::size_t>(shape.col_of(v))]);
        out.coeffs[static_cast<std::size_t>(target)] = permute_columns(shape, a, perm);
    }
    return out;
}

std::optional<std::vector<int>> find_column_isomorphism(const Model& model, const Arrangement& from,
                                                        const Arrangement& to) {
    if (from.labels.size() != to.labels.size()) return std::nullopt;
    int n = model.shape().cols;
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    do {
        std::vector<int> mapped;
        mapped.reserve(from.labels.size());
        bool ok = true;
        for (int id : from.labels) {
            std::vector<int> cols;
            for (int c : model.label(id).columns) cols.push_back(perm[static_cast<std::size_t>(c - 1)] + 1);
            std::sort(cols.begin(), cols.end());
            try {
                mapped.push_back(model.label_from_columns(cols));
            } catch (const std::exception&) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        std::sort(mapped.begin(), mapped.end());
        if (mapped == to.labels) return perm;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::nullopt;
}

std::vector<Derivation> parse_derivation_file(const std::string& json_text, const MatrixShape& expected_shape,
                                              std::vector<int>* arrangement_labels) {
    nlohmann::json doc = nlohmann::json::parse(json_text);
    if (doc.at("format").get<std::string>() != "detfree-derivations")
        throw std::invalid_argument("not a derivation data file");
    std::string shape_text = doc.at("shape").get<std::string>();
    auto shape = parse_shape(shape_text);
    if (!shape || !(*shape == expected_shape)) throw std::invalid_argument("derivation file shape mismatch");
    if (arrangement_labels && doc.contains("arrangement"))
        *arrangement_labels = doc.at("arrangement").get<std::vector<int>>();
    std::vector<Derivation> out;
    for (const auto& dv : doc.at("derivations")) {
        Derivation theta = zero_derivation(expected_shape);
        std::vector<std::vector<PolyQ::Term>> per_var(static_cast<std::size_t>(expected_shape.vars()));
        for (const auto& triple : dv.at("terms")) {
            int u = triple.at(0).get<int>();
            std::vector<int> exps = triple.at(1).get<std::vector<int>>();
            long long coef = triple.at(2).get<long long>();
            if (u < 0 || u >= expected_shape.vars()) throw std::invalid_argument("variable index out of range");
            if (static_cast<int>(exps.size()) != expected_shape.vars())
                throw std::invalid_argument("exponent vector has wrong length");
            per_var[static_cast<std::size_t>(u)].emplace_back(Monomial::from_exponents(exps), mpq_class(coef));
        }
        for (int u = 0; u < expected_shape.vars(); ++u)
            theta.coeffs[static_cast<std::size_t>(u)] = PolyQ(RationalDomain{}, std::move(per_var[static_cast<std::size_t>(u)]));
        out.push_back(std::move(theta));
    }
    return out;
}

namespace {

PaperBasis permuted_basis(const Model& model, PaperBasisId id, const std::string& data_name,
                          const std::vector<int>& target_labels) {
    std::vector<int> base_labels;
    auto derivs = parse_derivation_file(embedded_derivation_json(data_name), model.shape(), &base_labels);
    PaperBasis out;
    out.id = id;
    out.arrangement = model.arrangement(target_labels);
    Arrangement base = model.arrangement(base_labels);
    auto perm = find_column_isomorphism(model, base, out.arrangement);
    if (!perm) throw std::logic_error("no column symmetry onto the requested family member");
    bool identity = true;
    for (std::size_t i = 0; i < perm->size(); ++i)
        if ((*perm)[i] != static_cast<int>(i)) identity = false;
    if (identity) {
        out.derivations = std::move(derivs);
    } else {
        out.derivations.reserve(derivs.size());
        for (const auto& d : derivs) out.derivations.push_back(permute_columns(model.shape(), d, *perm));
    }
    return out;
}

}  // namespace

PaperBasis paper_basis(const Model& model, PaperBasisId id) {
    if (!(model.shape() == MatrixShape{3, 5}))
        throw std::invalid_argument("paper bases exist only for the 3x5 shape");
    if (id.family == PaperBasisId::Family::ThmA) {
        if (id.index < 5 || id.index > 10) throw std::invalid_argument("ThmA basis index must be 5..10");
        return permuted_basis(model, id, "thma-5", {1, 2, 3, 4, id.index});
    }
    if (id.index != 7) throw std::invalid_argument("no mid basis for this index");
    return permuted_basis(model, id, "mid-7", {1, 2, 3, 4, 5, 7});
}

std::optional<PaperBasis> known_family_basis(const Model& model, const Arrangement& arr) {
    if (!(model.shape() == MatrixShape{3, 5})) return std::nullopt;
    struct Family {
        PaperBasisId id;
        const char* data;
        std::vector<int> base_labels;
    };
    static const std::vector<Family> families = {
        {{PaperBasisId::Family::ThmA, 5}, "thma-5", {1, 2, 3, 4, 5}},
        {{PaperBasisId::Family::Mid, 7}, "mid-7", {1, 2, 3, 4, 5, 7}},
    };
    for (const auto& fam : families) {
        if (arr.labels.size() != fam.base_labels.size()) continue;
        Arrangement base = model.arrangement(fam.base_labels);
        auto perm = find_column_isomorphism(model, base, arr);
        if (!perm) continue;
        std::vector<int> dummy;
        auto derivs = parse_derivation_file(embedded_derivation_json(fam.data), model.shape(), &dummy);
        PaperBasis out;
        out.id = fam.id;
        out.arrangement = arr;
        out.derivations.reserve(derivs.size());
        for (const auto& d : derivs) out.derivations.push_back(permute_columns(model.shape(), d, *perm));
        return out;
    }
    return std::nullopt;
}

}  // namespace detfree
