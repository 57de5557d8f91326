#include "detfree/io.hpp"

#include <optional>
#include <sstream>

namespace detfree {

std::string canonical_dump(const nlohmann::json& j) {
    return j.dump(2) + "\n";
}

namespace {

std::string shape_text(const MatrixShape& s) { return std::to_string(s.rows) + "x" + std::to_string(s.cols); }

nlohmann::json derivation_terms(const Model& model, const Derivation& d) {
    nlohmann::json terms = nlohmann::json::array();
    for (int u = 0; u < model.nvars(); ++u) {
        for (const auto& [mon, c] : d.coeffs[static_cast<std::size_t>(u)].terms()) {
            nlohmann::json ev = nlohmann::json::array();
            for (int v = 0; v < model.nvars(); ++v) ev.push_back(mon.exp(v));
            terms.push_back(nlohmann::json::array(
                {u, ev, mpq_class(c.get_num()).get_str(), mpq_class(c.get_den()).get_str()}));
        }
    }
    return terms;
}

Derivation derivation_from_terms(const Model& model, const nlohmann::json& terms) {
    std::vector<std::vector<PolyQ::Term>> per_var(static_cast<std::size_t>(model.nvars()));
    for (const auto& t : terms) {
        int u = t.at(0).get<int>();
        if (u < 0 || u >= model.nvars()) throw std::invalid_argument("variable index out of range");
        std::vector<int> ev = t.at(1).get<std::vector<int>>();
        if (static_cast<int>(ev.size()) != model.nvars()) throw std::invalid_argument("bad exponent vector");
        mpq_class c(mpz_class(t.at(2).get<std::string>()), mpz_class(t.at(3).get<std::string>()));
        c.canonicalize();
        per_var[static_cast<std::size_t>(u)].emplace_back(Monomial::from_exponents(ev), c);
    }
    Derivation d = zero_derivation(model.shape());
    for (int u = 0; u < model.nvars(); ++u)
        d.coeffs[static_cast<std::size_t>(u)] = PolyQ(RationalDomain{}, std::move(per_var[static_cast<std::size_t>(u)]));
    return d;
}

// integer upper bound for log2 of a positive rational
long long log2_upper(const mpq_class& q) {
    if (sgn(q) == 0) return -100000;
    mpz_class num = abs(q.get_num());
    mpz_class den = q.get_den();
    long long nb = static_cast<long long>(mpz_sizeinbase(num.get_mpz_t(), 2));
    long long db = static_cast<long long>(mpz_sizeinbase(den.get_mpz_t(), 2));
    return nb - db + 1;
}

}  // namespace

nlohmann::json certificate_to_json(const Model& model, const SaitoCertificate& cert) {
    nlohmann::json j;
    j["format"] = "detfree-certificate";
    j["version"] = 1;
    j["shape"] = shape_text(model.shape());
    j["arrangement"] = cert.arr.labels;
    j["degree"] = cert.arr.degree();
    nlohmann::json vars = nlohmann::json::array();
    for (int v = 0; v < model.nvars(); ++v) vars.push_back(model.shape().var_name(v));
    j["variables"] = vars;
    nlohmann::json derivs = nlohmann::json::array();
    for (const auto& d : cert.derivations) {
        nlohmann::json dj;
        dj["degree"] = std::max(0, d.degree());
        dj["terms"] = derivation_terms(model, d);
        derivs.push_back(dj);
    }
    j["derivations"] = derivs;
    j["exponents"] = cert.exponents;
    j["constant"] = cert.constant.get_str();
    j["mode"] = cert.mode == SaitoMode::Exact ? "exact" : "pit";
    j["source"] = cert.source;
    if (cert.mode == SaitoMode::Probabilistic) {
        nlohmann::json ev;
        nlohmann::json primes = nlohmann::json::array();
        for (auto p : cert.evidence.primes) primes.push_back(std::to_string(p));
        ev["primes"] = primes;
        ev["points_per_prime"] = cert.evidence.points_per_prime;
        ev["seed"] = std::to_string(cert.evidence.seed);
        ev["error_bound"] = cert.evidence.error_bound.get_str();
        ev["error_bound_log2_le"] = log2_upper(cert.evidence.error_bound);
        j["evidence"] = ev;
    }
    j["generator"] = {{"name", "detfree"}, {"version", kToolVersion}};
    return j;
}

SaitoCertificate certificate_from_json(const Model& model, const nlohmann::json& j) {
    if (j.at("format").get<std::string>() != "detfree-certificate")
        throw std::invalid_argument("not a detfree certificate");
    if (j.at("shape").get<std::string>() != shape_text(model.shape()))
        throw std::invalid_argument("certificate shape mismatch");
    SaitoCertificate cert;
    cert.arr = model.arrangement(j.at("arrangement").get<std::vector<int>>());
    for (const auto& dj : j.at("derivations")) cert.derivations.push_back(derivation_from_terms(model, dj.at("terms")));
    cert.exponents = j.at("exponents").get<std::vector<int>>();
    cert.constant = mpq_class(j.at("constant").get<std::string>());
    cert.constant.canonicalize();
    cert.mode = j.at("mode").get<std::string>() == "exact" ? SaitoMode::Exact : SaitoMode::Probabilistic;
    cert.source = j.value("source", "");
    return cert;
}

VerifyOutcome verify_certificate(const nlohmann::json& cert_json, std::uint64_t fresh_seed) {
    VerifyOutcome out;
    std::optional<Model> model_opt;
    SaitoCertificate cert;
    try {
        auto shape = parse_shape(cert_json.at("shape").get<std::string>());
        if (!shape) throw std::invalid_argument("bad shape");
        model_opt.emplace(*shape);
        cert = certificate_from_json(*model_opt, cert_json);
    } catch (const std::exception& e) {
        out.stage = "parse";
        out.detail = e.what();
        return out;
    }
    const Model& model = *model_opt;

    // stage 1: exact tangency of every stored derivation
    for (std::size_t i = 0; i < cert.derivations.size(); ++i) {
        auto tv = tangency(model, cert.derivations[i], cert.arr);
        if (std::holds_alternative<TangencyFailure>(tv)) {
            out.stage = "tangency";
            out.detail = "derivation " + std::to_string(i + 1) + " is not tangent";
            return out;
        }
    }
    // stage 2: degree bookkeeping
    long long deg_sum = 1;
    for (const auto& d : cert.derivations) deg_sum += std::max(0, d.degree());
    if (deg_sum != cert.arr.degree()) {
        out.stage = "degree-sum";
        out.detail = "column degrees sum to " + std::to_string(deg_sum) + ", deg F is " +
                     std::to_string(cert.arr.degree());
        return out;
    }
    // stage 3: determinant, fresh randomness
    if (cert.mode == SaitoMode::Exact) {
        PolyQ det = exact_det(saito_matrix(model, cert.derivations));
        PolyQ expected = model.expand_defining(cert.arr).scaled(cert.constant);
        if (!(det == expected)) {
            out.stage = "determinant";
            out.detail = "exact determinant differs from c*F";
            return out;
        }
    } else {
        PitConfig pit;
        pit.seed = fresh_seed;
        PitEvidence ev;
        auto c = pit_certify(model, cert.arr, cert.derivations, pit, &ev);
        if (!c) {
            out.stage = "determinant";
            out.detail = "determinant check failed at fresh sample points";
            return out;
        }
        if (*c != cert.constant) {
            out.stage = "determinant";
            out.detail = "stored constant " + cert.constant.get_str() + " but evaluation gives " + c->get_str();
            return out;
        }
    }
    out.pass = true;
    return out;
}

int verdict_exit_code(FreenessVerdict::Kind kind) {
    switch (kind) {
        case FreenessVerdict::Kind::CertifiedFree: return 0;
        case FreenessVerdict::Kind::NotFreeByDegreeCount:
        case FreenessVerdict::Kind::NotFreeByGradedObstruction: return 10;
        case FreenessVerdict::Kind::Undetermined:
        case FreenessVerdict::Kind::Experimental: return 20;
    }
    return 70;
}

const char* verdict_kind_name(FreenessVerdict::Kind kind) {
    switch (kind) {
        case FreenessVerdict::Kind::CertifiedFree: return "CertifiedFree";
        case FreenessVerdict::Kind::NotFreeByDegreeCount: return "NotFreeByDegreeCount";
        case FreenessVerdict::Kind::NotFreeByGradedObstruction: return "NotFreeByGradedObstruction";
        case FreenessVerdict::Kind::Undetermined: return "Undetermined";
        case FreenessVerdict::Kind::Experimental: return "Experimental";
    }
    return "?";
}

nlohmann::json verdict_to_json(const Model& model, const FreenessVerdict& verdict, long long millis) {
    nlohmann::json j;
    j["format"] = "detfree-report";
    j["version"] = 1;
    j["type"] = "analyze";
    j["shape"] = shape_text(model.shape());
    j["arrangement"] = verdict.arr.labels;
    j["deg_f"] = verdict.deg_f;
    j["verdict"] = verdict_kind_name(verdict.kind);
    j["exit_code"] = verdict_exit_code(verdict.kind);
    j["z0"] = verdict.z0;
    if (!verdict.exponents.empty()) j["exponents"] = verdict.exponents;
    if (verdict.regularity) j["regularity"] = *verdict.regularity;
    if (verdict.certificate) {
        mpq_class abs_c = verdict.certificate->constant;
        if (sgn(abs_c) < 0) abs_c = -abs_c;
        j["constant_abs"] = abs_c.get_str();
    }
    if (!verdict.obstruction.empty()) j["obstruction"] = verdict.obstruction;
    if (!verdict.note.empty()) j["note"] = verdict.note;
    nlohmann::json dims = nlohmann::json::array();
    for (const auto& e : verdict.dims.entries) {
        dims.push_back({{"degree", e.degree},
                        {"dim_ar", e.dim_ar},
                        {"dim_d_upper", e.dim_d_upper},
                        {"dim_d_lower", e.dim_d_lower},
                        {"certified", e.certified}});
    }
    j["dims"] = dims;
    nlohmann::json primes = nlohmann::json::array();
    for (auto p : verdict.dims.primes) primes.push_back(std::to_string(p));
    j["primes"] = primes;
    j["instability"] = verdict.instability;
    j["explored_d_max"] = verdict.explored_d_max;
    j["timing_ms"] = millis;
    return j;
}

nlohmann::json survey_to_json(const SurveyReport& rep) {
    nlohmann::json j;
    j["format"] = "detfree-report";
    j["version"] = 1;
    j["type"] = "survey";
    j["k"] = rep.config.k;
    j["d_max"] = rep.config.quick ? std::min(rep.config.d_max, 2) : rep.config.d_max;
    j["quick"] = rep.config.quick;
    j["seed"] = std::to_string(rep.config.seed);
    j["total"] = rep.total;
    j["free"] = rep.free_count;
    j["not_free"] = rep.not_free_count;
    j["undetermined"] = rep.undetermined_count;
    j["fingerprint_class"] = rep.fingerprint_count;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : rep.rows) {
        nlohmann::json rj;
        rj["labels"] = r.labels;
        rj["verdict"] = r.verdict;
        if (!r.exponents.empty()) rj["exponents"] = r.exponents;
        if (!r.constant.empty()) rj["constant_abs"] = r.constant;
        rj["z0"] = r.signature.z0;
        rj["ar_dims"] = r.signature.ar_dims;
        rj["fingerprint_class"] = r.fingerprint_class;
        rj["nearly_free_consistent"] = r.nearly_free_consistent;
        if (!r.note.empty()) rj["note"] = r.note;
        rows.push_back(rj);
    }
    j["rows"] = rows;
    nlohmann::json sig = nlohmann::json::object();
    for (const auto& [k, v] : rep.signature_counts) sig[k] = v;
    j["signature_counts"] = sig;
    j["timing_ms"] = rep.millis;
    return j;
}

std::string survey_to_csv(const SurveyReport& rep) {
    std::ostringstream os;
    os << "signature,count\n";
    for (const auto& [k, v] : rep.signature_counts) os << '"' << k << "\"," << v << "\n";
    return os.str();
}

nlohmann::json checklist_to_json(const Checklist& list) {
    nlohmann::json j;
    j["format"] = "detfree-report";
    j["version"] = 1;
    j["type"] = "reproduce";
    j["all_pass"] = list.all_pass();
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : list.entries) {
        entries.push_back({{"name", e.name},
                           {"pass", e.pass},
                           {"expected", e.expected},
                           {"actual", e.actual},
                           {"timing_ms", e.millis}});
    }
    j["entries"] = entries;
    return j;
}

std::string emit_crosscheck_script(const Model& model, const Arrangement& arr) {
    std::ostringstream os;
    os << "// cross-check script for the Singular computer algebra system\n";
    os << "// defines the maximal minors and the arrangement, then asks for the\n";
    os << "// graded resolution data of the Jacobian ideal (not executed by detfree)\n";
    os << "ring S = 0, (";
    for (int v = 0; v < model.nvars(); ++v) {
        if (v) os << ',';
        os << model.shape().var_name(v);
    }
    os << "), dp;\n";
    for (int id : arr.labels) {
        os << "poly f" << id << " = " << model.poly_to_string(model.minor(id)) << ";\n";
    }
    os << "poly F = ";
    for (std::size_t i = 0; i < arr.labels.size(); ++i) {
        if (i) os << '*';
        os << 'f' << arr.labels[i];
    }
    os << ";\n";
    os << "ideal J = jacob(F);\n";
    os << "resolution R = mres(J, 3);\n";
    os << "print(betti(R), \"betti\");\n";
    os << "// first syzygies of J in degree e correspond to AR(F) generators of degree e - deg(F) + 1\n";
    os << "quit;\n";
    return os.str();
}

}  // namespace detfree
