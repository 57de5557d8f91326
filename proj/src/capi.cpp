#include "detfree.h"

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <random>
#include <sstream>
#include <string>

#include "detfree/io.hpp"
#include "detfree/runtime.hpp"

using namespace detfree;

struct detfree_session {
    MatrixShape shape{3, 5};
    std::uint64_t seed = 1;
    bool seed_explicit = false;
    int threads = 0;
    int d_max = 4;
    int prime_count = 2;
    int prime_bits = 62;
    SaitoMode mode = SaitoMode::Probabilistic;
    bool experimental = false;
    std::string last_error;
};

namespace {

char* dup_string(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (p) std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

std::vector<int> parse_factors(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t dash = item.find("..");
        if (dash != std::string::npos) {
            int lo = std::stoi(item.substr(0, dash));
            int hi = std::stoi(item.substr(dash + 2));
            for (int v = lo; v <= hi; ++v) out.push_back(v);
        } else if (!item.empty()) {
            out.push_back(std::stoi(item));
        }
    }
    if (out.empty()) throw std::invalid_argument("empty factor list");
    return out;
}

AnalyzeConfig analyze_config(const detfree_session& s) {
    AnalyzeConfig cfg;
    cfg.d_max = s.d_max;
    cfg.prime_count = s.prime_count;
    cfg.prime_bits = s.prime_bits;
    cfg.seed = s.seed;
    cfg.threads = resolve_threads(s.threads);
    cfg.mode = s.mode;
    cfg.experimental = s.experimental;
    return cfg;
}

template <class Fn>
detfree_status guarded(detfree_session* s, Fn&& fn) {
    if (!s) return DETFREE_E_INVALID;
    s->last_error.clear();
    try {
        return fn();
    } catch (const DomainMismatchError& e) {
        s->last_error = e.what();
        return DETFREE_E_DOMAIN;
    } catch (const std::invalid_argument& e) {
        s->last_error = e.what();
        return DETFREE_E_INVALID;
    } catch (const std::length_error& e) {
        s->last_error = e.what();
        return DETFREE_E_BUDGET;
    } catch (const nlohmann::json::exception& e) {
        s->last_error = e.what();
        return DETFREE_E_IO;
    } catch (const std::exception& e) {
        s->last_error = e.what();
        return DETFREE_E_INTERNAL;
    }
}

}  // namespace

extern "C" {

const char* detfree_version(void) { return kToolVersion; }

detfree_session* detfree_session_new(void) { return new (std::nothrow) detfree_session(); }

void detfree_session_free(detfree_session* s) { delete s; }

const char* detfree_session_last_error(const detfree_session* s) {
    return s ? s->last_error.c_str() : "null session";
}

void detfree_string_free(char* p) { std::free(p); }

detfree_status detfree_session_set(detfree_session* s, const char* key, const char* value) {
    return guarded(s, [&]() -> detfree_status {
        if (!key || !value) throw std::invalid_argument("null key or value");
        std::string k = key, v = value;
        if (k == "shape") {
            auto sh = parse_shape(v);
            if (!sh) throw std::invalid_argument("bad shape: " + v);
            s->shape = *sh;
        } else if (k == "seed") {
            s->seed = std::stoull(v);
            s->seed_explicit = true;
        } else if (k == "threads") {
            s->threads = std::stoi(v);
        } else if (k == "max-degree") {
            s->d_max = std::stoi(v);
            if (s->d_max < 0 || s->d_max > 8) throw std::invalid_argument("max-degree must be 0..8");
        } else if (k == "primes") {
            s->prime_count = std::stoi(v);
            if (s->prime_count < 2 || s->prime_count > 8) throw std::invalid_argument("primes must be 2..8");
        } else if (k == "prime-bits") {
            s->prime_bits = std::stoi(v);
            if (s->prime_bits < 32 || s->prime_bits > 62) throw std::invalid_argument("prime-bits must be 32..62");
        } else if (k == "mode") {
            if (v == "pit")
                s->mode = SaitoMode::Probabilistic;
            else if (v == "exact")
                s->mode = SaitoMode::Exact;
            else
                throw std::invalid_argument("mode must be pit or exact");
        } else if (k == "experimental") {
            s->experimental = (v == "1" || v == "true");
        } else {
            throw std::invalid_argument("unknown configuration key: " + k);
        }
        return DETFREE_OK;
    });
}

detfree_status detfree_minors_text(detfree_session* s, char** out_text) {
    return guarded(s, [&]() -> detfree_status {
        if (!out_text) throw std::invalid_argument("null output");
        Model model(s->shape);
        std::ostringstream os;
        for (int id = 1; id <= model.minor_count(); ++id)
            os << 'f' << id << " = " << model.poly_to_string(model.minor(id)) << "\n";
        *out_text = dup_string(os.str());
        return DETFREE_OK;
    });
}

detfree_status detfree_analyze_json(detfree_session* s, const char* factors_csv, char** out_report_json,
                                    int* out_verdict) {
    return guarded(s, [&]() -> detfree_status {
        if (!factors_csv || !out_report_json) throw std::invalid_argument("null argument");
        Model model(s->shape);
        Arrangement arr = model.arrangement(parse_factors(factors_csv));
        auto t0 = std::chrono::steady_clock::now();
        FreenessVerdict v = analyze(model, arr, analyze_config(*s));
        long long ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
        *out_report_json = dup_string(canonical_dump(verdict_to_json(model, v, ms)));
        if (out_verdict) *out_verdict = verdict_exit_code(v.kind);
        return DETFREE_OK;
    });
}

detfree_status detfree_certify_json(detfree_session* s, const char* factors_csv, char** out_certificate_json) {
    return guarded(s, [&]() -> detfree_status {
        if (!factors_csv || !out_certificate_json) throw std::invalid_argument("null argument");
        Model model(s->shape);
        Arrangement arr = model.arrangement(parse_factors(factors_csv));
        FreenessVerdict v = analyze(model, arr, analyze_config(*s));
        if (v.kind != FreenessVerdict::Kind::CertifiedFree || !v.certificate) {
            s->last_error = "arrangement is not certified free (" + std::string(verdict_kind_name(v.kind)) + ")";
            return DETFREE_E_DOMAIN;
        }
        *out_certificate_json = dup_string(canonical_dump(certificate_to_json(model, *v.certificate)));
        return DETFREE_OK;
    });
}

detfree_status detfree_verify_json(detfree_session* s, const char* certificate_json, char** out_report_json,
                                   int* out_pass) {
    return guarded(s, [&]() -> detfree_status {
        if (!certificate_json || !out_report_json) throw std::invalid_argument("null argument");
        nlohmann::json cert = nlohmann::json::parse(certificate_json);
        std::uint64_t fresh = s->seed_explicit ? s->seed : std::random_device{}();
        VerifyOutcome v = verify_certificate(cert, fresh);
        nlohmann::json j;
        j["format"] = "detfree-report";
        j["version"] = 1;
        j["type"] = "verify";
        j["pass"] = v.pass;
        if (!v.pass) {
            j["stage"] = v.stage;
            j["detail"] = v.detail;
        }
        *out_report_json = dup_string(canonical_dump(j));
        if (out_pass) *out_pass = v.pass ? 1 : 0;
        return DETFREE_OK;
    });
}

detfree_status detfree_survey_json(detfree_session* s, int k, int quick, const char* checkpoint_path,
                                   char** out_report_json) {
    return guarded(s, [&]() -> detfree_status {
        if (!out_report_json) throw std::invalid_argument("null output");
        Model model(s->shape);
        SurveyConfig cfg;
        cfg.k = k;
        cfg.quick = quick != 0;
        cfg.d_max = s->d_max;
        if (k <= 3) cfg.d_max = 0;  // triples are settled by the degree count alone
        cfg.prime_count = s->prime_count;
        cfg.prime_bits = s->prime_bits;
        cfg.seed = s->seed;
        cfg.threads = s->threads;
        if (checkpoint_path) cfg.checkpoint_path = checkpoint_path;
        SurveyReport rep = run_survey(model, cfg);
        *out_report_json = dup_string(canonical_dump(survey_to_json(rep)));
        return DETFREE_OK;
    });
}

detfree_status detfree_survey_csv(detfree_session* s, const char* report_json, char** out_csv) {
    return guarded(s, [&]() -> detfree_status {
        if (!report_json || !out_csv) throw std::invalid_argument("null argument");
        nlohmann::json j = nlohmann::json::parse(report_json);
        std::ostringstream os;
        os << "signature,count\n";
        for (const auto& [key, value] : j.at("signature_counts").items())
            os << '"' << key << "\"," << value.get<long long>() << "\n";
        *out_csv = dup_string(os.str());
        return DETFREE_OK;
    });
}

detfree_status detfree_reproduce_json(detfree_session* s, int quick, char** out_report_json) {
    return guarded(s, [&]() -> detfree_status {
        if (!out_report_json) throw std::invalid_argument("null output");
        ReproduceConfig cfg;
        cfg.seed = s->seed;
        cfg.threads = s->threads;
        cfg.skip_survey_k4 = quick != 0;
        Checklist list = paper_reproduction_suite(cfg);
        *out_report_json = dup_string(canonical_dump(checklist_to_json(list)));
        return DETFREE_OK;
    });
}

detfree_status detfree_crosscheck_script(detfree_session* s, const char* factors_csv, char** out_script) {
    return guarded(s, [&]() -> detfree_status {
        if (!factors_csv || !out_script) throw std::invalid_argument("null argument");
        Model model(s->shape);
        Arrangement arr = model.arrangement(parse_factors(factors_csv));
        *out_script = dup_string(emit_crosscheck_script(model, arr));
        return DETFREE_OK;
    });
}

}  // extern "C"
