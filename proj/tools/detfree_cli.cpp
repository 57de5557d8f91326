// detfree command line: drives the shared-library C API.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "detfree.h"

namespace {

constexpr int kExitUsage = 64;
constexpr int kExitData = 65;
constexpr int kExitSoftware = 70;

struct SessionDeleter {
    void operator()(detfree_session* s) const { detfree_session_free(s); }
};
using Session = std::unique_ptr<detfree_session, SessionDeleter>;

struct CString {
    char* p = nullptr;
    ~CString() { detfree_string_free(p); }
    char** out() { return &p; }
    std::string str() const { return p ? std::string(p) : std::string(); }
};

struct CommonOpts {
    std::string shape = "3x5";
    std::string seed;
    std::string threads;
    std::string max_degree;
    std::string primes;
    std::string prime_bits;
    std::string mode;
    bool experimental = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--shape", o.shape, "matrix shape, e.g. 3x5")->envname("DETFREE_SHAPE");
    cmd->add_option("--seed", o.seed, "RNG seed (default 1)")->envname("DETFREE_SEED");
    cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)")->envname("DETFREE_THREADS");
    cmd->add_option("--max-degree", o.max_degree, "graded scan depth (default 4)")->envname("DETFREE_MAX_DEGREE");
    cmd->add_option("--primes", o.primes, "number of simultaneous primes (default 2)")->envname("DETFREE_PRIMES");
    cmd->add_option("--prime-bits", o.prime_bits, "prime size in bits (default 62)")->envname("DETFREE_PRIME_BITS");
    cmd->add_option("--mode", o.mode, "Saito determinant mode: pit | exact")->envname("DETFREE_MODE");
    cmd->add_flag("--experimental", o.experimental, "allow budgeted evidence scans (8+ factors)");
}

int apply_common(detfree_session* s, const CommonOpts& o) {
    auto set = [&](const char* k, const std::string& v) {
        if (v.empty()) return true;
        if (detfree_session_set(s, k, v.c_str()) != DETFREE_OK) {
            std::cerr << "detfree: " << detfree_session_last_error(s) << "\n";
            return false;
        }
        return true;
    };
    if (!set("shape", o.shape)) return kExitUsage;
    if (!set("seed", o.seed)) return kExitUsage;
    if (!set("threads", o.threads)) return kExitUsage;
    if (!set("max-degree", o.max_degree)) return kExitUsage;
    if (!set("primes", o.primes)) return kExitUsage;
    if (!set("prime-bits", o.prime_bits)) return kExitUsage;
    if (!set("mode", o.mode)) return kExitUsage;
    if (o.experimental && !set("experimental", "1")) return kExitUsage;
    return 0;
}

bool write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) return false;
    out << content;
    return static_cast<bool>(out);
}

int status_exit(detfree_status st) {
    switch (st) {
        case DETFREE_OK: return 0;
        case DETFREE_E_INVALID: return kExitUsage;
        case DETFREE_E_DOMAIN: return kExitUsage;
        case DETFREE_E_IO: return kExitData;
        case DETFREE_E_BUDGET: return kExitData;
        default: return kExitSoftware;
    }
}

void print_analyze_table(const nlohmann::json& rep) {
    std::cout << "arrangement:";
    for (const auto& l : rep.at("arrangement")) std::cout << " f" << l.get<int>();
    std::cout << "  (deg F = " << rep.at("deg_f").get<long long>() << ")\n";
    std::cout << "verdict: " << rep.at("verdict").get<std::string>() << "\n";
    if (rep.contains("exponents")) {
        std::cout << "exponents: (";
        bool first = true;
        for (const auto& e : rep.at("exponents")) {
            if (!first) std::cout << ",";
            std::cout << e.get<int>();
            first = false;
        }
        std::cout << ")\n";
    }
    if (rep.contains("constant_abs")) std::cout << "|c| = " << rep.at("constant_abs").get<std::string>() << "\n";
    if (rep.contains("regularity")) std::cout << "reg(S/J_F) = " << rep.at("regularity").get<int>() << "\n";
    if (rep.contains("obstruction")) std::cout << "obstruction: " << rep.at("obstruction").get<std::string>() << "\n";
    if (rep.contains("note") && !rep.at("note").get<std::string>().empty())
        std::cout << "note: " << rep.at("note").get<std::string>() << "\n";
    std::cout << "graded data (z0 = " << rep.at("z0").get<int>() << "):\n";
    for (const auto& d : rep.at("dims")) {
        std::cout << "  d=" << d.at("degree").get<int>() << "  dim AR = " << d.at("dim_ar").get<long long>()
                  << (d.at("certified").get<bool>() ? "  [certified]" : "  [uncertified]") << "\n";
    }
    std::cout << "time: " << rep.at("timing_ms").get<long long>() << " ms\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"determinantal arrangement freeness toolkit"};
    app.require_subcommand(1);

    std::string format = "table";
    app.add_option("--format", format, "output format: table | json")->envname("DETFREE_FORMAT");

    // minors
    auto* cmd_minors = app.add_subcommand("minors", "print the labeled maximal minors");
    CommonOpts minors_opts;
    add_common(cmd_minors, minors_opts);

    // analyze
    auto* cmd_analyze = app.add_subcommand("analyze", "freeness analysis of an arrangement");
    CommonOpts analyze_opts;
    std::string analyze_factors, analyze_cert_path, analyze_out;
    cmd_analyze->add_option("--factors", analyze_factors, "minor labels, e.g. 1,2,3,4,5 or 1..5")->required();
    cmd_analyze->add_option("--certify", analyze_cert_path, "write the freeness certificate here");
    cmd_analyze->add_option("--out", analyze_out, "write the report JSON here");
    add_common(cmd_analyze, analyze_opts);

    // certify
    auto* cmd_certify = app.add_subcommand("certify", "produce a freeness certificate");
    CommonOpts certify_opts;
    std::string certify_factors, certify_out;
    cmd_certify->add_option("--factors", certify_factors, "minor labels")->required();
    cmd_certify->add_option("--out", certify_out, "certificate path")->required();
    add_common(cmd_certify, certify_opts);

    // verify
    auto* cmd_verify = app.add_subcommand("verify", "re-verify a stored certificate");
    CommonOpts verify_opts;
    std::string verify_path;
    cmd_verify->add_option("certificate", verify_path, "certificate JSON path")->required();
    add_common(cmd_verify, verify_opts);

    // survey
    auto* cmd_survey = app.add_subcommand("survey", "analyze every k-subset of the minors");
    CommonOpts survey_opts;
    int survey_k = 4;
    bool survey_quick = false;
    std::string survey_out, survey_csv, survey_checkpoint;
    cmd_survey->add_option("--k", survey_k, "subset size")->required();
    cmd_survey->add_flag("--quick", survey_quick, "cap the graded scan at degree 2");
    cmd_survey->add_option("--out", survey_out, "report JSON path");
    cmd_survey->add_option("--csv", survey_csv, "signature table CSV path");
    cmd_survey->add_option("--checkpoint", survey_checkpoint, "resumable checkpoint path");
    add_common(cmd_survey, survey_opts);

    // reproduce
    auto* cmd_repro = app.add_subcommand("reproduce", "run the full reproduction checklist");
    CommonOpts repro_opts;
    bool repro_quick = false;
    std::string repro_out;
    cmd_repro->add_flag("--quick", repro_quick, "skip the full 4-tuple sweep");
    cmd_repro->add_option("--out", repro_out, "report JSON path");
    add_common(cmd_repro, repro_opts);

    // emit-crosscheck
    auto* cmd_cross = app.add_subcommand("emit-crosscheck", "write an external cross-check script");
    CommonOpts cross_opts;
    std::string cross_factors, cross_out;
    cmd_cross->add_option("--factors", cross_factors, "minor labels")->required();
    cmd_cross->add_option("--out", cross_out, "script path (stdout when omitted)");
    add_common(cmd_cross, cross_opts);

    CLI11_PARSE(app, argc, argv);

    Session session(detfree_session_new());
    if (!session) {
        std::cerr << "detfree: out of memory\n";
        return kExitSoftware;
    }

    auto fail = [&](detfree_status st) {
        std::cerr << "detfree: " << detfree_session_last_error(session.get()) << "\n";
        return status_exit(st);
    };

    if (cmd_minors->parsed()) {
        if (int rc = apply_common(session.get(), minors_opts)) return rc;
        CString text;
        auto st = detfree_minors_text(session.get(), text.out());
        if (st != DETFREE_OK) return fail(st);
        std::cout << text.str();
        return 0;
    }

    if (cmd_analyze->parsed()) {
        if (int rc = apply_common(session.get(), analyze_opts)) return rc;
        CString rep;
        int verdict = 0;
        auto st = detfree_analyze_json(session.get(), analyze_factors.c_str(), rep.out(), &verdict);
        if (st != DETFREE_OK) return fail(st);
        if (!analyze_out.empty() && !write_file(analyze_out, rep.str())) {
            std::cerr << "detfree: cannot write " << analyze_out << "\n";
            return kExitData;
        }
        if (!analyze_cert_path.empty()) {
            CString cert;
            auto cst = detfree_certify_json(session.get(), analyze_factors.c_str(), cert.out());
            if (cst != DETFREE_OK) return fail(cst);
            if (!write_file(analyze_cert_path, cert.str())) {
                std::cerr << "detfree: cannot write " << analyze_cert_path << "\n";
                return kExitData;
            }
        }
        if (format == "json")
            std::cout << rep.str();
        else
            print_analyze_table(nlohmann::json::parse(rep.str()));
        return verdict;
    }

    if (cmd_certify->parsed()) {
        if (int rc = apply_common(session.get(), certify_opts)) return rc;
        CString cert;
        auto st = detfree_certify_json(session.get(), certify_factors.c_str(), cert.out());
        if (st != DETFREE_OK) return fail(st);
        if (!write_file(certify_out, cert.str())) {
            std::cerr << "detfree: cannot write " << certify_out << "\n";
            return kExitData;
        }
        std::cout << "certificate written to " << certify_out << "\n";
        return 0;
    }

    if (cmd_verify->parsed()) {
        if (int rc = apply_common(session.get(), verify_opts)) return rc;
        std::ifstream in(verify_path, std::ios::binary);
        if (!in) {
            std::cerr << "detfree: cannot read " << verify_path << "\n";
            return kExitData;
        }
        std::stringstream buf;
        buf << in.rdbuf();
        CString rep;
        int pass = 0;
        auto st = detfree_verify_json(session.get(), buf.str().c_str(), rep.out(), &pass);
        if (st != DETFREE_OK) return fail(st);
        if (format == "json") {
            std::cout << rep.str();
        } else {
            auto j = nlohmann::json::parse(rep.str());
            if (pass)
                std::cout << "verify: pass\n";
            else
                std::cout << "verify: FAIL at " << j.value("stage", "?") << " (" << j.value("detail", "") << ")\n";
        }
        return pass ? 0 : 1;
    }

    if (cmd_survey->parsed()) {
        if (int rc = apply_common(session.get(), survey_opts)) return rc;
        CString rep;
        auto st = detfree_survey_json(session.get(), survey_k, survey_quick ? 1 : 0,
                                      survey_checkpoint.empty() ? nullptr : survey_checkpoint.c_str(), rep.out());
        if (st != DETFREE_OK) return fail(st);
        if (!survey_out.empty() && !write_file(survey_out, rep.str())) {
            std::cerr << "detfree: cannot write " << survey_out << "\n";
            return kExitData;
        }
        if (!survey_csv.empty()) {
            CString csv;
            auto cst = detfree_survey_csv(session.get(), rep.str().c_str(), csv.out());
            if (cst != DETFREE_OK) return fail(cst);
            if (!write_file(survey_csv, csv.str())) {
                std::cerr << "detfree: cannot write " << survey_csv << "\n";
                return kExitData;
            }
        }
        if (format == "json") {
            std::cout << rep.str();
        } else {
            auto j = nlohmann::json::parse(rep.str());
            long long total = j.at("total").get<long long>();
            long long freec = j.at("free").get<long long>();
            long long notfree = j.at("not_free").get<long long>();
            long long fp = j.at("fingerprint_class").get<long long>();
            if (freec == 0 && j.at("undetermined").get<long long>() == 0)
                std::cout << total << " analyzed, " << notfree << " not free\n";
            else
                std::cout << total << " analyzed, " << freec << " free, " << fp << " fingerprint-class\n";
            if (j.at("quick").get<bool>())
                std::cout << "note: quick mode stops at degree 2; the fingerprint class is coarser than the "
                             "full-depth signature\n";
        }
        return 0;
    }

    if (cmd_repro->parsed()) {
        if (int rc = apply_common(session.get(), repro_opts)) return rc;
        CString rep;
        auto st = detfree_reproduce_json(session.get(), repro_quick ? 1 : 0, rep.out());
        if (st != DETFREE_OK) return fail(st);
        if (!repro_out.empty() && !write_file(repro_out, rep.str())) {
            std::cerr << "detfree: cannot write " << repro_out << "\n";
            return kExitData;
        }
        auto j = nlohmann::json::parse(rep.str());
        if (format == "json") {
            std::cout << rep.str();
        } else {
            for (const auto& e : j.at("entries")) {
                std::cout << (e.at("pass").get<bool>() ? "PASS" : "FAIL") << "  " << e.at("name").get<std::string>()
                          << "  [" << e.at("actual").get<std::string>() << "]\n";
            }
            std::cout << (j.at("all_pass").get<bool>() ? "all checks passed\n" : "SOME CHECKS FAILED\n");
        }
        return j.at("all_pass").get<bool>() ? 0 : 1;
    }

    if (cmd_cross->parsed()) {
        if (int rc = apply_common(session.get(), cross_opts)) return rc;
        CString script;
        auto st = detfree_crosscheck_script(session.get(), cross_factors.c_str(), script.out());
        if (st != DETFREE_OK) return fail(st);
        if (cross_out.empty()) {
            std::cout << script.str();
        } else if (!write_file(cross_out, script.str())) {
            std::cerr << "detfree: cannot write " << cross_out << "\n";
            return kExitData;
        }
        return 0;
    }

    return kExitUsage;
}
