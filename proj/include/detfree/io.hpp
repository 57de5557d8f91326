#ifndef DETFREE_IO_HPP
#define DETFREE_IO_HPP

#include <string>

#include <nlohmann/json.hpp>

#include "detfree/analyzer.hpp"
#include "detfree/survey.hpp"

namespace detfree {

inline constexpr const char* kToolVersion = "1.0.0";

// Canonical serialization: UTF-8, sorted keys (nlohmann's default object
// ordering), two-space indent, LF line ends, trailing newline, no floats.
std::string canonical_dump(const nlohmann::json& j);

nlohmann::json certificate_to_json(const Model& model, const SaitoCertificate& cert);
SaitoCertificate certificate_from_json(const Model& model, const nlohmann::json& j);

struct VerifyOutcome {
    bool pass = false;
    std::string stage;   // "parse" | "tangency" | "degree-sum" | "determinant" | ""
    std::string detail;
};

// Independent re-verification with fresh randomness: exact tangency, degree
// bookkeeping, then the determinant check in the certificate's mode.
VerifyOutcome verify_certificate(const nlohmann::json& cert_json, std::uint64_t fresh_seed);

int verdict_exit_code(FreenessVerdict::Kind kind);
const char* verdict_kind_name(FreenessVerdict::Kind kind);

nlohmann::json verdict_to_json(const Model& model, const FreenessVerdict& verdict, long long millis);
nlohmann::json survey_to_json(const SurveyReport& rep);
std::string survey_to_csv(const SurveyReport& rep);
nlohmann::json checklist_to_json(const Checklist& list);

// Singular script defining the minors and the arrangement and requesting the
// graded resolution data; emitted for external validation, never executed.
std::string emit_crosscheck_script(const Model& model, const Arrangement& arr);

}  // namespace detfree

#endif
