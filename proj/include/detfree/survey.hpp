#ifndef DETFREE_SURVEY_HPP
#define DETFREE_SURVEY_HPP

#include <map>
#include <string>
#include <vector>

#include "detfree/analyzer.hpp"

namespace detfree {

struct SurveyConfig {
    int k = 4;
    std::vector<std::vector<int>> explicit_family;  // overrides k when nonempty
    int d_max = 4;
    bool quick = false;  // caps the scan at degree 2
    int prime_count = 2;
    int prime_bits = 62;
    std::uint64_t seed = 1;
    int threads = 0;  // 0 = hardware
    std::string checkpoint_path;
};

// (z0, certified AR dims, verdict kind); built only from certified values.
struct SignatureKey {
    int z0 = 0;
    std::vector<long long> ar_dims;  // degrees 1..explored, certified prefix
    std::string verdict;
    bool operator<(const SignatureKey& o) const;
    std::string to_string() const;
};

struct SurveyRow {
    std::vector<int> labels;
    std::string verdict;
    std::vector<int> exponents;  // free cases
    SignatureKey signature;
    bool fingerprint_class = false;    // matches the printed near-miss resolution class
    bool nearly_free_consistent = false;
    std::string constant;              // |c| as string for free cases
    long long millis = 0;
    std::string note;
};

struct SurveyReport {
    SurveyConfig config;
    std::vector<SurveyRow> rows;                 // ordered by arrangement
    std::map<std::string, long long> signature_counts;
    long long total = 0;
    long long free_count = 0;
    long long not_free_count = 0;
    long long undetermined_count = 0;
    long long fingerprint_count = 0;
    long long millis = 0;
};

std::vector<std::vector<int>> enumerate_arrangements(int k, int minor_total);

SurveyReport run_survey(const Model& model, const SurveyConfig& cfg);

// Named reproduction checklist covering the headline computational claims.
struct ChecklistEntry {
    std::string name;
    bool pass = false;
    std::string expected;
    std::string actual;
    long long millis = 0;
};

struct Checklist {
    std::vector<ChecklistEntry> entries;
    bool all_pass() const;
};

struct ReproduceConfig {
    std::uint64_t seed = 1;
    int threads = 0;
    bool skip_survey_k4 = false;  // quick runs exercise everything but the full 4-tuple sweep
};

Checklist paper_reproduction_suite(const ReproduceConfig& cfg);

}  // namespace detfree

#endif
