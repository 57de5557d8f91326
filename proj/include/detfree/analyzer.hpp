#ifndef DETFREE_ANALYZER_HPP
#define DETFREE_ANALYZER_HPP

#include <optional>
#include <string>
#include <vector>

#include "detfree/graded.hpp"
#include "detfree/saito.hpp"

namespace detfree {

struct AnalyzeConfig {
    int d_max = 4;
    int prime_count = 2;
    int prime_bits = 62;
    std::uint64_t seed = 1;
    int threads = 1;
    SaitoMode mode = SaitoMode::Probabilistic;
    bool experimental = false;   // allow arrangements with >= 8 factors
    bool full_depth = false;     // keep scanning past an early negative verdict
    bool prefer_paper_basis = true;
};

struct FreenessVerdict {
    enum class Kind { CertifiedFree, NotFreeByDegreeCount, NotFreeByGradedObstruction, Undetermined, Experimental };
    Kind kind = Kind::Undetermined;

    Arrangement arr;
    int z0 = 0;
    long long deg_f = 0;

    // CertifiedFree
    std::optional<SaitoCertificate> certificate;
    std::vector<int> exponents;  // sorted ascending (14 entries for 3x5)
    std::optional<int> regularity;

    // negative / undetermined payloads
    DimReport dims;
    std::string obstruction;     // human-readable reason for NotFree
    int explored_d_max = 0;
    bool instability = false;
    std::string note;            // diagnostics (paper-basis transcription failures etc.)
};

// Degree-count obstruction: a free arrangement needs 14 - z0 positive
// exponents summing to deg F - 1.
std::optional<std::string> degree_count_test(int nvars, int z0, long long deg_f);

// dim AR_0: constant-coefficient tangent derivations (certified).
int essential_defect(const Model& model, const Arrangement& arr, const AnalyzeConfig& cfg);

FreenessVerdict analyze(const Model& model, const Arrangement& arr, const AnalyzeConfig& cfg);

// reg(S/J_F) = max exponent + deg F - 3 for a certified-free arrangement.
int regularity_from_exponents(const std::vector<int>& exponents, long long deg_f);

struct ShapeHypothesis {
    enum class Kind { Free, NearlyFree };
    Kind kind = Kind::Free;
    std::vector<int> exponents;  // Free: ambient-1 entries; NearlyFree: ambient entries (d_0..d_n)
};

// Compares certified dimensions against the Hilbert data the hypothesis
// predicts; returns the first witness degree where they disagree.
std::optional<int> shape_consistency(int nvars, const DimReport& dims, const ShapeHypothesis& hyp);

// True when some exponent multiset (resp. some nearly-free shape) matches
// every certified dimension; used for negative verdicts and the survey's
// nearly-free screening.
bool exists_consistent_free_multiset(int nvars, int z0, long long deg_f, const DimReport& dims);
bool exists_consistent_nearly_free_shape(int nvars, int z0, long long deg_f, const DimReport& dims);

}  // namespace detfree

#endif
