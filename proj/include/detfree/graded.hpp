#ifndef DETFREE_GRADED_HPP
#define DETFREE_GRADED_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

#include "detfree/model.hpp"

namespace detfree {

// Graded slice of the tangency conditions theta(f_i) = g_i f_i over F_p.
// Unknowns: the coefficients of each a_u on the degree-d monomial basis
// (nvars * N_d of them), then the cofactor coefficients g_i on the degree
// (d-1) basis.  Equations: one per factor per monomial of degree d+m-1.
// The system is block diagonal under the column/row bidegree grading; blocks
// are stored dense.
//
// ar_mode additionally imposes sum_i g_i = 0, cutting out the Jacobian
// syzygies AR(F)_d instead of the full tangent module D(C)_d.
struct TangencySystem {
    const Model* model = nullptr;
    Arrangement arr;
    int degree = 0;
    std::uint64_t prime = 0;
    bool ar_mode = false;

    std::size_t a_unknowns = 0;
    std::size_t g_unknowns = 0;
    std::size_t equation_rows = 0;   // #factors * N_{d+m-1}
    std::size_t constraint_rows = 0; // AR rows: N_{d-1}
    std::size_t nnz = 0;

    std::size_t unknown_count() const { return a_unknowns + g_unknowns; }

    struct Block {
        std::uint64_t key = 0;
        std::vector<std::uint32_t> cols;     // global unknown ids, ascending
        std::vector<std::uint64_t> row_ids;  // global row ids, ascending
        std::vector<std::uint64_t> dense;    // rows x cols, row-major, mod prime
    };
    std::vector<Block> blocks;  // sorted by key

    const Block* block_of_unknown(std::uint32_t col) const;
};

TangencySystem build_tangency_system(const Model& model, const Arrangement& arr, int degree, std::uint64_t prime,
                                     bool ar_mode);

// Documented sparse triplet dump: header lines then "row col value" records.
void dump_triplets(const TangencySystem& sys, std::ostream& os);

// A nullspace vector in global unknown coordinates.
struct SparseVecP {
    std::vector<std::pair<std::uint32_t, std::uint64_t>> entries;  // (unknown id, value)
};

struct NullspaceResult {
    long long dimension = 0;
    std::vector<SparseVecP> basis;  // canonical reduced-echelon basis, deterministic order
};

// Unique reduced-echelon nullspace; deterministic for a given system.
NullspaceResult nullspace(const TangencySystem& sys);

// Exactly verified tangent derivation with its per-factor cofactors.
struct RationalGenerator {
    int degree = 0;
    Derivation deriv;
    std::vector<PolyQ> cofactors;  // aligned with arrangement labels; sum is zero in AR scans
};

struct DegreeSummary {
    int degree = 0;
    long long dim_ar_upper = 0;  // mod-p nullspace dimension (consensus)
    long long dim_ar_lower = 0;  // rank of exactly verified rational elements
    bool certified = false;
    int new_generators = 0;
};

struct LiftRecord {
    int degree = 0;
    int generator_index = 0;
    int primes_used = 0;
    bool reconstructed = false;
    bool exact_verified = false;
};

struct LiftReport {
    std::vector<std::uint64_t> primes;
    std::vector<LiftRecord> records;
    std::string note;
};

struct ScanConfig {
    int d_max = 4;
    int prime_count = 2;
    int prime_bits = 62;
    std::uint64_t seed = 1;
    int threads = 1;
    int max_prime_retries = 3;
    int lift_extra_primes = 4;
};

// Degree-by-degree sandwich scan of AR(F): modular upper bounds, rational
// lower bounds through verified generators, canonical generator lifting.
class GradedScanner {
  public:
    GradedScanner(const Model& model, const Arrangement& arr, const ScanConfig& cfg);
    ~GradedScanner();

    // Process the next degree.  Returns false when the degree could not be
    // certified (the scan records why and stops producing generators).
    bool advance();

    int next_degree() const;
    const std::vector<DegreeSummary>& degrees() const;
    const std::vector<RationalGenerator>& generators() const;
    const LiftReport& lift_report() const;
    bool instability_seen() const;
    int certified_through() const;  // highest degree with lower == upper, -1 if none

    GradedScanner(const GradedScanner&) = delete;
    GradedScanner& operator=(const GradedScanner&) = delete;

  private:
    struct Impl;
    Impl* impl_;
};

struct GradedScan {
    Arrangement arr;
    std::vector<DegreeSummary> degrees;
    std::vector<RationalGenerator> generators;
    LiftReport lift;
    bool instability = false;
    int certified_through = -1;
};

GradedScan scan_arrangement(const Model& model, const Arrangement& arr, const ScanConfig& cfg);

// Spec-level reports over a finished scan.
struct DimReport {
    Arrangement arr;
    std::vector<std::uint64_t> primes;
    bool instability = false;
    struct Entry {
        int degree = 0;
        long long dim_d_upper = 0;
        long long dim_d_lower = 0;
        long long dim_ar = 0;  // certified value (upper when uncertified)
        bool certified = false;
    };
    std::vector<Entry> entries;
    int certified_through = -1;
};

DimReport graded_dimensions(const Model& model, const Arrangement& arr, int d_max, const ScanConfig& cfg);

struct GeneratorSet {
    Arrangement arr;
    std::vector<int> mu;  // mu[d] = new minimal AR generators in degree d
    std::vector<RationalGenerator> generators;
    bool rational_lifted = true;
};

// Requires certification through d_max; throws with the offending degree
// otherwise.
GeneratorSet minimal_generators(const Model& model, const Arrangement& arr, int d_max, const ScanConfig& cfg);

// dim S_e in nvars variables (0 for negative e).
long long poly_dim(int nvars, int e);

}  // namespace detfree

#endif
