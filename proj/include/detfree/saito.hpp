#ifndef DETFREE_SAITO_HPP
#define DETFREE_SAITO_HPP

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "detfree/model.hpp"

namespace detfree {

// Saito matrix: column 0 holds the coordinates (the Euler derivation),
// columns 1..n the coefficient vectors of the candidate derivations.
struct SaitoMatrix {
    int nvars = 0;
    std::vector<std::vector<PolyQ>> entries;  // entries[row][col]
    std::vector<int> col_degrees;             // homogeneous degree per column
};

SaitoMatrix saito_matrix(const Model& model, const std::vector<Derivation>& derivs);

struct PitConfig {
    int primes = 2;
    int points_per_prime = 4;
    int prime_bits = 62;
    std::uint64_t seed = 1;
    int resample_limit = 64;
};

struct PitEvidence {
    std::vector<std::uint64_t> primes;
    int points_per_prime = 0;
    std::uint64_t seed = 0;
    mpq_class error_bound;  // Schwartz-Zippel failure probability, exact
};

// Monte Carlo evaluation of det(Phi) = c * F.  Preconditions (checked): the
// derivations are exactly tangent and the column degrees sum to deg F.
// Returns the constant c (absent when the determinant vanishes or the ratio
// is inconsistent, i.e. the candidates are not a basis).
std::optional<mpq_class> pit_certify(const Model& model, const Arrangement& arr,
                                     const std::vector<Derivation>& derivs, const PitConfig& cfg,
                                     PitEvidence* evidence = nullptr);

// Exact determinant by column-subset dynamic programming (Laplace expansion
// memoized over column subsets).  Columns are processed in ascending nonzero
// count.  Throws std::length_error when the intermediate term budget is
// exceeded; callers fall back to the probabilistic mode.
PolyQ exact_det(const SaitoMatrix& mat, std::size_t term_budget = 8'000'000);

enum class SaitoMode { Probabilistic, Exact };

struct SaitoCertificate {
    Arrangement arr;
    std::vector<Derivation> derivations;
    std::vector<int> exponents;  // sorted ascending, degree of each derivation
    mpq_class constant;          // det(Phi) / F with the stored column order
    SaitoMode mode = SaitoMode::Probabilistic;
    PitEvidence evidence;        // probabilistic mode
    std::string source;          // "paper-basis" | "lifted"
};

struct CertifyFailure {
    enum class Stage { Tangency, DegreeSum, Determinant, Budget } stage;
    std::string detail;
    int derivation_index = -1;  // tangency stage
    int factor_index = -1;
};

using CertifyOutcome = std::variant<SaitoCertificate, CertifyFailure>;

// Full pipeline: exact tangency, degree-sum precheck, then PIT or exact
// determinant comparison against the expanded defining polynomial.
CertifyOutcome certify_free(const Model& model, const Arrangement& arr, const std::vector<Derivation>& derivs,
                            SaitoMode mode, const PitConfig& cfg, const std::string& source = "lifted");

}  // namespace detfree

#endif
