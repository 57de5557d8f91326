#ifndef DETFREE_MODEL_HPP
#define DETFREE_MODEL_HPP

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "detfree/polynomial.hpp"

namespace detfree {

// Generic matrix of indeterminates.  Variable (row r, column c) has index
// r*cols + c; for 3x5 this is x1..x5, y1..y5, z1..z5 = 0..14.
struct MatrixShape {
    int rows = 3;
    int cols = 5;

    void validate() const;
    int vars() const { return rows * cols; }
    int var_index(int row, int col) const { return row * cols + col; }
    int row_of(int v) const { return v / cols; }
    int col_of(int v) const { return v % cols; }
    std::string var_name(int v) const;
    bool operator==(const MatrixShape&) const = default;
};

std::optional<MatrixShape> parse_shape(const std::string& text);  // "3x5"

// Maximal-minor label: id 1..C(n,m) <-> column m-subset in colexicographic
// order (largest element first), 1-based columns.
struct MinorLabel {
    int id = 0;
    std::vector<int> columns;
};

struct Arrangement {
    MatrixShape shape;
    std::vector<int> labels;  // sorted, distinct, 1-based

    int factor_count() const { return static_cast<int>(labels.size()); }
    int degree() const { return shape.rows * factor_count(); }
};

// Fixed shape with cached labels and minors.
class Model {
  public:
    explicit Model(MatrixShape shape);

    const MatrixShape& shape() const { return shape_; }
    int nvars() const { return shape_.vars(); }
    int minor_count() const { return static_cast<int>(labels_.size()); }

    const MinorLabel& label(int id) const;
    int label_from_columns(const std::vector<int>& columns) const;  // throws on bad subset

    const PolyQ& minor(int id) const;

    Arrangement arrangement(const std::vector<int>& labels) const;  // validates, sorts
    std::vector<int> column_support(const Arrangement& arr) const;  // 1-based, sorted

    // Fully expanded defining polynomial; analysis paths never call this.
    PolyQ expand_defining(const Arrangement& arr) const;

    std::string poly_to_string(const PolyQ& p) const;

  private:
    MatrixShape shape_;
    std::vector<MinorLabel> labels_;
    std::vector<PolyQ> minors_;
};

// Derivation theta = sum coeffs[u] * d/du.  All nonzero coefficients share one
// homogeneous degree.
struct Derivation {
    std::vector<PolyQ> coeffs;

    bool is_zero() const;
    // Common homogeneous degree of the nonzero coefficients; -1 when zero.
    int degree() const;
};

Derivation euler_derivation(const MatrixShape& shape);
Derivation zero_derivation(const MatrixShape& shape);

// theta(g) = sum coeffs[u] * dg/du.
PolyQ apply_derivation(const Model& model, const Derivation& theta, const PolyQ& g);

struct CofactorCertificate {
    std::vector<PolyQ> cofactors;  // aligned with arrangement labels
};

struct TangencyFailure {
    int factor_index = 0;  // 0-based into arrangement labels
    Monomial residue_leading;
};

// Per-factor membership test theta(f_i) in (f_i); returns the verified
// cofactors or the first offending factor.
std::variant<CofactorCertificate, TangencyFailure> tangency(const Model& model, const Derivation& theta,
                                                            const Arrangement& arr);

// Column-permuted derivation: variable (r,c) -> (r, perm[c]) applied to both
// the coefficient slots and the coefficient polynomials.  perm is 0-based.
Derivation permute_columns(const MatrixShape& shape, const Derivation& theta, const std::vector<int>& perm);
PolyQ permute_columns(const MatrixShape& shape, const PolyQ& p, const std::vector<int>& perm);

// Searches S_n for a column permutation carrying arrangement `from` onto
// `to` (as label sets).
std::optional<std::vector<int>> find_column_isomorphism(const Model& model, const Arrangement& from,
                                                        const Arrangement& to);

// Embedded bases transcribed from the published proofs; ThmA(j) for j != 5
// and Mid(k) for k in {6,8,9} are obtained from the printed ones by column
// symmetry.
struct PaperBasisId {
    enum class Family { ThmA, Mid };
    Family family = Family::ThmA;
    int index = 5;
};

struct PaperBasis {
    PaperBasisId id;
    Arrangement arrangement;
    std::vector<Derivation> derivations;
};

PaperBasis paper_basis(const Model& model, PaperBasisId id);  // throws on unsupported id

// Basis for any arrangement column-isomorphic to a published family member
// (F5-type 5-tuples, Q7-type 6-tuples); absent otherwise.
std::optional<PaperBasis> known_family_basis(const Model& model, const Arrangement& arr);

// Raw embedded data-file text (same format as the files shipped under
// data/derivations/).
const char* embedded_derivation_json(const std::string& name);  // "thma-5" | "mid-7"

// Parse a derivation data file; validates shape and term triples.
std::vector<Derivation> parse_derivation_file(const std::string& json_text, const MatrixShape& expected_shape,
                                              std::vector<int>* arrangement_labels = nullptr);

}  // namespace detfree

#endif
