#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oadesign/execution.hpp"

namespace oadesign {

using Index = Eigen::Index;

struct Factor
{
    std::string name;
    std::vector<double> levels;
};

/// Monomial a^f = prod_i a_i^{f_i}; one exponent per factor.
struct ModelTerm
{
    std::vector<int> exponents;

    bool operator==(const ModelTerm&) const = default;

    bool is_intercept() const;
    int degree() const;
};

/// Factors, the ordered term list and the (0-based) target term indices.
class ModelSpec
{
public:
    ModelSpec(std::vector<Factor> factors, std::vector<ModelTerm> terms, std::vector<Index> targets);

    const std::vector<Factor>& factors() const noexcept { return factors_; }
    const std::vector<ModelTerm>& terms() const noexcept { return terms_; }
    const std::vector<Index>& targets() const noexcept { return targets_; }

    Index factor_count() const noexcept { return static_cast<Index>(factors_.size()); }
    Index term_count() const noexcept { return static_cast<Index>(terms_.size()); }

    /// "1", "a1", "a1*a3", "a2^2" using factor names.
    std::string term_label(Index term) const;

private:
    std::vector<Factor> factors_;
    std::vector<ModelTerm> terms_;
    std::vector<Index> targets_;
};

/// Candidate design points, one per column (F x G). Duplicate columns are
/// allowed and represent repeated measurements.
struct CandidateSet
{
    Eigen::MatrixXd points;

    Index factor_count() const noexcept { return points.rows(); }
    Index size() const noexcept { return points.cols(); }
};

/// Evaluated monomials, |terms| x G. Row order follows ModelSpec::terms().
struct ModelMatrix
{
    Eigen::MatrixXd values;

    Index term_count() const noexcept { return values.rows(); }
    Index candidate_count() const noexcept { return values.cols(); }
};

/// All level combinations, first factor varying slowest. With levels listed
/// as (-1, 1) the first column is (-1, ..., -1).
CandidateSet enumerate_full_factorial(const std::vector<Factor>& factors);

/// prod_f point[f]^exponents[f], with 0^0 = 1.
double evaluate_term(const Eigen::Ref<const Eigen::VectorXd>& point, const ModelTerm& term);

ModelMatrix build_model_matrix(const CandidateSet& candidates, const ModelSpec& spec,
                               Execution exec = Execution::parallel);

/// Repeats column g multiplicities[g] times, preserving order.
CandidateSet duplicate_columns(const CandidateSet& candidates, const std::vector<int>& multiplicities);

/// Throws SpecificationError if any entry is not one of its factor's levels.
void validate_candidates(const CandidateSet& candidates, const std::vector<Factor>& factors);

/// Index of the candidate column equal to `point`, or -1.
Index find_candidate(const CandidateSet& candidates, const Eigen::Ref<const Eigen::VectorXd>& point);

} // namespace oadesign
