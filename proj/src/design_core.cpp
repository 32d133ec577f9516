#include "oadesign/design_core.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include <omp.h>

#include "oadesign/errors.hpp"

namespace oadesign {

int max_threads() noexcept
{
    return omp_get_max_threads();
}

bool ModelTerm::is_intercept() const
{
    return std::all_of(exponents.begin(), exponents.end(), [](int e) { return e == 0; });
}

int ModelTerm::degree() const
{
    return std::accumulate(exponents.begin(), exponents.end(), 0);
}

ModelSpec::ModelSpec(std::vector<Factor> factors, std::vector<ModelTerm> terms, std::vector<Index> targets)
    : factors_(std::move(factors)), terms_(std::move(terms)), targets_(std::move(targets))
{
    if (factors_.empty()) {
        throw SpecificationError("model needs at least one factor");
    }
    for (const auto& f : factors_) {
        if (f.levels.empty()) {
            throw SpecificationError("factor '" + f.name + "' has no levels");
        }
        auto sorted = f.levels;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw SpecificationError("factor '" + f.name + "' has repeated levels");
        }
    }
    if (terms_.empty()) {
        throw SpecificationError("model needs at least one term");
    }
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        const auto& t = terms_[i];
        if (t.exponents.size() != factors_.size()) {
            throw SpecificationError("term " + std::to_string(i + 1) + " has " + std::to_string(t.exponents.size()) +
                                     " exponents, expected " + std::to_string(factors_.size()));
        }
        if (std::any_of(t.exponents.begin(), t.exponents.end(), [](int e) { return e < 0; })) {
            throw SpecificationError("term " + std::to_string(i + 1) + " has a negative exponent");
        }
        for (std::size_t k = 0; k < i; ++k) {
            if (terms_[k] == t) {
                throw SpecificationError("terms " + std::to_string(k + 1) + " and " + std::to_string(i + 1) +
                                         " are identical");
            }
        }
    }
    if (targets_.empty()) {
        throw SpecificationError("at least one target parameter is required");
    }
    for (Index j : targets_) {
        if (j < 0 || j >= term_count()) {
            throw SpecificationError("target index " + std::to_string(j + 1) + " is out of range");
        }
    }
    auto sorted = targets_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw SpecificationError("target indices must be distinct");
    }
}

std::string ModelSpec::term_label(Index term) const
{
    const auto& t = terms_.at(static_cast<std::size_t>(term));
    if (t.is_intercept()) {
        return "1";
    }
    std::ostringstream out;
    bool first = true;
    for (std::size_t f = 0; f < t.exponents.size(); ++f) {
        if (t.exponents[f] == 0) {
            continue;
        }
        if (!first) {
            out << '*';
        }
        out << factors_[f].name;
        if (t.exponents[f] > 1) {
            out << '^' << t.exponents[f];
        }
        first = false;
    }
    return out.str();
}

CandidateSet enumerate_full_factorial(const std::vector<Factor>& factors)
{
    if (factors.empty()) {
        throw SpecificationError("cannot enumerate candidates without factors");
    }
    Index total = 1;
    for (const auto& f : factors) {
        if (f.levels.empty()) {
            throw SpecificationError("factor '" + f.name + "' has no levels");
        }
        total *= static_cast<Index>(f.levels.size());
    }

    const auto nf = static_cast<Index>(factors.size());
    CandidateSet out{Eigen::MatrixXd(nf, total)};
    // Mixed-radix counter over level indices, last factor fastest.
    std::vector<std::size_t> digit(factors.size(), 0);
    for (Index g = 0; g < total; ++g) {
        for (Index f = 0; f < nf; ++f) {
            out.points(f, g) = factors[f].levels[digit[f]];
        }
        for (Index f = nf - 1; f >= 0; --f) {
            if (++digit[f] < factors[f].levels.size()) {
                break;
            }
            digit[f] = 0;
        }
    }
    return out;
}

double evaluate_term(const Eigen::Ref<const Eigen::VectorXd>& point, const ModelTerm& term)
{
    double value = 1.0;
    for (Index f = 0; f < point.size(); ++f) {
        for (int k = 0; k < term.exponents[f]; ++k) {
            value *= point[f];
        }
    }
    return value;
}

ModelMatrix build_model_matrix(const CandidateSet& candidates, const ModelSpec& spec, Execution exec)
{
    if (candidates.factor_count() != spec.factor_count()) {
        throw SpecificationError("candidate set has " + std::to_string(candidates.factor_count()) +
                                 " factor rows but the model has " + std::to_string(spec.factor_count()) + " factors");
    }
    const Index g_count = candidates.size();
    const Index t_count = spec.term_count();
    ModelMatrix m{Eigen::MatrixXd(t_count, g_count)};
    const auto& terms = spec.terms();

#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
    for (Index g = 0; g < g_count; ++g) {
        for (Index j = 0; j < t_count; ++j) {
            m.values(j, g) = evaluate_term(candidates.points.col(g), terms[j]);
        }
    }
    return m;
}

CandidateSet duplicate_columns(const CandidateSet& candidates, const std::vector<int>& multiplicities)
{
    if (static_cast<Index>(multiplicities.size()) != candidates.size()) {
        throw SpecificationError("multiplicities has " + std::to_string(multiplicities.size()) + " entries, expected " +
                                 std::to_string(candidates.size()));
    }
    Index total = 0;
    for (int k : multiplicities) {
        if (k <= 0) {
            throw SpecificationError("multiplicities must be positive");
        }
        total += k;
    }
    CandidateSet out{Eigen::MatrixXd(candidates.factor_count(), total)};
    Index col = 0;
    for (Index g = 0; g < candidates.size(); ++g) {
        for (int k = 0; k < multiplicities[g]; ++k) {
            out.points.col(col++) = candidates.points.col(g);
        }
    }
    return out;
}

void validate_candidates(const CandidateSet& candidates, const std::vector<Factor>& factors)
{
    if (candidates.factor_count() != static_cast<Index>(factors.size())) {
        throw SpecificationError("candidate set rows do not match the factor count");
    }
    if (candidates.size() < 1) {
        throw SpecificationError("candidate set is empty");
    }
    for (Index f = 0; f < candidates.factor_count(); ++f) {
        const auto& lv = factors[f].levels;
        for (Index g = 0; g < candidates.size(); ++g) {
            if (std::find(lv.begin(), lv.end(), candidates.points(f, g)) == lv.end()) {
                throw SpecificationError("candidate " + std::to_string(g + 1) + " uses a level of factor '" +
                                         factors[f].name + "' that is not declared");
            }
        }
    }
}

Index find_candidate(const CandidateSet& candidates, const Eigen::Ref<const Eigen::VectorXd>& point)
{
    if (point.size() != candidates.factor_count()) {
        return -1;
    }
    for (Index g = 0; g < candidates.size(); ++g) {
        if (candidates.points.col(g) == point) {
            return g;
        }
    }
    return -1;
}

} // namespace oadesign
