#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "oadesign/design_core.hpp"
#include "oadesign/penalty_weights.hpp"
#include "oadesign/solver.hpp"

namespace oadesign {

/// Everything a CLI run needs. Indices are stored 0-based; the JSON file and
/// command line use 1-based candidate and term indices.
struct RunConfig
{
    std::vector<Factor> factors;
    std::vector<ModelTerm> terms;
    std::vector<Index> targets;
    /// Explicit candidate points (columns). Empty means full factorial.
    std::optional<Eigen::MatrixXd> candidates;
    std::vector<int> multiplicities;

    SolveMode mode = SolveMode::constrained;
    /// One value (uniform) or one per target.
    std::vector<double> kappa{1e6};
    /// Explicit lambdas bypass the subspace weighting.
    std::optional<std::vector<double>> lambdas;
    double lambda_scale = 1.0;
    std::vector<Index> fixed_points;

    SolverOptions solver;
    TieBreak::Kind tie_break = TieBreak::Kind::smallest_index;
    std::uint64_t seed = 0;
    double sigma_sq = 1.0;

    ModelSpec model_spec() const;
    /// Full factorial or the explicit list, validated, then duplicated.
    CandidateSet candidate_set() const;
    TieBreak tie_break_policy() const { return {tie_break, seed}; }
    Eigen::VectorXd kappa_vector() const;
};

/// Parses the JSON schema documented in README.md. Relative lambda file paths
/// are resolved against `base_dir`. Throws SpecificationError.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Either a bare JSON array or an object with a "lambdas" array (the output
/// of `oadesigner weights`).
std::vector<double> load_lambda_file(const std::filesystem::path& path);

/// "1", "a1", "a1*a3", "a2^2", or an exponent array.
ModelTerm parse_term(const nlohmann::json& term, const std::vector<Factor>& factors);

} // namespace oadesign
