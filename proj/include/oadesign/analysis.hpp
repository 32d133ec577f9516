#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oadesign/design_core.hpp"
#include "oadesign/solver.hpp"

namespace oadesign {

/// Selected runs with their linear estimators. Variances assume sigma^2 = 1.
struct DesignMatrix
{
    /// F x n, columns are runs.
    Eigen::MatrixXd points;
    std::vector<Index> source_indices;
    /// |J| x n, coefficient rows restricted to the runs.
    Eigen::MatrixXd estimators;
    Eigen::VectorXd variances;
};

DesignMatrix make_design(const CandidateSet& candidates, const Eigen::MatrixXd& coefficients,
                         const std::vector<Index>& support);

struct UnbiasednessReport
{
    bool passed = false;
    /// ||M b_j - e_j||_inf per target.
    Eigen::VectorXd residuals;
    double max_residual = 0.0;
};

UnbiasednessReport check_unbiasedness(const ModelMatrix& model, const std::vector<Index>& targets,
                                      const Eigen::MatrixXd& coefficients, double tol);

struct VarianceReport
{
    double total = 0.0;
    Eigen::VectorXd per_parameter;
};

VarianceReport variance_sum(const Eigen::MatrixXd& coefficients, double sigma_sq = 1.0);

struct MonteCarloReport
{
    Eigen::VectorXd expected;
    Eigen::VectorXd empirical_mean;
    Eigen::VectorXd empirical_variance;
    Eigen::VectorXd theoretical_variance;
    std::vector<bool> mean_ok;
    std::vector<bool> variance_ok;
    bool passed = false;
};

/// Simulates R = M^T gamma + eps with eps ~ N(0, sigma^2) and checks that the
/// estimators gamma_j = R^T b_j have the right mean (within 4 standard errors)
/// and variance (within 10%). Draws are split into fixed blocks, each with its
/// own seeded stream, so serial and parallel runs agree bitwise.
MonteCarloReport monte_carlo_estimator_check(const ModelMatrix& model, const std::vector<Index>& targets,
                                             const Eigen::MatrixXd& coefficients,
                                             const Eigen::VectorXd& gamma_true, double sigma_sq,
                                             std::int64_t n_draws, std::uint64_t seed,
                                             Execution exec = Execution::parallel);

/// Feasibility tolerance for e_j in the column space of a restricted model matrix.
inline constexpr double kFeasibilityTolerance = 1e-8;

/// b_j = pinv(M[:, support]) e_j embedded into length-G rows (zeros elsewhere).
/// Throws InfeasibleError naming the first unreachable target.
Eigen::MatrixXd min_norm_least_squares(const ModelMatrix& model, const std::vector<Index>& support,
                                       const std::vector<Index>& targets);

struct OracleResult
{
    double optimal_value = std::numeric_limits<double>::infinity();
    std::vector<std::vector<Index>> optimal_supports;
    std::int64_t evaluated_count = 0;
    std::int64_t feasible_count = 0;
};

inline constexpr std::int64_t kOracleGuard = 10'000'000;

/// Number of n-subsets of G items, saturating above kOracleGuard.
std::int64_t binomial_capped(Index g, Index n);

/// Enumerates every size-n support, evaluates sum_j ||b_j||^2 for the feasible
/// ones through min_norm_least_squares, and returns the minimum with all
/// supports attaining it (within 1e-9). Throws SizeError past kOracleGuard.
OracleResult brute_force_a_optimal(const ModelMatrix& model, const std::vector<Index>& targets, Index support_size,
                                   Execution exec = Execution::parallel);

/// Every `strength`-subset of factor rows shows each level combination equally
/// often. Levels default to the distinct values present in each row.
bool oa_strength_check(const Eigen::MatrixXd& points, int strength,
                       const std::vector<std::vector<double>>* levels = nullptr);

struct EquivalenceResult
{
    bool equivalent = false;
    std::string reason;
};

/// Two-level designs only; factor rows are coded to -1/+1 by level order.
/// Equivalence allows run permutation, factor permutation and per-factor
/// level swap. Compared through a canonical form (lexicographically smallest
/// sorted run list over the symmetry group), brute-forced for F <= 6.
EquivalenceResult design_equivalent(const Eigen::MatrixXd& first, const Eigen::MatrixXd& second);

/// Canonical representative used by design_equivalent; nullopt if not two-level
/// or F > 6.
std::optional<std::vector<std::vector<int>>> canonical_form(const Eigen::MatrixXd& points);

} // namespace oadesign
