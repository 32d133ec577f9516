#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "oadesign/solver.hpp"

namespace oadesign::detail {

/// Row j of the result is e_{targets[j]}^T (|J| x |terms|).
Eigen::MatrixXd target_rows(Index term_count, const std::vector<Index>& targets);

struct Certificate
{
    double constraint_residual = 0.0;
    double stationarity = 0.0;
    double dual_violation = 0.0;
    bool passed = false;
};

/// KKT check at `coefficients`, whose nonzero groups must be exactly `support`.
/// Constrained mode: multipliers come from least squares on the support
/// stationarity equations. Relaxed mode: the smooth gradient is explicit.
Certificate certify(const GroupLassoProblem& problem, const Eigen::MatrixXd& coefficients,
                    const std::vector<Index>& support);

struct PolishResult
{
    Eigen::MatrixXd coefficients;
    std::vector<Index> support;
    int newton_iterations = 0;
};

/// Newton's method on the problem restricted to `support`, where the
/// objective is smooth. Groups whose block is driven through zero are removed
/// and the restricted problem is re-solved. Returns nullopt if the support is
/// infeasible (constrained mode), too large for dense Newton, or Newton fails.
std::optional<PolishResult> polish_on_support(const GroupLassoProblem& problem, std::vector<Index> support,
                                              const Eigen::MatrixXd& start);

/// Upper bound on |support| * |J| for the dense Newton system.
inline constexpr Index kMaxPolishVariables = 2500;

} // namespace oadesign::detail
