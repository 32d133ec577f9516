#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oadesign/design_core.hpp"

namespace oadesign {

enum class SolveMode
{
    /// min sum_j ||b_j||^2 + sum_g lambda_g ||B[:, g]||  s.t.  M b_j = e_j
    constrained,
    /// min sum_j (||b_j||^2 + kappa_j ||M b_j - e_j||^2) + sum_g lambda_g ||B[:, g]||
    relaxed
};

enum class Initialization
{
    zero,
    /// Minimum-norm solution of M b_j = e_j (constrained) or the ridge
    /// solution without penalties (relaxed).
    least_squares
};

struct SolverOptions
{
    double primal_tol = 1e-8;
    double dual_tol = 1e-8;
    int max_iterations = 200000;
    double support_threshold = 1e-6;
    /// Initial ADMM penalty; adapted by residual balancing.
    double penalty_parameter = 1.0;
    Initialization initialization = Initialization::zero;

    void validate() const;
};

/// One design-selection problem. `targets` are rows of the model matrix
/// (0-based); coefficient row j belongs to targets[j].
struct GroupLassoProblem
{
    ModelMatrix model;
    std::vector<Index> targets;
    Eigen::VectorXd lambdas;
    SolveMode mode = SolveMode::constrained;
    /// One entry per target; relaxed mode only.
    Eigen::VectorXd kappas;
    SolverOptions options;

    void validate() const;
    Index group_count() const noexcept { return model.candidate_count(); }
};

enum class SolveStatus
{
    converged,
    max_iterations
};

struct Solution
{
    /// |J| x G; row j is b_j^T, column g is the group I_g.
    Eigen::MatrixXd coefficients;
    Eigen::VectorXd group_norms;
    std::vector<Index> support;
    double objective = 0.0;
    /// max_j ||M b_j - e_j||_2
    double constraint_residual = 0.0;
    /// Largest stationarity violation over support groups.
    double stationarity_residual = 0.0;
    /// max over zero groups of (||dual block|| - lambda_g), clipped at 0.
    double dual_violation = 0.0;
    int iterations = 0;
    SolveStatus status = SolveStatus::max_iterations;
};

std::string to_string(SolveMode mode);
std::string to_string(SolveStatus status);

/// argmin_x c||x||^2 - 2 d^T x + lambda ||x|| = max(0, 1 - lambda / (2||d||)) d / c.
Eigen::VectorXd group_soft_threshold(const Eigen::Ref<const Eigen::VectorXd>& d, double c, double lambda);

/// Constrained or relaxed objective at `coefficients` (feasibility not included).
double objective_value(const GroupLassoProblem& problem, const Eigen::MatrixXd& coefficients);

/// {g : ||B[:, g]|| > threshold}
std::vector<Index> extract_support(const Solution& solution, double threshold);
std::vector<Index> extract_support(const Eigen::MatrixXd& coefficients, double threshold);

/// max_j ||M b_j - e_j||_2
double constraint_residual(const ModelMatrix& model, const std::vector<Index>& targets,
                           const Eigen::MatrixXd& coefficients);

/// ADMM on the equality-constrained problem, finished by a support-restricted
/// Newton solve and a KKT check. Throws InfeasibleError if some e_j is not in
/// the column space of M.
Solution solve_constrained(const GroupLassoProblem& problem);

/// Cyclic block coordinate descent over candidate groups, finished the same way.
Solution solve_relaxed(const GroupLassoProblem& problem);

/// Dispatches on problem.mode.
Solution solve(const GroupLassoProblem& problem);

} // namespace oadesign
