#include "oadesign/solver.hpp"

#include <algorithm>
#include <cmath>

#include "oadesign/errors.hpp"
#include "support_polish.hpp"

namespace oadesign {

void SolverOptions::validate() const
{
    if (!(primal_tol > 0.0) || !(dual_tol > 0.0) || !(support_threshold > 0.0)) {
        throw SpecificationError("solver tolerances must be positive");
    }
    if (max_iterations < 1) {
        throw SpecificationError("max_iterations must be at least 1");
    }
    if (!(penalty_parameter > 0.0)) {
        throw SpecificationError("penalty_parameter must be positive");
    }
}

void GroupLassoProblem::validate() const
{
    options.validate();
    const Index g = model.candidate_count();
    if (g < 1 || model.term_count() < 1) {
        throw SpecificationError("model matrix is empty");
    }
    if (lambdas.size() != g) {
        throw SpecificationError("lambda vector has " + std::to_string(lambdas.size()) + " entries, expected " +
                                 std::to_string(g));
    }
    if ((lambdas.array() < 0.0).any() || !lambdas.allFinite()) {
        throw SpecificationError("lambdas must be finite and non-negative");
    }
    if (targets.empty()) {
        throw SpecificationError("no target parameters");
    }
    for (Index t : targets) {
        if (t < 0 || t >= model.term_count()) {
            throw SpecificationError("target index " + std::to_string(t + 1) + " is out of range");
        }
    }
    if (mode == SolveMode::relaxed) {
        if (kappas.size() != static_cast<Index>(targets.size())) {
            throw SpecificationError("relaxed mode needs one kappa per target");
        }
        if ((kappas.array() < 0.0).any() || !kappas.allFinite()) {
            throw SpecificationError("kappas must be finite and non-negative");
        }
    }
}

std::string to_string(SolveMode mode)
{
    return mode == SolveMode::constrained ? "constrained" : "relaxed";
}

std::string to_string(SolveStatus status)
{
    return status == SolveStatus::converged ? "converged" : "max_iterations";
}

Eigen::VectorXd group_soft_threshold(const Eigen::Ref<const Eigen::VectorXd>& d, double c, double lambda)
{
    const double norm = d.norm();
    if (norm == 0.0 || 2.0 * norm <= lambda) {
        return Eigen::VectorXd::Zero(d.size());
    }
    return (1.0 - lambda / (2.0 * norm)) * d / c;
}

double objective_value(const GroupLassoProblem& problem, const Eigen::MatrixXd& coefficients)
{
    const Eigen::MatrixXd& m = problem.model.values;
    if (coefficients.rows() != static_cast<Index>(problem.targets.size()) || coefficients.cols() != m.cols()) {
        throw SpecificationError("coefficient matrix has the wrong shape");
    }
    double value = coefficients.squaredNorm();
    for (Index g = 0; g < m.cols(); ++g) {
        value += problem.lambdas[g] * coefficients.col(g).norm();
    }
    if (problem.mode == SolveMode::relaxed) {
        const Eigen::MatrixXd fit = coefficients * m.transpose() - detail::target_rows(m.rows(), problem.targets);
        for (Index j = 0; j < fit.rows(); ++j) {
            value += problem.kappas[j] * fit.row(j).squaredNorm();
        }
    }
    return value;
}

std::vector<Index> extract_support(const Eigen::MatrixXd& coefficients, double threshold)
{
    if (threshold < 0.0) {
        throw SpecificationError("support threshold must be non-negative");
    }
    std::vector<Index> support;
    for (Index g = 0; g < coefficients.cols(); ++g) {
        if (coefficients.col(g).norm() > threshold) {
            support.push_back(g);
        }
    }
    return support;
}

std::vector<Index> extract_support(const Solution& solution, double threshold)
{
    return extract_support(solution.coefficients, threshold);
}

double constraint_residual(const ModelMatrix& model, const std::vector<Index>& targets,
                           const Eigen::MatrixXd& coefficients)
{
    const Eigen::MatrixXd fit =
        coefficients * model.values.transpose() - detail::target_rows(model.term_count(), targets);
    double worst = 0.0;
    for (Index j = 0; j < fit.rows(); ++j) {
        worst = std::max(worst, fit.row(j).norm());
    }
    return worst;
}

namespace {

constexpr double kFeasibilityProjectionTol = 1e-8;

std::vector<Index> nonzero_groups(const Eigen::MatrixXd& b)
{
    std::vector<Index> out;
    for (Index g = 0; g < b.cols(); ++g) {
        if (b.col(g).squaredNorm() > 0.0) {
            out.push_back(g);
        }
    }
    return out;
}

Solution finalize(const GroupLassoProblem& problem, Eigen::MatrixXd coefficients, int iterations,
                  SolveStatus status, const detail::Certificate& cert)
{
    Solution s;
    s.coefficients = std::move(coefficients);
    s.group_norms = s.coefficients.colwise().norm().transpose();
    s.support = extract_support(s.coefficients, problem.options.support_threshold);
    s.objective = objective_value(problem, s.coefficients);
    s.constraint_residual = constraint_residual(problem.model, problem.targets, s.coefficients);
    s.stationarity_residual = cert.stationarity;
    s.dual_violation = cert.dual_violation;
    s.iterations = iterations;
    s.status = status;
    return s;
}

/// Tracks how long the nonzero pattern has been unchanged and spaces out
/// polish attempts with a doubling backoff.
class PolishSchedule
{
public:
    void observe(std::vector<Index> support)
    {
        if (support == last_) {
            ++stable_;
        } else {
            last_ = std::move(support);
            stable_ = 0;
        }
    }

    bool due(int iteration) const { return stable_ >= 10 && iteration >= next_; }

    void failed(int iteration)
    {
        next_ = iteration + backoff_;
        backoff_ = std::min(backoff_ * 2, 4096);
    }

    const std::vector<Index>& support() const { return last_; }

private:
    std::vector<Index> last_;
    int stable_ = 0;
    int next_ = 0;
    int backoff_ = 10;
};

/// Least-squares projection of each row onto {b : M b = e_j}, using a cached
/// factorization of M M^T.
class AffineProjector
{
public:
    AffineProjector(const Eigen::MatrixXd& m, const Eigen::MatrixXd& e) : m_(m), e_(e), gram_(m * m.transpose()) {}

    void apply(Eigen::MatrixXd& rows) const
    {
        const Eigen::MatrixXd misfit = m_ * rows.transpose() - e_.transpose(); // |terms| x |J|
        rows -= (m_.transpose() * gram_.solve(misfit)).transpose();
    }

    Eigen::MatrixXd min_norm() const { return (m_.transpose() * gram_.solve(e_.transpose())).transpose(); }

private:
    const Eigen::MatrixXd& m_;
    const Eigen::MatrixXd& e_;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> gram_;
};

/// Zero outside `support`, then the closest point satisfying M b_j = e_j using
/// only support columns. Falls back to the input when the support cannot
/// represent some e_j.
Eigen::MatrixXd feasible_on_support(const Eigen::MatrixXd& m, const Eigen::MatrixXd& e, const Eigen::MatrixXd& b,
                                    const std::vector<Index>& support)
{
    if (support.empty()) {
        return b;
    }
    Eigen::MatrixXd ms(m.rows(), static_cast<Index>(support.size()));
    Eigen::MatrixXd bs(b.rows(), static_cast<Index>(support.size()));
    for (std::size_t i = 0; i < support.size(); ++i) {
        ms.col(static_cast<Index>(i)) = m.col(support[i]);
        bs.col(static_cast<Index>(i)) = b.col(support[i]);
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(ms * ms.transpose());
    const Eigen::MatrixXd misfit = ms * bs.transpose() - e.transpose();
    bs -= (ms.transpose() * cod.solve(misfit)).transpose();
    if ((bs * ms.transpose() - e).rowwise().norm().maxCoeff() > kFeasibilityProjectionTol) {
        return b;
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(b.rows(), b.cols());
    for (std::size_t i = 0; i < support.size(); ++i) {
        out.col(support[i]) = bs.col(static_cast<Index>(i));
    }
    return out;
}

} // namespace

Solution solve_constrained(const GroupLassoProblem& problem)
{
    problem.validate();
    if (problem.mode != SolveMode::constrained) {
        throw SpecificationError("solve_constrained called on a relaxed problem");
    }
    const Eigen::MatrixXd& m = problem.model.values;
    const Eigen::MatrixXd e = detail::target_rows(m.rows(), problem.targets);
    const auto& opt = problem.options;
    const Index groups = m.cols();

    AffineProjector project(m, e);
    const Eigen::MatrixXd least_squares = project.min_norm();
    const Eigen::MatrixXd ls_fit = least_squares * m.transpose() - e;
    for (Index j = 0; j < e.rows(); ++j) {
        if (ls_fit.row(j).norm() > 1e-8) {
            const auto pos = static_cast<std::size_t>(j);
            throw InfeasibleError(pos, static_cast<std::size_t>(problem.targets[pos]),
                                  "target parameter " + std::to_string(problem.targets[pos] + 1) +
                                      " is not estimable from the candidate points");
        }
    }

    Eigen::MatrixXd z = opt.initialization == Initialization::least_squares
                            ? least_squares
                            : Eigen::MatrixXd::Zero(e.rows(), groups);
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(e.rows(), groups);
    Eigen::MatrixXd x(e.rows(), groups);
    double rho = opt.penalty_parameter;
    PolishSchedule schedule;

    for (int it = 1; it <= opt.max_iterations; ++it) {
        x = rho / (2.0 + rho) * (z - u);
        project.apply(x);

        const Eigen::MatrixXd z_prev = z;
        const Eigen::MatrixXd v = x + u;
        for (Index g = 0; g < groups; ++g) {
            z.col(g) = group_soft_threshold(0.5 * rho * v.col(g), 0.5 * rho, problem.lambdas[g]);
        }
        u += x - z;

        const double primal = (x - z).norm();
        const double dual = rho * (z - z_prev).norm();
        if (primal > 10.0 * dual) {
            rho *= 2.0;
            u *= 0.5;
        } else if (dual > 10.0 * primal) {
            rho *= 0.5;
            u *= 2.0;
        }

        schedule.observe(nonzero_groups(z));
        const bool admm_done = primal <= opt.primal_tol && dual <= opt.dual_tol;
        if (schedule.due(it) || admm_done) {
            if (auto polished = detail::polish_on_support(problem, schedule.support(), z)) {
                const auto cert = detail::certify(problem, polished->coefficients, polished->support);
                if (cert.passed) {
                    return finalize(problem, std::move(polished->coefficients), it, SolveStatus::converged, cert);
                }
            }
            schedule.failed(it);
        }
        if (admm_done) {
            Eigen::MatrixXd b = feasible_on_support(m, e, z, schedule.support());
            const auto cert = detail::certify(problem, b, nonzero_groups(b));
            return finalize(problem, std::move(b), it, SolveStatus::converged, cert);
        }
    }

    Eigen::MatrixXd b = feasible_on_support(m, e, z, nonzero_groups(z));
    const auto cert = detail::certify(problem, b, nonzero_groups(b));
    return finalize(problem, std::move(b), opt.max_iterations, SolveStatus::max_iterations, cert);
}

namespace {

/// argmin_x sum_j (c_j x_j^2 - 2 d_j x_j) + lambda ||x|| for unequal c_j.
/// Nonzero solutions have x_j = d_j / (c_j + lambda / (2r)) with r = ||x||,
/// where r is the root of sum_j d_j^2 / (c_j r + lambda/2)^2 = 1.
Eigen::VectorXd weighted_group_threshold(const Eigen::VectorXd& d, const Eigen::VectorXd& c, double lambda)
{
    const double dn = d.norm();
    if (dn == 0.0 || 2.0 * dn <= lambda) {
        return Eigen::VectorXd::Zero(d.size());
    }
    if (lambda == 0.0) {
        return d.cwiseQuotient(c);
    }
    const double half = 0.5 * lambda;
    auto residual = [&](double r, double& slope) {
        double f = -1.0;
        slope = 0.0;
        for (Index j = 0; j < d.size(); ++j) {
            const double den = c[j] * r + half;
            f += d[j] * d[j] / (den * den);
            slope -= 2.0 * d[j] * d[j] * c[j] / (den * den * den);
        }
        return f;
    };
    double lo = 0.0;
    double hi = dn / c.minCoeff();
    double r = 0.5 * hi;
    for (int it = 0; it < 200; ++it) {
        double slope = 0.0;
        const double f = residual(r, slope);
        if (f > 0.0) {
            lo = r;
        } else {
            hi = r;
        }
        double next = slope < 0.0 ? r - f / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        if (std::abs(next - r) <= 1e-12 * std::max(1.0, r) || hi - lo <= 1e-15 * std::max(1.0, hi)) {
            r = next;
            break;
        }
        r = next;
    }
    Eigen::VectorXd x(d.size());
    for (Index j = 0; j < d.size(); ++j) {
        x[j] = d[j] * r / (c[j] * r + half);
    }
    return x;
}

} // namespace

Solution solve_relaxed(const GroupLassoProblem& problem)
{
    problem.validate();
    if (problem.mode != SolveMode::relaxed) {
        throw SpecificationError("solve_relaxed called on a constrained problem");
    }
    const Eigen::MatrixXd& m = problem.model.values;
    const Eigen::MatrixXd e = detail::target_rows(m.rows(), problem.targets);
    const auto& opt = problem.options;
    const Index groups = m.cols();
    const Index nj = e.rows();
    const Eigen::VectorXd& kappa = problem.kappas;
    const bool uniform = (kappa.array() == kappa[0]).all();

    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(nj, groups);
    if (opt.initialization == Initialization::least_squares) {
        const Eigen::MatrixXd mtm = m.transpose() * m;
        for (Index j = 0; j < nj; ++j) {
            const Eigen::MatrixXd h = Eigen::MatrixXd::Identity(groups, groups) + kappa[j] * mtm;
            b.row(j) = h.ldlt().solve(kappa[j] * m.transpose() * e.row(j).transpose()).transpose();
        }
    }
    // Residual columns r_j = e_j - M b_j.
    Eigen::MatrixXd resid = e.transpose() - m * b.transpose();
    const Eigen::VectorXd col_sq = m.colwise().squaredNorm().transpose();
    PolishSchedule schedule;

    Eigen::VectorXd d(nj);
    Eigen::VectorXd c(nj);
    for (int it = 1; it <= opt.max_iterations; ++it) {
        double max_update = 0.0;
        for (Index g = 0; g < groups; ++g) {
            const auto mg = m.col(g);
            for (Index j = 0; j < nj; ++j) {
                d[j] = kappa[j] * (mg.dot(resid.col(j)) + b(j, g) * col_sq[g]);
                c[j] = 1.0 + kappa[j] * col_sq[g];
            }
            const Eigen::VectorXd next = uniform ? group_soft_threshold(d, c[0], problem.lambdas[g])
                                                 : weighted_group_threshold(d, c, problem.lambdas[g]);
            const Eigen::VectorXd delta = next - b.col(g);
            const double step = delta.norm();
            if (step > 0.0) {
                resid.noalias() -= mg * delta.transpose();
                b.col(g) = next;
                max_update = std::max(max_update, step);
            }
        }

        schedule.observe(nonzero_groups(b));
        const bool bcd_done = max_update <= opt.primal_tol;
        if (schedule.due(it) || bcd_done) {
            if (auto polished = detail::polish_on_support(problem, schedule.support(), b)) {
                const auto cert = detail::certify(problem, polished->coefficients, polished->support);
                if (cert.passed) {
                    return finalize(problem, std::move(polished->coefficients), it, SolveStatus::converged, cert);
                }
            }
            schedule.failed(it);
        }
        if (bcd_done) {
            const auto cert = detail::certify(problem, b, nonzero_groups(b));
            return finalize(problem, std::move(b), it, SolveStatus::converged, cert);
        }
    }
    const auto cert = detail::certify(problem, b, nonzero_groups(b));
    return finalize(problem, std::move(b), opt.max_iterations, SolveStatus::max_iterations, cert);
}

Solution solve(const GroupLassoProblem& problem)
{
    return problem.mode == SolveMode::constrained ? solve_constrained(problem) : solve_relaxed(problem);
}

} // namespace oadesign
