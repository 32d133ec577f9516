#include "support_polish.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oadesign::detail {

Eigen::MatrixXd target_rows(Index term_count, const std::vector<Index>& targets)
{
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(static_cast<Index>(targets.size()), term_count);
    for (std::size_t j = 0; j < targets.size(); ++j) {
        e(static_cast<Index>(j), targets[j]) = 1.0;
    }
    return e;
}

namespace {

Eigen::MatrixXd columns(const Eigen::MatrixXd& m, const std::vector<Index>& cols)
{
    Eigen::MatrixXd out(m.rows(), static_cast<Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) {
        out.col(static_cast<Index>(i)) = m.col(cols[i]);
    }
    return out;
}

/// min_z 1/2 z^T Q z + q^T z + sum_g lambda_g ||(b0 + P z)_g||
///
/// The coefficient vector b is stacked group-major: b[g * width + j].
struct ReducedProblem
{
    Eigen::MatrixXd p;
    Eigen::VectorXd b0;
    Eigen::MatrixXd q_mat;
    Eigen::VectorXd q_vec;
    Eigen::VectorXd lambdas;
    Index width = 0;

    Index groups() const { return lambdas.size(); }

    Eigen::VectorXd coefficients(const Eigen::VectorXd& z) const { return b0 + p * z; }

    double value(const Eigen::VectorXd& z) const
    {
        const Eigen::VectorXd b = coefficients(z);
        double v = 0.5 * z.dot(q_mat * z) + q_vec.dot(z);
        for (Index g = 0; g < groups(); ++g) {
            v += lambdas[g] * b.segment(g * width, width).norm();
        }
        return v;
    }
};

enum class NewtonOutcome
{
    converged,
    drop,
    failed
};

struct NewtonResult
{
    NewtonOutcome outcome = NewtonOutcome::failed;
    Eigen::VectorXd z;
    Index drop_group = -1;
    int iterations = 0;
};

NewtonResult minimize_reduced(const ReducedProblem& rp, Eigen::VectorXd z)
{
    const Index w = rp.width;
    NewtonResult res;
    const double grad_tol = 1e-13 * (1.0 + rp.q_vec.lpNorm<Eigen::Infinity>() + rp.lambdas.lpNorm<Eigen::Infinity>());

    for (int it = 0; it < 100; ++it) {
        res.iterations = it + 1;
        const Eigen::VectorXd b = rp.coefficients(z);

        double max_norm = 0.0;
        for (Index g = 0; g < rp.groups(); ++g) {
            max_norm = std::max(max_norm, b.segment(g * w, w).norm());
        }
        // A penalized group at the origin makes the restricted objective nonsmooth.
        Index collapsed = -1;
        double smallest = std::numeric_limits<double>::infinity();
        for (Index g = 0; g < rp.groups(); ++g) {
            const double ng = b.segment(g * w, w).norm();
            if (rp.lambdas[g] > 0.0 && ng <= 1e-12 * std::max(1.0, max_norm) && ng < smallest) {
                smallest = ng;
                collapsed = g;
            }
        }
        if (collapsed >= 0) {
            res.outcome = NewtonOutcome::drop;
            res.drop_group = collapsed;
            res.z = z;
            return res;
        }

        Eigen::VectorXd pen_grad = Eigen::VectorXd::Zero(b.size());
        Eigen::MatrixXd pen_hess = Eigen::MatrixXd::Zero(b.size(), b.size());
        for (Index g = 0; g < rp.groups(); ++g) {
            if (rp.lambdas[g] == 0.0) {
                continue;
            }
            const auto bg = b.segment(g * w, w);
            const double ng = bg.norm();
            const Eigen::VectorXd u = bg / ng;
            pen_grad.segment(g * w, w) = rp.lambdas[g] * u;
            pen_hess.block(g * w, g * w, w, w) =
                (rp.lambdas[g] / ng) * (Eigen::MatrixXd::Identity(w, w) - u * u.transpose());
        }
        const Eigen::VectorXd grad = rp.q_mat * z + rp.q_vec + rp.p.transpose() * pen_grad;
        if (grad.lpNorm<Eigen::Infinity>() <= grad_tol) {
            res.outcome = NewtonOutcome::converged;
            res.z = z;
            return res;
        }
        const Eigen::MatrixXd hess = rp.q_mat + rp.p.transpose() * pen_hess * rp.p;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
        if (ldlt.info() != Eigen::Success) {
            return res;
        }
        const Eigen::VectorXd step = -ldlt.solve(grad);
        if (!step.allFinite()) {
            return res;
        }

        // The penalty has no curvature along b_g itself, so a full step that
        // reverses a group means its optimum sits at the origin.
        const Eigen::VectorXd b_next = b + rp.p * step;
        Index reversed = -1;
        double most_negative = 0.0;
        for (Index g = 0; g < rp.groups(); ++g) {
            if (rp.lambdas[g] == 0.0) {
                continue;
            }
            const auto bg = b.segment(g * w, w);
            const double ratio = bg.dot(b_next.segment(g * w, w)) / bg.squaredNorm();
            if (ratio <= 0.0 && (reversed < 0 || ratio < most_negative)) {
                most_negative = ratio;
                reversed = g;
            }
        }
        if (reversed >= 0) {
            res.outcome = NewtonOutcome::drop;
            res.drop_group = reversed;
            res.z = z;
            return res;
        }

        const double f0 = rp.value(z);
        const double slope = grad.dot(step);
        if (slope >= 0.0) {
            // Rounding-level gradient; nothing left to gain.
            res.outcome = NewtonOutcome::converged;
            res.z = z;
            return res;
        }
        double alpha = 1.0;
        Eigen::VectorXd trial = z + step;
        int halvings = 0;
        while (rp.value(trial) > f0 + 1e-4 * alpha * slope && halvings < 40) {
            alpha *= 0.5;
            trial = z + alpha * step;
            ++halvings;
        }
        if (halvings == 40) {
            res.outcome = NewtonOutcome::converged;
            res.z = z;
            return res;
        }
        z = trial;
        if (alpha == 1.0 && -slope <= 1e-28 * (1.0 + std::abs(f0))) {
            res.outcome = NewtonOutcome::converged;
            res.z = z;
            return res;
        }
    }
    return res;
}

/// Returns nullopt if some e_j is not reachable from the support columns.
std::optional<ReducedProblem> reduce_constrained(const GroupLassoProblem& problem, const std::vector<Index>& support,
                                                 const Eigen::MatrixXd& start, Eigen::VectorXd& z0)
{
    const Eigen::MatrixXd ms = columns(problem.model.values, support);
    const Index k = ms.cols();
    const Index nj = static_cast<Index>(problem.targets.size());
    const Eigen::MatrixXd e = target_rows(ms.rows(), problem.targets);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(ms, Eigen::ComputeFullU | Eigen::ComputeFullV);
    svd.setThreshold(1e-12);
    const Index rank = svd.rank();

    // b0 rows: minimum-norm solutions on the support.
    const Eigen::MatrixXd b0_rows = svd.solve(e.transpose()).transpose(); // |J| x k
    const Eigen::MatrixXd fit = b0_rows * ms.transpose() - e;
    for (Index j = 0; j < nj; ++j) {
        if (fit.row(j).norm() > 1e-10) {
            return std::nullopt;
        }
    }
    const Eigen::MatrixXd null_basis = svd.matrixV().rightCols(k - rank); // k x r
    const Index r = null_basis.cols();

    ReducedProblem rp;
    rp.width = nj;
    rp.lambdas.resize(k);
    rp.b0.resize(k * nj);
    for (Index g = 0; g < k; ++g) {
        rp.lambdas[g] = problem.lambdas[support[g]];
        rp.b0.segment(g * nj, nj) = b0_rows.col(g);
    }
    // z is stacked basis-major: z[i * nj + j]; b[(g, j)] = b0 + sum_i N(g, i) z[(i, j)].
    rp.p = Eigen::MatrixXd::Zero(k * nj, r * nj);
    for (Index g = 0; g < k; ++g) {
        for (Index i = 0; i < r; ++i) {
            for (Index j = 0; j < nj; ++j) {
                rp.p(g * nj + j, i * nj + j) = null_basis(g, i);
            }
        }
    }
    rp.q_mat = 2.0 * rp.p.transpose() * rp.p;
    rp.q_vec = 2.0 * rp.p.transpose() * rp.b0;

    z0 = Eigen::VectorXd::Zero(r * nj);
    for (Index i = 0; i < r; ++i) {
        for (Index j = 0; j < nj; ++j) {
            double acc = 0.0;
            for (Index g = 0; g < k; ++g) {
                acc += null_basis(g, i) * (start(j, support[g]) - b0_rows(j, g));
            }
            z0[i * nj + j] = acc;
        }
    }
    return rp;
}

ReducedProblem reduce_relaxed(const GroupLassoProblem& problem, const std::vector<Index>& support,
                              const Eigen::MatrixXd& start, Eigen::VectorXd& z0)
{
    const Eigen::MatrixXd ms = columns(problem.model.values, support);
    const Index k = ms.cols();
    const Index nj = static_cast<Index>(problem.targets.size());
    const Eigen::MatrixXd gram = ms.transpose() * ms;

    ReducedProblem rp;
    rp.width = nj;
    rp.lambdas.resize(k);
    rp.b0 = Eigen::VectorXd::Zero(k * nj);
    rp.p = Eigen::MatrixXd::Identity(k * nj, k * nj);
    rp.q_mat = Eigen::MatrixXd::Zero(k * nj, k * nj);
    rp.q_vec = Eigen::VectorXd::Zero(k * nj);
    z0.resize(k * nj);
    for (Index g = 0; g < k; ++g) {
        rp.lambdas[g] = problem.lambdas[support[g]];
        for (Index j = 0; j < nj; ++j) {
            const double kappa = problem.kappas[j];
            z0[g * nj + j] = start(j, support[g]);
            rp.q_vec[g * nj + j] = -2.0 * kappa * ms(problem.targets[j], g);
            for (Index h = 0; h < k; ++h) {
                rp.q_mat(g * nj + j, h * nj + j) = 2.0 * ((g == h ? 1.0 : 0.0) + kappa * gram(g, h));
            }
        }
    }
    return rp;
}

} // namespace

Certificate certify(const GroupLassoProblem& problem, const Eigen::MatrixXd& coefficients,
                    const std::vector<Index>& support)
{
    const Eigen::MatrixXd& m = problem.model.values;
    const Index nj = static_cast<Index>(problem.targets.size());
    const Eigen::MatrixXd e = target_rows(m.rows(), problem.targets);
    const Eigen::MatrixXd fit = coefficients * m.transpose() - e; // |J| x |terms|

    Certificate cert;
    for (Index j = 0; j < nj; ++j) {
        cert.constraint_residual = std::max(cert.constraint_residual, fit.row(j).norm());
    }

    std::vector<char> in_support(static_cast<std::size_t>(m.cols()), 0);
    for (Index g : support) {
        in_support[g] = 1;
    }

    // grad(:, g) of the smooth part plus the penalty gradient on support groups.
    Eigen::MatrixXd grad = 2.0 * coefficients;
    if (problem.mode == SolveMode::relaxed) {
        for (Index j = 0; j < nj; ++j) {
            grad.row(j) += 2.0 * problem.kappas[j] * fit.row(j) * m;
        }
    }
    for (Index g : support) {
        const double ng = coefficients.col(g).norm();
        if (problem.lambdas[g] > 0.0 && ng > 0.0) {
            grad.col(g) += problem.lambdas[g] * coefficients.col(g) / ng;
        }
    }

    if (problem.mode == SolveMode::constrained) {
        const Eigen::MatrixXd ms = columns(m, support);
        Eigen::MatrixXd grad_s(nj, static_cast<Index>(support.size()));
        for (std::size_t i = 0; i < support.size(); ++i) {
            grad_s.col(static_cast<Index>(i)) = grad.col(support[i]);
        }
        // grad_s^T + ms^T nu = 0 in the least-squares sense.
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(ms.transpose());
        const Eigen::MatrixXd nu = -cod.solve(grad_s.transpose()); // |terms| x |J|
        grad += (m.transpose() * nu).transpose();
    }

    for (Index g = 0; g < m.cols(); ++g) {
        const double block = grad.col(g).norm();
        if (in_support[g]) {
            cert.stationarity = std::max(cert.stationarity, block);
        } else {
            // Zero group: the remaining gradient must fit in the lambda_g ball.
            cert.dual_violation = std::max(cert.dual_violation, block - problem.lambdas[g]);
        }
    }
    cert.dual_violation = std::max(cert.dual_violation, 0.0);

    const auto& opt = problem.options;
    const bool feasible = problem.mode == SolveMode::relaxed || cert.constraint_residual <= opt.primal_tol;
    cert.passed = feasible && cert.stationarity <= opt.dual_tol && cert.dual_violation <= opt.dual_tol;
    return cert;
}

std::optional<PolishResult> polish_on_support(const GroupLassoProblem& problem, std::vector<Index> support,
                                              const Eigen::MatrixXd& start)
{
    const Index nj = static_cast<Index>(problem.targets.size());
    PolishResult out;
    Eigen::MatrixXd current = start;

    while (!support.empty()) {
        if (static_cast<Index>(support.size()) * nj > kMaxPolishVariables) {
            return std::nullopt;
        }
        Eigen::VectorXd z0;
        ReducedProblem rp;
        if (problem.mode == SolveMode::constrained) {
            auto reduced = reduce_constrained(problem, support, current, z0);
            if (!reduced) {
                return std::nullopt;
            }
            rp = std::move(*reduced);
        } else {
            rp = reduce_relaxed(problem, support, current, z0);
        }

        const NewtonResult nr = minimize_reduced(rp, z0);
        out.newton_iterations += nr.iterations;
        if (nr.outcome == NewtonOutcome::failed) {
            return std::nullopt;
        }

        const Eigen::VectorXd b = rp.coefficients(nr.z);
        current.setZero();
        for (std::size_t i = 0; i < support.size(); ++i) {
            current.col(support[i]) = b.segment(static_cast<Index>(i) * nj, nj);
        }
        if (nr.outcome == NewtonOutcome::converged) {
            out.coefficients = current;
            out.support = support;
            return out;
        }
        current.col(support[static_cast<std::size_t>(nr.drop_group)]).setZero();
        support.erase(support.begin() + nr.drop_group);
    }

    if (problem.mode == SolveMode::constrained) {
        return std::nullopt;
    }
    out.coefficients = Eigen::MatrixXd::Zero(nj, problem.model.candidate_count());
    out.support = {};
    return out;
}

} // namespace oadesign::detail
