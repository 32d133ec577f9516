#include "oadesign/penalty_weights.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "oadesign/errors.hpp"

namespace oadesign {

OrthonormalBasis::OrthonormalBasis(Index dimension) : q_(dimension, 0) {}

bool OrthonormalBasis::add(const Eigen::Ref<const Eigen::VectorXd>& v)
{
    if (v.size() != q_.rows()) {
        throw SpecificationError("basis vector length mismatch");
    }
    const double norm = v.norm();
    max_norm_ = std::max(max_norm_, norm);
    if (norm == 0.0) {
        return false;
    }

    Eigen::VectorXd w = v;
    for (int pass = 0; pass < 2; ++pass) {
        for (Index i = 0; i < rank_; ++i) {
            w -= q_.col(i).dot(w) * q_.col(i);
        }
    }
    const double rest = w.norm();
    if (rest <= kRankTolerance * max_norm_) {
        return false;
    }
    q_.conservativeResize(Eigen::NoChange, rank_ + 1);
    q_.col(rank_) = w / rest;
    ++rank_;
    return true;
}

double OrthonormalBasis::projection_norm_sq(const Eigen::Ref<const Eigen::VectorXd>& v) const
{
    if (rank_ == 0) {
        return 0.0;
    }
    return (q_.transpose() * v).squaredNorm();
}

double projection_norm_sq(const Eigen::VectorXd& vector, const std::vector<Eigen::VectorXd>& basis_vectors)
{
    OrthonormalBasis basis(vector.size());
    for (const auto& b : basis_vectors) {
        basis.add(b);
    }
    return basis.projection_norm_sq(vector);
}

namespace {

Index pick_tied(const std::vector<Index>& ties, const TieBreak& tie_break, std::mt19937_64& rng)
{
    if (tie_break.kind == TieBreak::Kind::smallest_index || ties.size() == 1) {
        return ties.front();
    }
    std::uniform_int_distribution<std::size_t> pick(0, ties.size() - 1);
    return ties[pick(rng)];
}

} // namespace

WeightTrace subspace_penalty_weights(const ModelMatrix& model, const TieBreak& tie_break, Execution exec)
{
    const Eigen::MatrixXd& m = model.values;
    const Index g_count = m.cols();
    const Index steps = m.rows();
    if (g_count < 1) {
        throw SpecificationError("model matrix has no candidate columns");
    }

    WeightTrace trace;
    trace.l_matrix = Eigen::MatrixXd::Zero(g_count, steps);
    trace.selection_order.push_back(0);

    OrthonormalBasis basis(m.rows());
    if (!basis.add(m.col(0))) {
        throw SpecificationError("first candidate column of the model matrix is zero");
    }

    std::vector<char> selected(static_cast<std::size_t>(g_count), 0);
    selected[0] = 1;
    const double tie_tol = kTieTolerance * std::max(1.0, m.colwise().squaredNorm().maxCoeff());
    std::mt19937_64 rng(tie_break.seed);

    for (Index t = 0; t < steps; ++t) {
        if (static_cast<Index>(trace.selection_order.size()) == g_count) {
            break;
        }

#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
        for (Index g = 0; g < g_count; ++g) {
            if (!selected[g]) {
                trace.l_matrix(g, t) = basis.projection_norm_sq(m.col(g));
            }
        }

        double best = std::numeric_limits<double>::infinity();
        for (Index g = 0; g < g_count; ++g) {
            if (!selected[g]) {
                best = std::min(best, trace.l_matrix(g, t));
            }
        }
        std::vector<Index> ties;
        for (Index g = 0; g < g_count; ++g) {
            if (!selected[g] && trace.l_matrix(g, t) <= best + tie_tol) {
                ties.push_back(g);
            }
        }

        const Index next = pick_tied(ties, tie_break, rng);
        selected[next] = 1;
        trace.selection_order.push_back(next);
        basis.add(m.col(next));
    }

    trace.lambdas = trace.l_matrix.rowwise().sum();
    return trace;
}

WeightTrace scale_weights(WeightTrace trace, double scale)
{
    if (!(scale > 0.0)) {
        throw SpecificationError("lambda scale must be positive");
    }
    trace.lambdas *= scale;
    return trace;
}

void zero_fixed_points(Eigen::VectorXd& lambdas, const std::vector<Index>& fixed_points)
{
    for (Index g : fixed_points) {
        if (g < 0 || g >= lambdas.size()) {
            throw SpecificationError("fixed point " + std::to_string(g + 1) + " is out of range");
        }
        lambdas[g] = 0.0;
    }
}

} // namespace oadesign
