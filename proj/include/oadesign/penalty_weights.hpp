#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "oadesign/design_core.hpp"

namespace oadesign {

/// How to pick g_{t+1} when several candidates attain the minimum l_{gt}.
struct TieBreak
{
    enum class Kind
    {
        smallest_index,
        seeded_random
    };

    Kind kind = Kind::smallest_index;
    std::uint64_t seed = 0;

    static TieBreak smallest_index() { return {}; }
    static TieBreak random(std::uint64_t seed) { return {Kind::seeded_random, seed}; }
};

/// Output of the greedy subspace weighting.
///
/// `l_matrix(g, t)` is the squared norm of the projection of column g of the
/// model matrix onto the span of the columns selected before step t (zero for
/// columns already selected). `lambdas(g)` is the row sum. Indices are 0-based,
/// so `selection_order.front()` is always 0.
struct WeightTrace
{
    Eigen::VectorXd lambdas;
    std::vector<Index> selection_order;
    Eigen::MatrixXd l_matrix;
};

/// Values whose difference from the step minimum is below this (relative to
/// the largest squared column norm) are treated as tied.
inline constexpr double kTieTolerance = 1e-9;

/// Relative tolerance below which a basis vector is considered dependent.
inline constexpr double kRankTolerance = 1e-10;

/// Orthonormal basis built incrementally by modified Gram-Schmidt with one
/// re-orthogonalization pass.
class OrthonormalBasis
{
public:
    explicit OrthonormalBasis(Index dimension);

    /// Adds `v` unless it is numerically in the current span. Returns whether
    /// it was added. The rank test is relative to the largest norm seen so far.
    bool add(const Eigen::Ref<const Eigen::VectorXd>& v);

    /// ||Q^T v||^2
    double projection_norm_sq(const Eigen::Ref<const Eigen::VectorXd>& v) const;

    Index rank() const noexcept { return rank_; }
    const Eigen::MatrixXd& vectors() const noexcept { return q_; }

private:
    Eigen::MatrixXd q_;
    Index rank_ = 0;
    double max_norm_ = 0.0;
};

/// Squared norm of the orthogonal projection of `vector` onto
/// span(basis_vectors); 0 for an empty basis. Equals ||v||^2 - dist(v, S)^2.
double projection_norm_sq(const Eigen::VectorXd& vector, const std::vector<Eigen::VectorXd>& basis_vectors);

/// Greedy subspace weights: starting from N_1 = {first candidate}, repeatedly
/// score every unselected column by its squared projection onto the span of
/// the selected ones, add an argmin to the selected set, and accumulate the
/// scores into lambda. Runs |terms| steps or until every candidate is selected.
WeightTrace subspace_penalty_weights(const ModelMatrix& model, const TieBreak& tie_break = {},
                                     Execution exec = Execution::parallel);

/// Multiplies every lambda by `scale` (> 0).
WeightTrace scale_weights(WeightTrace trace, double scale);

/// Forces lambda_g = 0 for already observed points (design augmentation).
void zero_fixed_points(Eigen::VectorXd& lambdas, const std::vector<Index>& fixed_points);

} // namespace oadesign
