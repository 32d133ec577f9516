#include "oadesign/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "oadesign/errors.hpp"
#include "support_polish.hpp"

namespace oadesign {

DesignMatrix make_design(const CandidateSet& candidates, const Eigen::MatrixXd& coefficients,
                         const std::vector<Index>& support)
{
    const auto n = static_cast<Index>(support.size());
    DesignMatrix d;
    d.points.resize(candidates.factor_count(), n);
    d.estimators.resize(coefficients.rows(), n);
    d.source_indices = support;
    for (Index i = 0; i < n; ++i) {
        d.points.col(i) = candidates.points.col(support[i]);
        d.estimators.col(i) = coefficients.col(support[i]);
    }
    d.variances = d.estimators.rowwise().squaredNorm();
    return d;
}

UnbiasednessReport check_unbiasedness(const ModelMatrix& model, const std::vector<Index>& targets,
                                      const Eigen::MatrixXd& coefficients, double tol)
{
    if (coefficients.rows() != static_cast<Index>(targets.size()) || coefficients.cols() != model.candidate_count()) {
        throw SpecificationError("coefficient matrix does not match the model");
    }
    const Eigen::MatrixXd fit =
        coefficients * model.values.transpose() - detail::target_rows(model.term_count(), targets);
    UnbiasednessReport r;
    r.residuals = fit.rowwise().lpNorm<Eigen::Infinity>();
    r.max_residual = r.residuals.size() > 0 ? r.residuals.maxCoeff() : 0.0;
    r.passed = r.max_residual <= tol;
    return r;
}

VarianceReport variance_sum(const Eigen::MatrixXd& coefficients, double sigma_sq)
{
    if (!(sigma_sq > 0.0)) {
        throw SpecificationError("sigma^2 must be positive");
    }
    VarianceReport r;
    r.per_parameter = sigma_sq * coefficients.rowwise().squaredNorm();
    r.total = r.per_parameter.sum();
    return r;
}

namespace {

struct RunningMoments
{
    std::int64_t count = 0;
    Eigen::VectorXd mean;
    Eigen::VectorXd m2;

    explicit RunningMoments(Index width) : mean(Eigen::VectorXd::Zero(width)), m2(Eigen::VectorXd::Zero(width)) {}

    void push(const Eigen::VectorXd& x)
    {
        ++count;
        const Eigen::VectorXd delta = x - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta.cwiseProduct(x - mean);
    }

    void merge(const RunningMoments& other)
    {
        if (other.count == 0) {
            return;
        }
        const auto n1 = static_cast<double>(count);
        const auto n2 = static_cast<double>(other.count);
        const Eigen::VectorXd delta = other.mean - mean;
        const double total = n1 + n2;
        mean += delta * (n2 / total);
        m2 += other.m2 + delta.cwiseProduct(delta) * (n1 * n2 / total);
        count += other.count;
    }
};

constexpr std::int64_t kDrawsPerBlock = 8192;

} // namespace

MonteCarloReport monte_carlo_estimator_check(const ModelMatrix& model, const std::vector<Index>& targets,
                                             const Eigen::MatrixXd& coefficients,
                                             const Eigen::VectorXd& gamma_true, double sigma_sq,
                                             std::int64_t n_draws, std::uint64_t seed, Execution exec)
{
    if (gamma_true.size() != model.term_count()) {
        throw SpecificationError("gamma_true needs one entry per model term");
    }
    if (sigma_sq < 0.0 || n_draws < 2) {
        throw SpecificationError("need sigma^2 >= 0 and at least two draws");
    }
    const auto unbiased = check_unbiasedness(model, targets, coefficients, 1e-8);
    if (!unbiased.passed) {
        throw SpecificationError("estimators are biased (residual " + std::to_string(unbiased.max_residual) +
                                 "); Monte Carlo check needs M b_j = e_j");
    }

    const Index width = coefficients.rows();
    const Index groups = coefficients.cols();
    const Eigen::VectorXd clean_response = model.values.transpose() * gamma_true;
    const Eigen::VectorXd base = coefficients * clean_response;
    const double sigma = std::sqrt(sigma_sq);

    const std::int64_t blocks = (n_draws + kDrawsPerBlock - 1) / kDrawsPerBlock;
    std::vector<RunningMoments> partial(static_cast<std::size_t>(blocks), RunningMoments(width));

#pragma omp parallel for schedule(dynamic) if (exec == Execution::parallel)
    for (std::int64_t blk = 0; blk < blocks; ++blk) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(blk), static_cast<std::uint32_t>(blk >> 32)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> noise(0.0, 1.0);
        const std::int64_t begin = blk * kDrawsPerBlock;
        const std::int64_t end = std::min(n_draws, begin + kDrawsPerBlock);
        Eigen::VectorXd eps(groups);
        auto& acc = partial[static_cast<std::size_t>(blk)];
        for (std::int64_t i = begin; i < end; ++i) {
            for (Index g = 0; g < groups; ++g) {
                eps[g] = sigma * noise(rng);
            }
            acc.push(base + coefficients * eps);
        }
    }

    RunningMoments total(width);
    for (const auto& p : partial) {
        total.merge(p);
    }

    MonteCarloReport r;
    r.expected.resize(width);
    for (Index j = 0; j < width; ++j) {
        r.expected[j] = gamma_true[targets[static_cast<std::size_t>(j)]];
    }
    r.empirical_mean = total.mean;
    r.empirical_variance = total.m2 / static_cast<double>(total.count - 1);
    r.theoretical_variance = sigma_sq * coefficients.rowwise().squaredNorm();
    r.passed = true;
    const double root_n = std::sqrt(static_cast<double>(n_draws));
    for (Index j = 0; j < width; ++j) {
        const double sd = std::sqrt(r.theoretical_variance[j]);
        const bool mean_ok = std::abs(r.empirical_mean[j] - r.expected[j]) <= 4.0 * sd / root_n + 1e-12;
        const bool var_ok = std::abs(r.empirical_variance[j] - r.theoretical_variance[j]) <=
                            0.1 * r.theoretical_variance[j] + 1e-15;
        r.mean_ok.push_back(mean_ok);
        r.variance_ok.push_back(var_ok);
        r.passed = r.passed && mean_ok && var_ok;
    }
    return r;
}

namespace {

Eigen::MatrixXd support_columns(const Eigen::MatrixXd& m, const std::vector<Index>& support)
{
    Eigen::MatrixXd out(m.rows(), static_cast<Index>(support.size()));
    for (std::size_t i = 0; i < support.size(); ++i) {
        out.col(static_cast<Index>(i)) = m.col(support[i]);
    }
    return out;
}

/// Minimum-norm solutions on the support, |support| x |J|; returns the first
/// unreachable target position or -1.
Index restricted_least_squares(const Eigen::MatrixXd& ms, const Eigen::MatrixXd& e_cols, Eigen::MatrixXd& x)
{
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(ms);
    x = cod.solve(e_cols);
    const Eigen::MatrixXd fit = ms * x - e_cols;
    for (Index j = 0; j < fit.cols(); ++j) {
        if (fit.col(j).norm() > kFeasibilityTolerance) {
            return j;
        }
    }
    return -1;
}

} // namespace

Eigen::MatrixXd min_norm_least_squares(const ModelMatrix& model, const std::vector<Index>& support,
                                       const std::vector<Index>& targets)
{
    std::vector<char> seen(static_cast<std::size_t>(model.candidate_count()), 0);
    for (Index g : support) {
        if (g < 0 || g >= model.candidate_count() || seen[g]) {
            throw SpecificationError("support indices must be distinct candidate indices");
        }
        seen[g] = 1;
    }
    const Eigen::MatrixXd e_cols = detail::target_rows(model.term_count(), targets).transpose();
    Eigen::MatrixXd x;
    const Index bad = support.empty() ? 0 : restricted_least_squares(support_columns(model.values, support), e_cols, x);
    if (bad >= 0) {
        const auto pos = static_cast<std::size_t>(bad);
        throw InfeasibleError(pos, static_cast<std::size_t>(targets[pos]),
                              "target parameter " + std::to_string(targets[pos] + 1) +
                                  " is not estimable from the given runs");
    }
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Index>(targets.size()), model.candidate_count());
    for (std::size_t i = 0; i < support.size(); ++i) {
        b.col(support[i]) = x.row(static_cast<Index>(i)).transpose();
    }
    return b;
}

std::int64_t binomial_capped(Index g, Index n)
{
    if (n < 0 || n > g) {
        return 0;
    }
    n = std::min(n, g - n);
    // C(g, i) = C(g, i-1) * (g - i + 1) / i stays integral at every step.
    std::int64_t value = 1;
    for (Index i = 1; i <= n; ++i) {
        const auto num = static_cast<std::int64_t>(g - i + 1);
        if (value > (kOracleGuard * 64) / num) {
            return kOracleGuard + 1;
        }
        value = value * num / i;
    }
    return std::min<std::int64_t>(value, kOracleGuard + 1);
}

namespace {

/// Lexicographic unranking of an n-subset of {0..g-1}.
std::vector<Index> unrank_combination(Index g, Index n, std::int64_t rank)
{
    std::vector<Index> out;
    out.reserve(static_cast<std::size_t>(n));
    Index c = 0;
    for (Index i = 0; i < n; ++i) {
        for (;; ++c) {
            const std::int64_t count = binomial_capped(g - c - 1, n - i - 1);
            if (rank < count) {
                break;
            }
            rank -= count;
        }
        out.push_back(c++);
    }
    return out;
}

bool next_combination(std::vector<Index>& comb, Index g)
{
    const auto n = static_cast<Index>(comb.size());
    for (Index i = n - 1; i >= 0; --i) {
        if (comb[i] < g - n + i) {
            ++comb[i];
            for (Index k = i + 1; k < n; ++k) {
                comb[k] = comb[k - 1] + 1;
            }
            return true;
        }
    }
    return false;
}

constexpr double kOracleTieTolerance = 1e-9;
constexpr std::int64_t kSupportsPerChunk = 2048;

struct ChunkResult
{
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, std::vector<Index>>> near_best;
    std::int64_t evaluated = 0;
    std::int64_t feasible = 0;

    void absorb(double value, const std::vector<Index>& support)
    {
        if (value < best) {
            best = value;
            std::erase_if(near_best, [&](const auto& p) { return p.first > best + kOracleTieTolerance; });
        }
        if (value <= best + kOracleTieTolerance) {
            near_best.emplace_back(value, support);
        }
    }
};

} // namespace

OracleResult brute_force_a_optimal(const ModelMatrix& model, const std::vector<Index>& targets, Index support_size,
                                   Execution exec)
{
    const Index g = model.candidate_count();
    if (support_size < 1 || support_size > g) {
        throw SpecificationError("support size must lie in [1, G]");
    }
    const std::int64_t total = binomial_capped(g, support_size);
    if (total > kOracleGuard) {
        throw SizeError("C(" + std::to_string(g) + ", " + std::to_string(support_size) +
                        ") supports exceed the exhaustive-search guard of 10^7");
    }
    const Eigen::MatrixXd e_cols = detail::target_rows(model.term_count(), targets).transpose();
    const std::int64_t chunks = (total + kSupportsPerChunk - 1) / kSupportsPerChunk;
    std::vector<ChunkResult> partial(static_cast<std::size_t>(chunks));

#pragma omp parallel for schedule(dynamic) if (exec == Execution::parallel)
    for (std::int64_t ch = 0; ch < chunks; ++ch) {
        const std::int64_t begin = ch * kSupportsPerChunk;
        const std::int64_t end = std::min(total, begin + kSupportsPerChunk);
        auto& res = partial[static_cast<std::size_t>(ch)];
        std::vector<Index> comb = unrank_combination(g, support_size, begin);
        Eigen::MatrixXd x;
        for (std::int64_t r = begin; r < end; ++r) {
            ++res.evaluated;
            if (restricted_least_squares(support_columns(model.values, comb), e_cols, x) < 0) {
                ++res.feasible;
                res.absorb(x.squaredNorm(), comb);
            }
            next_combination(comb, g);
        }
    }

    // Chunks are merged in rank order, so the support list stays lexicographic.
    OracleResult out;
    for (const auto& p : partial) {
        out.evaluated_count += p.evaluated;
        out.feasible_count += p.feasible;
        out.optimal_value = std::min(out.optimal_value, p.best);
    }
    for (const auto& p : partial) {
        for (const auto& [value, support] : p.near_best) {
            if (value <= out.optimal_value + kOracleTieTolerance) {
                out.optimal_supports.push_back(support);
            }
        }
    }
    return out;
}

namespace {

std::vector<std::vector<double>> observed_levels(const Eigen::MatrixXd& points)
{
    std::vector<std::vector<double>> levels(static_cast<std::size_t>(points.rows()));
    for (Index f = 0; f < points.rows(); ++f) {
        auto& lv = levels[static_cast<std::size_t>(f)];
        for (Index r = 0; r < points.cols(); ++r) {
            lv.push_back(points(f, r));
        }
        std::sort(lv.begin(), lv.end());
        lv.erase(std::unique(lv.begin(), lv.end()), lv.end());
    }
    return levels;
}

} // namespace

bool oa_strength_check(const Eigen::MatrixXd& points, int strength, const std::vector<std::vector<double>>* levels)
{
    const Index nf = points.rows();
    const Index runs = points.cols();
    if (strength < 0 || strength > nf) {
        throw SpecificationError("strength must lie in [0, F]");
    }
    const auto lv = levels ? *levels : observed_levels(points);
    if (static_cast<Index>(lv.size()) != nf) {
        throw SpecificationError("level list does not match the factor count");
    }
    if (strength == 0) {
        return true;
    }

    // Level index of every entry, or -1 for an undeclared value.
    Eigen::MatrixXi code(nf, runs);
    for (Index f = 0; f < nf; ++f) {
        const auto& l = lv[static_cast<std::size_t>(f)];
        for (Index r = 0; r < runs; ++r) {
            const auto it = std::find(l.begin(), l.end(), points(f, r));
            if (it == l.end()) {
                return false;
            }
            code(f, r) = static_cast<int>(it - l.begin());
        }
    }

    std::vector<Index> rows(static_cast<std::size_t>(strength));
    std::iota(rows.begin(), rows.end(), Index{0});
    do {
        std::int64_t cells = 1;
        for (Index f : rows) {
            cells *= static_cast<std::int64_t>(lv[static_cast<std::size_t>(f)].size());
        }
        if (runs % cells != 0) {
            return false;
        }
        std::vector<std::int64_t> counts(static_cast<std::size_t>(cells), 0);
        for (Index r = 0; r < runs; ++r) {
            std::int64_t cell = 0;
            for (Index f : rows) {
                cell = cell * static_cast<std::int64_t>(lv[static_cast<std::size_t>(f)].size()) + code(f, r);
            }
            ++counts[static_cast<std::size_t>(cell)];
        }
        const std::int64_t expected = runs / cells;
        if (std::any_of(counts.begin(), counts.end(), [&](std::int64_t c) { return c != expected; })) {
            return false;
        }
    } while (next_combination(rows, nf));
    return true;
}

std::optional<std::vector<std::vector<int>>> canonical_form(const Eigen::MatrixXd& points)
{
    const Index nf = points.rows();
    const Index runs = points.cols();
    if (nf > 6) {
        return std::nullopt;
    }
    const auto lv = observed_levels(points);
    Eigen::MatrixXi coded(nf, runs);
    for (Index f = 0; f < nf; ++f) {
        const auto& l = lv[static_cast<std::size_t>(f)];
        if (l.size() > 2) {
            return std::nullopt;
        }
        for (Index r = 0; r < runs; ++r) {
            coded(f, r) = points(f, r) == l.front() ? -1 : 1;
        }
    }

    std::vector<Index> perm(static_cast<std::size_t>(nf));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::optional<std::vector<std::vector<int>>> best;
    std::vector<std::vector<int>> cand(static_cast<std::size_t>(runs), std::vector<int>(static_cast<std::size_t>(nf)));
    do {
        for (unsigned mask = 0; mask < (1u << nf); ++mask) {
            for (Index r = 0; r < runs; ++r) {
                for (Index f = 0; f < nf; ++f) {
                    const int sign = (mask >> f) & 1u ? -1 : 1;
                    cand[static_cast<std::size_t>(r)][static_cast<std::size_t>(f)] = sign * coded(perm[f], r);
                }
            }
            std::sort(cand.begin(), cand.end());
            if (!best || cand < *best) {
                best = cand;
            }
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

EquivalenceResult design_equivalent(const Eigen::MatrixXd& first, const Eigen::MatrixXd& second)
{
    if (first.rows() != second.rows() || first.cols() != second.cols()) {
        return {false, "designs differ in size"};
    }
    const auto a = canonical_form(first);
    const auto b = canonical_form(second);
    if (!a || !b) {
        return {false, "equivalence is only decided for two-level designs with at most 6 factors"};
    }
    if (*a == *b) {
        return {true, "canonical forms match"};
    }
    return {false, "canonical forms differ"};
}

} // namespace oadesign
