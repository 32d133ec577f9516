// Prints one PASS/FAIL line per acceptance criterion and exits non-zero if
// any criterion fails.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "oadesign/analysis.hpp"
#include "oadesign/design_core.hpp"
#include "oadesign/errors.hpp"
#include "oadesign/penalty_weights.hpp"
#include "oadesign/pipeline.hpp"
#include "oadesign/solver.hpp"

using namespace oadesign;

namespace {

constexpr double kVarianceTol = 1e-6;
constexpr double kUnbiasedTol = 1e-8;
constexpr double kOracleMatchTol = 1e-8;
constexpr double kSymmetryTol = 1e-12;
constexpr double kPseudoInverseTol = 1e-8;
constexpr double kRelaxedResidualTol = 1e-4;
constexpr double kSubgradientTol = 1e-10;
constexpr double kPythagorasTol = 1e-9;
constexpr int kPropertyTrials = 1000;
constexpr std::int64_t kMonteCarloDraws = 100000;
constexpr std::uint64_t kMonteCarloSeed = 20240917;

struct Outcome
{
    bool passed;
    std::string detail;
};

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string list(const std::vector<Index>& v)
{
    std::string s = "{";
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += (i ? "," : "") + std::to_string(v[i] + 1);
    }
    return s + "}";
}

struct Problem
{
    ModelSpec spec;
    CandidateSet candidates;
    ModelMatrix model;
};

Problem example(int n)
{
    const RunConfig c = builtin_config(n);
    ModelSpec spec = c.model_spec();
    CandidateSet cands = c.candidate_set();
    ModelMatrix m = build_model_matrix(cands, spec);
    return {std::move(spec), std::move(cands), std::move(m)};
}

GroupLassoProblem constrained(const Problem& p, Eigen::VectorXd lambdas)
{
    return {p.model, p.spec.targets(), std::move(lambdas), SolveMode::constrained, {}, {}};
}

Solution solve_with_subspace_weights(const Problem& p)
{
    return solve(constrained(p, subspace_penalty_weights(p.model).lambdas));
}

std::optional<std::vector<Index>> subset_equivalent(const Eigen::MatrixXd& points, const Eigen::MatrixXd& ref)
{
    const Index n = ref.cols();
    const Index total = points.cols();
    if (total < n || total > 20) {
        return std::nullopt;
    }
    for (std::uint32_t mask = 0; mask < (1u << total); ++mask) {
        if (std::popcount(mask) != static_cast<int>(n)) {
            continue;
        }
        std::vector<Index> pick;
        Eigen::MatrixXd sub(points.rows(), n);
        for (Index c = 0; c < total; ++c) {
            if (mask & (1u << c)) {
                sub.col(static_cast<Index>(pick.size())) = points.col(c);
                pick.push_back(c);
            }
        }
        if (design_equivalent(sub, ref).equivalent) {
            return pick;
        }
    }
    return std::nullopt;
}

Outcome criterion1()
{
    const auto p = example(4);
    const auto s = solve_with_subspace_weights(p);
    const auto d = make_design(p.candidates, s.coefficients, s.support);
    const auto eq = design_equivalent(d.points, reference_l4());
    bool per = d.variances.size() == 3;
    for (Index j = 0; j < d.variances.size(); ++j) {
        per = per && std::abs(d.variances(j) - 0.25) <= kVarianceTol;
    }
    const double total = d.variances.sum();
    const bool ok = s.support.size() == 4 && eq.equivalent && per && std::abs(total - 0.75) <= kVarianceTol;
    return {ok, "support " + list(s.support) + ", L4-equivalent " + (eq.equivalent ? "yes" : "no") +
                    ", variances " + fmt("%.9f", d.variances.minCoeff()) + ".." + fmt("%.9f", d.variances.maxCoeff()) +
                    ", total " + fmt("%.9f", total)};
}

Outcome criterion2()
{
    const auto p = example(5);
    const auto s = solve_with_subspace_weights(p);
    const auto d = make_design(p.candidates, s.coefficients, s.support);
    const auto eq = design_equivalent(d.points, reference_l8());
    const bool strength = oa_strength_check(d.points, 2);
    const double total = d.variances.sum();
    const bool ok = s.support.size() == 8 && eq.equivalent && strength && std::abs(total - 0.875) <= kVarianceTol;
    std::string detail = "support " + list(s.support) + ", equivalent to reference 8-run design " +
                         (eq.equivalent ? "yes" : "no (" + eq.reason + ")") + ", strength 2 " +
                         (strength ? "yes" : "no") + ", total " + fmt("%.9f", total);
    if (!eq.equivalent && d.points.rows() == 4) {
        // Which defining relation the returned runs satisfy.
        const auto constant = [&](std::initializer_list<Index> rows) {
            std::optional<double> first;
            for (Index c = 0; c < d.points.cols(); ++c) {
                double prod = 1.0;
                for (Index r : rows) {
                    prod *= d.points(r, c);
                }
                if (first && *first != prod) {
                    return false;
                }
                first = prod;
            }
            return true;
        };
        detail += std::string(", a2*a3*a4 constant: ") + (constant({1, 2, 3}) ? "yes" : "no") +
                  ", a1*a2*a3*a4 constant: " + (constant({0, 1, 2, 3}) ? "yes" : "no");
    }
    return {ok, detail};
}

Outcome criterion3()
{
    const auto p = example(6);
    const auto s = solve_with_subspace_weights(p);
    const auto d = make_design(p.candidates, s.coefficients, s.support);
    const auto unb = check_unbiasedness(p.model, p.spec.targets(), s.coefficients, kUnbiasedTol);
    const auto subset = subset_equivalent(d.points, reference_l8());
    double oracle = std::numeric_limits<double>::quiet_NaN();
    try {
        oracle = min_norm_least_squares(p.model, s.support, p.spec.targets()).squaredNorm();
    } catch (const InfeasibleError&) {
    }
    const double total = d.variances.sum();
    const bool ok = s.support.size() == 9 && unb.passed && subset.has_value() &&
                    std::abs(total - oracle) <= kOracleMatchTol;
    return {ok, "support " + list(s.support) + " (" + std::to_string(s.support.size()) +
                    " runs), objective " + fmt("%.6f", s.objective) + ", unbiased residual " +
                    fmt("%.2e", unb.max_residual) + ", 8-run reference subset " +
                    (subset ? "at runs " + list(*subset) : std::string("none")) + ", total " + fmt("%.9f", total) +
                    " vs least squares " + fmt("%.9f", oracle)};
}

Outcome criterion4()
{
    const auto p = example(4);
    const auto problem = constrained(p, Eigen::VectorXd::Ones(8));
    const auto s = solve(problem);

    Eigen::MatrixXd l4(3, 8);
    l4 << -1, 0, 0, -1, 0, 1, 1, 0, -1, 0, 0, 1, 0, -1, 1, 0, -1, 0, 0, 1, 0, 1, -1, 0;
    Eigen::MatrixXd mirrored(3, 8);
    mirrored << 0, -1, -1, 0, 1, 0, 0, 1, 0, -1, 1, 0, -1, 0, 0, 1, 0, 1, -1, 0, -1, 0, 0, 1;
    l4 /= 4.0;
    mirrored /= 4.0;
    const double a = objective_value(problem, l4);
    const double b = objective_value(problem, mirrored);
    const bool feasible = check_unbiasedness(p.model, p.spec.targets(), l4, kUnbiasedTol).passed &&
                          check_unbiasedness(p.model, p.spec.targets(), mirrored, kUnbiasedTol).passed;
    const bool ok = s.status == SolveStatus::converged && s.support.size() > 4 && feasible &&
                    std::abs(a - b) <= kSymmetryTol;
    return {ok, "uniform-penalty support size " + std::to_string(s.support.size()) + ", objective " +
                    fmt("%.9f", s.objective) + ", block objectives " + fmt("%.15f", a) + " and " + fmt("%.15f", b)};
}

Outcome criterion5()
{
    const auto p = example(4);
    const auto r = brute_force_a_optimal(p.model, p.spec.targets(), 4);
    const std::vector<std::vector<Index>> expected{{0, 3, 5, 6}, {1, 2, 4, 7}};
    const bool ok = r.evaluated_count == 70 && std::abs(r.optimal_value - 0.75) <= 1e-12 &&
                    r.optimal_supports == expected;
    std::string supports;
    for (const auto& s : r.optimal_supports) {
        supports += " " + list(s);
    }
    return {ok, std::to_string(r.evaluated_count) + " supports, optimum " + fmt("%.12f", r.optimal_value) +
                    " at" + supports};
}

Outcome criterion6()
{
    const auto p = example(4);
    const auto s = solve(constrained(p, Eigen::VectorXd::Zero(8)));
    const Eigen::MatrixXd m = p.model.values;
    const Eigen::MatrixXd pinv = m.transpose() * (m * m.transpose()).inverse();
    double err = 0.0;
    for (std::size_t k = 0; k < p.spec.targets().size(); ++k) {
        err = std::max(err, (s.coefficients.row(static_cast<Index>(k)).transpose() - pinv.col(p.spec.targets()[k]))
                                .cwiseAbs()
                                .maxCoeff());
    }
    const double total = s.coefficients.squaredNorm();
    const bool ok = err <= kPseudoInverseTol && std::abs(total - 0.375) <= kVarianceTol;
    return {ok, "max deviation from pseudo-inverse " + fmt("%.2e", err) + ", total " + fmt("%.12f", total)};
}

Outcome criterion7()
{
    const auto p = example(4);
    const auto lambdas = subspace_penalty_weights(p.model).lambdas;
    const auto reference = solve(constrained(p, lambdas));
    std::string detail = "residuals";
    bool monotone = true;
    double previous = std::numeric_limits<double>::infinity();
    Solution last;
    for (double kappa : {1e2, 1e3, 1e4, 1e5, 1e6}) {
        last = solve({p.model, p.spec.targets(), lambdas, SolveMode::relaxed, Eigen::VectorXd::Constant(3, kappa), {}});
        monotone = monotone && last.constraint_residual <= previous;
        previous = last.constraint_residual;
        detail += " " + fmt("%.3e", last.constraint_residual);
    }
    const bool same = last.support == reference.support;
    detail += ", final support " + list(last.support) + (same ? " (matches constrained)" : " vs constrained " +
                                                                                           list(reference.support));
    return {monotone && previous <= kRelaxedResidualTol && same, detail};
}

Outcome criterion8()
{
    std::mt19937_64 rng(8);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uni(0.01, 10.0);
    std::uniform_int_distribution<int> dim(1, 10);

    int soft_fail = 0;
    for (int t = 0; t < kPropertyTrials; ++t) {
        Eigen::VectorXd d(dim(rng));
        for (auto& v : d) {
            v = normal(rng);
        }
        const double c = uni(rng);
        const double lambda = uni(rng) * (t % 3 == 0 ? 0.1 : 2.0);
        const Eigen::VectorXd x = group_soft_threshold(d, c, lambda);
        const bool ok = x.norm() > 0.0
                            ? (2.0 * c * x - 2.0 * d + lambda * x / x.norm()).norm() <= kSubgradientTol * std::max(1.0, d.norm())
                            : 2.0 * d.norm() <= lambda + kSubgradientTol;
        soft_fail += ok ? 0 : 1;
    }

    int pyth_fail = 0;
    for (int t = 0; t < kPropertyTrials; ++t) {
        const int n = dim(rng) + 2;
        const int k = std::uniform_int_distribution<int>(1, n + 1)(rng);
        Eigen::MatrixXd a(n, k);
        std::vector<Eigen::VectorXd> basis;
        for (int i = 0; i < k; ++i) {
            for (Index r = 0; r < n; ++r) {
                a(r, i) = normal(rng);
            }
            basis.push_back(a.col(i));
        }
        Eigen::VectorXd v(n);
        for (auto& e : v) {
            e = normal(rng);
        }
        const double dist_sq = (a * a.completeOrthogonalDecomposition().solve(v) - v).squaredNorm();
        pyth_fail += std::abs(projection_norm_sq(v, basis) + dist_sq - v.squaredNorm()) <=
                             kPythagorasTol * v.squaredNorm()
                         ? 0
                         : 1;
    }

    const auto p = example(4);
    const auto s = solve_with_subspace_weights(p);
    const Eigen::Vector4d gamma(0, 1, 2, 3);
    const auto mc = monte_carlo_estimator_check(p.model, p.spec.targets(), s.coefficients, gamma, 1.0, kMonteCarloDraws,
                                                kMonteCarloSeed);

    const auto p6 = example(6);
    const auto w1 = subspace_penalty_weights(p6.model, TieBreak::random(3));
    const auto w2 = subspace_penalty_weights(p6.model, TieBreak::random(3));
    const auto s1 = solve_with_subspace_weights(p6);
    const auto s2 = solve_with_subspace_weights(p6);
    const auto mc2 = monte_carlo_estimator_check(p.model, p.spec.targets(), s.coefficients, gamma, 1.0,
                                                 kMonteCarloDraws, kMonteCarloSeed);
    const bool deterministic = w1.lambdas == w2.lambdas && w1.selection_order == w2.selection_order &&
                               s1.coefficients == s2.coefficients && s1.iterations == s2.iterations &&
                               mc.empirical_mean == mc2.empirical_mean &&
                               mc.empirical_variance == mc2.empirical_variance;

    const bool ok = soft_fail == 0 && pyth_fail == 0 && mc.passed && deterministic;
    return {ok, "soft-threshold failures " + std::to_string(soft_fail) + "/" + std::to_string(kPropertyTrials) +
                    ", Pythagoras failures " + std::to_string(pyth_fail) + "/" + std::to_string(kPropertyTrials) +
                    ", Monte Carlo " + (mc.passed ? "pass" : "fail") + " (means " +
                    fmt("%.4f", mc.empirical_mean(0)) + " " + fmt("%.4f", mc.empirical_mean(1)) + " " +
                    fmt("%.4f", mc.empirical_mean(2)) + ", variances " + fmt("%.4f", mc.empirical_variance(0)) + " " +
                    fmt("%.4f", mc.empirical_variance(1)) + " " + fmt("%.4f", mc.empirical_variance(2)) +
                    "), repeated runs bitwise identical " + (deterministic ? "yes" : "no")};
}

} // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"three-factor main-effect design is L4", criterion1},
        {"four-factor design is the reference L8", criterion2},
        {"nine-run design contains the reference L8", criterion3},
        {"uniform penalty is not sparse", criterion4},
        {"brute-force four-run optimum", criterion5},
        {"zero penalty gives the pseudo-inverse", criterion6},
        {"relaxation approaches the constrained solution", criterion7},
        {"property suites", criterion8},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        std::printf("criterion %zu %s: %s | %s | %.0f ms\n", i + 1, o.passed ? "PASS" : "FAIL", criteria[i].first,
                    o.detail.c_str(), ms);
        failed += o.passed ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
