#include "oadesign/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>

#include "oadesign/errors.hpp"
#include "oadesign/io.hpp"

namespace oadesign {

namespace {

bool is_main_effect(const ModelTerm& term)
{
    return term.degree() == 1;
}

std::string format(const char* fmt, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

std::string index_list(const std::vector<Index>& indices)
{
    std::string out;
    for (auto i : indices) {
        out += (out.empty() ? "" : " ") + std::to_string(i + 1);
    }
    return out;
}

std::string check_line(bool ok, const std::string& text)
{
    return std::string(ok ? "  ok    " : "  FAIL  ") + text;
}

// First n-subset of the design columns that is equivalent to `reference`.
std::optional<std::vector<Index>> equivalent_subset(const Eigen::MatrixXd& points, const Eigen::MatrixXd& reference)
{
    const Index n = reference.cols();
    const Index total = points.cols();
    if (total < n) {
        return std::nullopt;
    }
    std::vector<Index> pick(static_cast<std::size_t>(n));
    std::iota(pick.begin(), pick.end(), Index{0});
    Eigen::MatrixXd sub(points.rows(), n);
    while (true) {
        for (Index i = 0; i < n; ++i) {
            sub.col(i) = points.col(pick[static_cast<std::size_t>(i)]);
        }
        if (design_equivalent(sub, reference).equivalent) {
            return pick;
        }
        Index k = n - 1;
        while (k >= 0 && pick[static_cast<std::size_t>(k)] == total - n + k) {
            --k;
        }
        if (k < 0) {
            return std::nullopt;
        }
        ++pick[static_cast<std::size_t>(k)];
        for (Index i = k + 1; i < n; ++i) {
            pick[static_cast<std::size_t>(i)] = pick[static_cast<std::size_t>(i - 1)] + 1;
        }
    }
}

Eigen::MatrixXd from_rows(std::initializer_list<std::initializer_list<double>> rows)
{
    Eigen::MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
    Index r = 0;
    for (const auto& row : rows) {
        Index c = 0;
        for (double v : row) {
            m(r, c++) = v;
        }
        ++r;
    }
    return m;
}

} // namespace

ResolvedWeights resolve_weights(const RunConfig& config, const ModelMatrix& model)
{
    ResolvedWeights out;
    if (config.lambdas) {
        const auto& l = *config.lambdas;
        if (static_cast<Index>(l.size()) != model.candidate_count()) {
            throw SpecificationError("explicit lambda list has " + std::to_string(l.size()) + " entries, expected G = " +
                                     std::to_string(model.candidate_count()));
        }
        out.trace.lambdas = Eigen::Map<const Eigen::VectorXd>(l.data(), static_cast<Index>(l.size()));
        out.from_subspace = false;
    } else {
        out.trace = subspace_penalty_weights(model, config.tie_break_policy());
    }
    out.trace = scale_weights(std::move(out.trace), config.lambda_scale);
    zero_fixed_points(out.trace.lambdas, config.fixed_points);
    return out;
}

DesignRun run_design(const RunConfig& config)
{
    ModelSpec spec = config.model_spec();
    CandidateSet candidates = config.candidate_set();
    ModelMatrix model = build_model_matrix(candidates, spec);
    ResolvedWeights weights = resolve_weights(config, model);

    GroupLassoProblem problem{model, spec.targets(), weights.trace.lambdas, config.mode, {}, config.solver};
    if (config.mode == SolveMode::relaxed) {
        problem.kappas = config.kappa_vector();
    }
    Solution solution = solve(problem);
    DesignMatrix design = make_design(candidates, solution.coefficients, solution.support);
    return DesignRun{std::move(spec),    std::move(candidates), std::move(model),   std::move(weights),
                     std::move(problem), std::move(solution),   std::move(design)};
}

LabelledMatrix design_table(const ModelSpec& spec, const Eigen::MatrixXd& points)
{
    std::vector<Index> extra;
    for (Index t = 0; t < spec.term_count(); ++t) {
        const auto& term = spec.terms()[static_cast<std::size_t>(t)];
        if (!term.is_intercept() && !is_main_effect(term)) {
            extra.push_back(t);
        }
    }
    LabelledMatrix out;
    out.corner = "Run";
    out.column_names = one_based_names(points.cols());
    out.values.resize(spec.factor_count() + static_cast<Index>(extra.size()), points.cols());
    for (Index f = 0; f < spec.factor_count(); ++f) {
        out.row_labels.push_back(spec.factors()[static_cast<std::size_t>(f)].name);
        out.values.row(f) = points.row(f);
    }
    for (std::size_t k = 0; k < extra.size(); ++k) {
        const Index row = spec.factor_count() + static_cast<Index>(k);
        out.row_labels.push_back(spec.term_label(extra[k]));
        const auto& term = spec.terms()[static_cast<std::size_t>(extra[k])];
        for (Index c = 0; c < points.cols(); ++c) {
            out.values(row, c) = evaluate_term(points.col(c), term);
        }
    }
    return out;
}

RunConfig builtin_config(int example)
{
    if (example < 4 || example > 6) {
        throw SpecificationError("built-in examples are 4, 5 and 6");
    }
    const int f = example == 4 ? 3 : 4;
    RunConfig c;
    for (int i = 0; i < f; ++i) {
        c.factors.push_back({"a" + std::to_string(i + 1), {-1.0, 1.0}});
    }
    c.terms.push_back({std::vector<int>(static_cast<std::size_t>(f), 0)});
    for (int i = 0; i < f; ++i) {
        std::vector<int> e(static_cast<std::size_t>(f), 0);
        e[static_cast<std::size_t>(i)] = 1;
        c.terms.push_back({e});
    }
    if (example >= 5) {
        c.terms.push_back({{1, 1, 0, 0}});
        c.terms.push_back({{1, 0, 1, 0}});
        c.terms.push_back({{1, 0, 0, 1}});
    }
    if (example == 6) {
        c.terms.push_back({{0, 1, 1, 0}});
    }
    for (Index j = 1; j < static_cast<Index>(c.terms.size()); ++j) {
        c.targets.push_back(j);
    }
    return c;
}

Eigen::MatrixXd reference_l4()
{
    return from_rows({{-1, -1, 1, 1}, {-1, 1, -1, 1}, {-1, 1, 1, -1}});
}

Eigen::MatrixXd reference_l4_mirrored()
{
    return -reference_l4();
}

Eigen::MatrixXd reference_l8()
{
    return from_rows({{1, 1, 1, 1, -1, -1, -1, -1},
                      {1, 1, -1, -1, 1, 1, -1, -1},
                      {1, -1, 1, -1, 1, -1, 1, -1},
                      {1, -1, -1, 1, -1, 1, 1, -1}});
}

Eigen::MatrixXd reference_nine_run()
{
    return from_rows({{1, 1, 1, 1, -1, -1, -1, -1, 1},
                      {1, 1, -1, -1, 1, 1, -1, -1, 1},
                      {1, -1, 1, -1, 1, -1, 1, -1, -1},
                      {1, -1, -1, 1, -1, 1, 1, -1, 1}});
}

ReproduceReport reproduce_example(int example)
{
    const RunConfig config = builtin_config(example);
    const DesignRun run = run_design(config);
    const auto& sol = run.solution;
    const auto& support = sol.support;
    const auto n = static_cast<Index>(support.size());
    const double total = run.design.variances.sum();

    ReproduceReport rep;
    rep.example = example;
    auto& lines = rep.lines;
    lines.push_back("example " + std::to_string(example) + ": " + std::to_string(run.candidates.size()) +
                    " candidates, " + std::to_string(run.spec.term_count()) + " terms, " +
                    std::to_string(run.spec.targets().size()) + " targets");
    lines.push_back("solver: " + to_string(sol.status) + " after " + std::to_string(sol.iterations) +
                    " iterations, objective " + format("%.10g", sol.objective));
    lines.push_back("support (1-based): " + index_list(support));
    lines.push_back("total variance: " + format("%.12g", total));

    std::vector<bool> checks;
    const auto check = [&](bool ok, const std::string& text) {
        checks.push_back(ok);
        lines.push_back(check_line(ok, text));
    };
    check(sol.status == SolveStatus::converged, "solver converged");

    if (example == 4) {
        check(n == 4, "support size " + std::to_string(n) + " (expected 4)");
        const auto eq = design_equivalent(run.design.points, reference_l4());
        check(eq.equivalent, "equivalent to L4" + (eq.equivalent ? std::string{} : " (" + eq.reason + ")"));
        bool each = run.design.variances.size() == 3;
        for (Index j = 0; j < run.design.variances.size(); ++j) {
            each = each && std::abs(run.design.variances(j) - 0.25) <= 1e-6;
        }
        check(each, "per-parameter variance 0.25");
        check(std::abs(total - 0.75) <= 1e-6, "total variance 0.75");
    } else if (example == 5) {
        check(n == 8, "support size " + std::to_string(n) + " (expected 8)");
        const auto eq = design_equivalent(run.design.points, reference_l8());
        check(eq.equivalent, "equivalent to the reference 8-run design" +
                                 (eq.equivalent ? std::string{} : " (" + eq.reason + ")"));
        check(oa_strength_check(run.design.points, 2), "strength-2 orthogonal array on all factors");
        check(std::abs(total - 0.875) <= 1e-6, "total variance 7/8");
    } else {
        check(n == 9, "support size " + std::to_string(n) + " (expected 9)");
        const auto unb = check_unbiasedness(run.model, run.spec.targets(), sol.coefficients, 1e-8);
        check(unb.passed, "all targets unbiased (max residual " + format("%.3g", unb.max_residual) + ")");
        const auto subset = equivalent_subset(run.design.points, reference_l8());
        check(subset.has_value(), subset ? "runs " + index_list(*subset) + " form the reference 8-run design"
                                         : std::string("no 8-run subset equivalent to the reference 8-run design"));
        double oracle = std::numeric_limits<double>::quiet_NaN();
        try {
            oracle = min_norm_least_squares(run.model, support, run.spec.targets()).squaredNorm();
        } catch (const InfeasibleError&) {
        }
        check(std::abs(total - oracle) <= 1e-8,
              "total variance matches least squares on the support (" + format("%.12g", oracle) + ")");
    }
    rep.passed = std::all_of(checks.begin(), checks.end(), [](bool b) { return b; });
    lines.push_back(std::string("reproduce ") + std::to_string(example) + ": " + (rep.passed ? "PASS" : "FAIL"));
    return rep;
}

} // namespace oadesign
