#include "oadesign/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "oadesign/analysis.hpp"
#include "oadesign/config.hpp"
#include "oadesign/errors.hpp"
#include "oadesign/io.hpp"
#include "oadesign/pipeline.hpp"

namespace oadesign {

namespace {

using ojson = nlohmann::ordered_json;

struct CommonOptions
{
    std::string config_path;
    int example = 0;
    std::string output;
    std::string format = "json";
    std::string mode;
    std::vector<double> kappa;
    std::string lambda_file;
    std::optional<double> lambda_scale;
    std::vector<Index> fix_points;
    std::optional<std::uint64_t> seed;
    std::string tie_break;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool solver_flags)
{
    cmd->add_option("--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--example", o.example, "Use a built-in configuration instead of --config")
        ->check(CLI::IsMember({4, 5, 6}));
    cmd->add_option("--output,-o", o.output, "Write the result here instead of stdout");
    cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--seed", o.seed, "Seed for random tie-breaking and simulation");
    cmd->add_option("--tie-break", o.tie_break, "Tie-break policy")
        ->check(CLI::IsMember({"smallest_index", "random"}));
    cmd->add_option("--lambda-file", o.lambda_file, "Explicit penalty weights (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--lambda-scale", o.lambda_scale, "Multiply every penalty weight")->check(CLI::PositiveNumber);
    cmd->add_option("--fix-points", o.fix_points, "Already observed candidates (1-based), weight forced to 0")
        ->delimiter(',');
    if (solver_flags) {
        cmd->add_option("--mode", o.mode, "constrained or relaxed")
            ->check(CLI::IsMember({"constrained", "relaxed"}));
        cmd->add_option("--kappa", o.kappa, "Relaxation weight, one value or one per target")->delimiter(',');
    }
}

RunConfig resolve_config(const CommonOptions& o)
{
    if (o.config_path.empty() == (o.example == 0)) {
        throw SpecificationError("give exactly one of --config or --example");
    }
    RunConfig c = o.example != 0 ? builtin_config(o.example) : load_config(o.config_path);
    if (!o.mode.empty()) {
        c.mode = o.mode == "relaxed" ? SolveMode::relaxed : SolveMode::constrained;
    }
    if (!o.kappa.empty()) {
        c.kappa = o.kappa;
        if (c.kappa.size() != 1 && c.kappa.size() != c.targets.size()) {
            throw SpecificationError("--kappa needs one value or one per target");
        }
    }
    if (!o.lambda_file.empty()) {
        c.lambdas = load_lambda_file(o.lambda_file);
    }
    if (o.lambda_scale) {
        c.lambda_scale = *o.lambda_scale;
    }
    if (o.seed) {
        c.seed = *o.seed;
    }
    if (!o.tie_break.empty()) {
        c.tie_break = o.tie_break == "random" ? TieBreak::Kind::seeded_random : TieBreak::Kind::smallest_index;
    }
    if (!o.fix_points.empty()) {
        const Index g = c.candidate_set().size();
        for (Index p : o.fix_points) {
            if (p < 1 || p > g) {
                throw SpecificationError("--fix-points index " + std::to_string(p) + " is outside 1.." +
                                         std::to_string(g));
            }
            c.fixed_points.push_back(p - 1);
        }
    }
    return c;
}

void emit(const std::string& text, const std::string& path, std::ostream& out)
{
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream file(path);
    if (!file) {
        throw SpecificationError("cannot write " + path);
    }
    file << text;
}

std::string csv_text(const LabelledMatrix& m)
{
    std::ostringstream os;
    write_csv(os, m);
    return os.str();
}

ojson one_based(const std::vector<Index>& indices)
{
    auto out = ojson::array();
    for (auto i : indices) {
        out.push_back(i + 1);
    }
    return out;
}

ojson target_labels(const ModelSpec& spec)
{
    auto out = ojson::array();
    for (auto t : spec.targets()) {
        out.push_back(spec.term_label(t));
    }
    return out;
}

int cmd_enumerate(const CommonOptions& o, std::ostream& out)
{
    const RunConfig c = resolve_config(o);
    const CandidateSet cands = c.candidate_set();
    LabelledMatrix m;
    m.corner = "candidate";
    m.column_names = one_based_names(cands.size());
    for (const auto& f : c.factors) {
        m.row_labels.push_back(f.name);
    }
    m.values = cands.points;
    if (o.format == "json") {
        ojson doc;
        doc["factors"] = m.row_labels;
        doc["points"] = to_json(Eigen::MatrixXd(cands.points.transpose()));
        emit(dump_json(doc) + "\n", o.output, out);
    } else {
        emit(csv_text(m), o.output, out);
    }
    return exit_ok;
}

int cmd_weights(const CommonOptions& o, std::ostream& out)
{
    const RunConfig c = resolve_config(o);
    const ModelSpec spec = c.model_spec();
    const ModelMatrix model = build_model_matrix(c.candidate_set(), spec);
    const ResolvedWeights w = resolve_weights(c, model);
    if (o.format == "csv") {
        LabelledMatrix m;
        m.corner = "candidate";
        m.column_names = one_based_names(w.trace.lambdas.size());
        m.row_labels.push_back("lambda");
        m.values = w.trace.lambdas.transpose();
        for (Index t = 0; t < w.trace.l_matrix.cols(); ++t) {
            m.row_labels.push_back("l" + std::to_string(t + 1));
        }
        if (w.trace.l_matrix.cols() > 0) {
            m.values.conservativeResize(1 + w.trace.l_matrix.cols(), Eigen::NoChange);
            m.values.bottomRows(w.trace.l_matrix.cols()) = w.trace.l_matrix.transpose();
        }
        emit(csv_text(m), o.output, out);
        return exit_ok;
    }
    ojson doc;
    doc["source"] = w.from_subspace ? "subspace" : "explicit";
    doc["lambdas"] = to_json(w.trace.lambdas);
    doc["selection_order"] = one_based(w.trace.selection_order);
    doc["l_matrix"] = to_json(w.trace.l_matrix);
    emit(dump_json(doc) + "\n", o.output, out);
    return exit_ok;
}

int cmd_solve(const CommonOptions& o, const std::string& design_csv, std::ostream& out, std::ostream& err)
{
    const RunConfig c = resolve_config(o);
    const DesignRun run = run_design(c);
    const auto& sol = run.solution;
    const LabelledMatrix table = design_table(run.spec, run.design.points);

    if (o.format == "csv") {
        emit(csv_text(table), o.output, out);
    } else {
        const auto var = variance_sum(sol.coefficients, c.sigma_sq);
        ojson doc;
        doc["mode"] = to_string(c.mode);
        doc["status"] = to_string(sol.status);
        doc["iterations"] = sol.iterations;
        doc["objective"] = sol.objective;
        doc["constraint_residual"] = sol.constraint_residual;
        doc["stationarity_residual"] = sol.stationarity_residual;
        doc["dual_violation"] = sol.dual_violation;
        doc["support"] = one_based(sol.support);
        doc["targets"] = target_labels(run.spec);
        doc["sigma_sq"] = c.sigma_sq;
        doc["variances"] = to_json(var.per_parameter);
        doc["total_variance"] = var.total;
        doc["lambdas"] = to_json(run.weights.trace.lambdas);
        doc["group_norms"] = to_json(sol.group_norms);
        doc["coefficients"] = to_json(sol.coefficients);
        ojson design;
        design["rows"] = table.row_labels;
        design["runs"] = to_json(table.values);
        doc["design"] = design;
        emit(dump_json(doc) + "\n", o.output, out);
    }
    if (!design_csv.empty()) {
        emit(csv_text(table), design_csv, out);
    }
    if (sol.status != SolveStatus::converged) {
        err << "solver stopped after " << sol.iterations << " iterations without converging\n";
        return exit_not_converged;
    }
    return exit_ok;
}

int cmd_verify(const CommonOptions& o, const std::string& design_path, std::ostream& out, std::ostream& err)
{
    const RunConfig c = resolve_config(o);
    const ModelSpec spec = c.model_spec();
    const CandidateSet cands = c.candidate_set();

    std::ifstream in(design_path);
    if (!in) {
        throw SpecificationError("cannot open design " + design_path);
    }
    const LabelledMatrix table = read_csv(in);
    const Index f_count = spec.factor_count();
    Eigen::MatrixXd points(f_count, table.values.cols());
    for (Index f = 0; f < f_count; ++f) {
        const auto& name = spec.factors()[static_cast<std::size_t>(f)].name;
        const auto it = std::find(table.row_labels.begin(), table.row_labels.end(), name);
        if (it == table.row_labels.end()) {
            throw SpecificationError("design CSV has no row for factor " + name);
        }
        points.row(f) = table.values.row(static_cast<Index>(it - table.row_labels.begin()));
    }
    std::vector<Index> sources;
    for (Index r = 0; r < points.cols(); ++r) {
        const Index g = find_candidate(cands, points.col(r));
        if (g < 0) {
            throw SpecificationError("design run " + std::to_string(r + 1) + " is not a candidate point");
        }
        sources.push_back(g);
    }

    const CandidateSet runs{points};
    const ModelMatrix run_model = build_model_matrix(runs, spec);
    std::vector<Index> all(static_cast<std::size_t>(points.cols()));
    std::iota(all.begin(), all.end(), Index{0});

    std::vector<std::vector<double>> levels;
    for (const auto& f : spec.factors()) {
        levels.push_back(f.levels);
    }
    const bool strength2 = f_count >= 2 && oa_strength_check(points, 2, &levels);

    ojson doc;
    doc["runs"] = points.cols();
    doc["candidate_indices"] = one_based(sources);
    doc["targets"] = target_labels(spec);
    doc["oa_strength_2"] = strength2;

    int code = exit_ok;
    try {
        const Eigen::MatrixXd b = min_norm_least_squares(run_model, all, spec.targets());
        const auto unb = check_unbiasedness(run_model, spec.targets(), b, kFeasibilityTolerance);
        const auto var = variance_sum(b, c.sigma_sq);
        doc["feasible"] = true;
        doc["unbiased"] = unb.passed;
        doc["unbiasedness_residuals"] = to_json(unb.residuals);
        doc["variances"] = to_json(var.per_parameter);
        doc["total_variance"] = var.total;
        doc["estimators"] = to_json(b);

        const ModelMatrix model = build_model_matrix(cands, spec);
        const Index n = points.cols();
        if (binomial_capped(cands.size(), n) <= kOracleGuard) {
            const auto oracle = brute_force_a_optimal(model, spec.targets(), n);
            ojson o_doc;
            o_doc["support_size"] = n;
            o_doc["optimal_total_variance"] = c.sigma_sq * oracle.optimal_value;
            o_doc["optimal_support_count"] = oracle.optimal_supports.size();
            o_doc["a_optimal"] = std::isfinite(oracle.optimal_value) &&
                                 var.total <= c.sigma_sq * oracle.optimal_value * (1.0 + 1e-9) + 1e-12;
            doc["oracle"] = o_doc;
        } else {
            doc["oracle"] = "skipped: enumeration exceeds the size guard";
        }
    } catch (const InfeasibleError& e) {
        doc["feasible"] = false;
        doc["unbiased"] = false;
        doc["infeasible_parameter"] = spec.term_label(static_cast<Index>(e.term_index()));
        err << "design cannot estimate " << spec.term_label(static_cast<Index>(e.term_index())) << " unbiasedly\n";
        code = exit_infeasible;
    }
    emit(dump_json(doc) + "\n", o.output, out);
    return code;
}

int cmd_reproduce(const CommonOptions& o, int example, std::ostream& out)
{
    const ReproduceReport rep = reproduce_example(example);
    if (o.format == "json") {
        ojson doc;
        doc["example"] = rep.example;
        doc["passed"] = rep.passed;
        doc["lines"] = rep.lines;
        emit(dump_json(doc) + "\n", o.output, out);
    } else {
        std::string text;
        for (const auto& l : rep.lines) {
            text += l + "\n";
        }
        emit(text, o.output, out);
    }
    return rep.passed ? exit_ok : exit_check_failed;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Sparse A-optimal experimental designs by group lasso", "oadesigner"};
    app.require_subcommand(1);

    CommonOptions o;
    auto* enumerate = app.add_subcommand("enumerate", "Write the candidate design points");
    add_common(enumerate, o, false);
    auto* weights = app.add_subcommand("weights", "Compute penalty weights");
    add_common(weights, o, false);
    auto* solve_cmd = app.add_subcommand("solve", "Select a design");
    add_common(solve_cmd, o, true);
    std::string design_csv;
    solve_cmd->add_option("--design-csv", design_csv, "Also write the design matrix CSV here");
    auto* verify = app.add_subcommand("verify", "Check a design against the model");
    add_common(verify, o, false);
    std::string design_path;
    verify->add_option("--design", design_path, "Design CSV (factor rows, run columns)")->required();
    auto* reproduce = app.add_subcommand("reproduce", "Run a built-in worked example and check it");
    int example = 0;
    reproduce->add_option("example", example, "4, 5 or 6")->required()->check(CLI::IsMember({4, 5, 6}));
    reproduce->add_option("--output,-o", o.output, "Write the report here instead of stdout");
    reproduce->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    o.format.clear();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_input_error;
    }

    try {
        if (*enumerate) {
            o.format = o.format.empty() ? "csv" : o.format;
            return cmd_enumerate(o, out);
        }
        if (*weights) {
            o.format = o.format.empty() ? "json" : o.format;
            return cmd_weights(o, out);
        }
        if (*solve_cmd) {
            o.format = o.format.empty() ? "json" : o.format;
            return cmd_solve(o, design_csv, out, err);
        }
        if (*verify) {
            return cmd_verify(o, design_path, out, err);
        }
        o.format = o.format.empty() ? "csv" : o.format;
        return cmd_reproduce(o, example, out);
    } catch (const InfeasibleError& e) {
        err << "infeasible: parameter " << e.term_index() + 1 << " (" << e.what() << ")\n";
        return exit_infeasible;
    } catch (const SpecificationError& e) {
        err << "error: " << e.what() << "\n";
        return exit_input_error;
    } catch (const SizeError& e) {
        err << "error: " << e.what() << "\n";
        return exit_input_error;
    }
}

} // namespace oadesign
