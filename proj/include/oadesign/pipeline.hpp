#pragma once

#include <string>
#include <vector>

#include "oadesign/analysis.hpp"
#include "oadesign/config.hpp"
#include "oadesign/design_core.hpp"
#include "oadesign/io.hpp"
#include "oadesign/penalty_weights.hpp"
#include "oadesign/solver.hpp"

namespace oadesign {

/// Weights as used by a solve: subspace weights (or the explicit list),
/// scaled, with fixed points forced to zero.
struct ResolvedWeights
{
    WeightTrace trace;
    bool from_subspace = true;
};

ResolvedWeights resolve_weights(const RunConfig& config, const ModelMatrix& model);

struct DesignRun
{
    ModelSpec spec;
    CandidateSet candidates;
    ModelMatrix model;
    ResolvedWeights weights;
    GroupLassoProblem problem;
    Solution solution;
    DesignMatrix design;
};

/// Candidates -> model matrix -> weights -> solve -> selected design.
DesignRun run_design(const RunConfig& config);

/// Design CSV: factor rows first, then every non-intercept term that is not a
/// plain main effect, one column per run.
LabelledMatrix design_table(const ModelSpec& spec, const Eigen::MatrixXd& points);

/// Built-in configurations for the three worked two-level examples:
/// 4 = three-factor main-effect model, 5 = four factors with a1*a2, a1*a3,
/// a1*a4, 6 = the same plus a2*a3.
RunConfig builtin_config(int example);

/// Reference designs, factors as rows and runs as columns.
Eigen::MatrixXd reference_l4();
Eigen::MatrixXd reference_l4_mirrored();
Eigen::MatrixXd reference_l8();
Eigen::MatrixXd reference_nine_run();

struct ReproduceReport
{
    int example = 0;
    bool passed = false;
    std::vector<std::string> lines;
};

/// Runs the built-in example end to end and checks its acceptance conditions.
ReproduceReport reproduce_example(int example);

} // namespace oadesign
