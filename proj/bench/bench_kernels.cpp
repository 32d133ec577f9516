#include <numeric>

#include <benchmark/benchmark.h>

#include "oadesign/analysis.hpp"
#include "oadesign/design_core.hpp"
#include "oadesign/penalty_weights.hpp"
#include "oadesign/pipeline.hpp"

using namespace oadesign;

namespace {

Execution mode(const benchmark::State& state)
{
    return state.range(0) == 0 ? Execution::serial : Execution::parallel;
}

// F two-level factors with intercept, main effects and all two-factor interactions.
struct Interactions
{
    ModelSpec spec;
    CandidateSet candidates;
};

Interactions interaction_model(int f)
{
    std::vector<Factor> factors;
    for (int i = 0; i < f; ++i) {
        factors.push_back({"a" + std::to_string(i + 1), {-1.0, 1.0}});
    }
    std::vector<ModelTerm> terms{{std::vector<int>(static_cast<std::size_t>(f), 0)}};
    for (int i = 0; i < f; ++i) {
        std::vector<int> e(static_cast<std::size_t>(f), 0);
        e[static_cast<std::size_t>(i)] = 1;
        terms.push_back({e});
    }
    for (int i = 0; i < f; ++i) {
        for (int k = i + 1; k < f; ++k) {
            std::vector<int> e(static_cast<std::size_t>(f), 0);
            e[static_cast<std::size_t>(i)] = 1;
            e[static_cast<std::size_t>(k)] = 1;
            terms.push_back({e});
        }
    }
    std::vector<Index> targets;
    for (Index j = 1; j < static_cast<Index>(terms.size()); ++j) {
        targets.push_back(j);
    }
    ModelSpec spec(factors, terms, targets);
    return {std::move(spec), enumerate_full_factorial(factors)};
}

void BM_ModelMatrix(benchmark::State& state)
{
    const auto m = interaction_model(12);
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_model_matrix(m.candidates, m.spec, mode(state)));
    }
    state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}
BENCHMARK(BM_ModelMatrix)->Arg(0)->Arg(1)->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_SubspaceWeights(benchmark::State& state)
{
    const auto m = interaction_model(8);
    const auto model = build_model_matrix(m.candidates, m.spec, Execution::serial);
    for (auto _ : state) {
        benchmark::DoNotOptimize(subspace_penalty_weights(model, TieBreak::smallest_index(), mode(state)));
    }
    state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}
BENCHMARK(BM_SubspaceWeights)->Arg(0)->Arg(1)->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_BruteForce(benchmark::State& state)
{
    const RunConfig c = builtin_config(6);
    const auto spec = c.model_spec();
    const auto model = build_model_matrix(c.candidate_set(), spec, Execution::serial);
    for (auto _ : state) {
        benchmark::DoNotOptimize(brute_force_a_optimal(model, spec.targets(), 9, mode(state)));
    }
    state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}
BENCHMARK(BM_BruteForce)->Arg(0)->Arg(1)->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_MonteCarlo(benchmark::State& state)
{
    const RunConfig c = builtin_config(5);
    const auto spec = c.model_spec();
    const auto cands = c.candidate_set();
    const auto model = build_model_matrix(cands, spec, Execution::serial);
    std::vector<Index> all(static_cast<std::size_t>(cands.size()));
    std::iota(all.begin(), all.end(), Index{0});
    const auto b = min_norm_least_squares(model, all, spec.targets());
    const Eigen::VectorXd gamma = Eigen::VectorXd::LinSpaced(spec.term_count(), 0.0, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            monte_carlo_estimator_check(model, spec.targets(), b, gamma, 1.0, 200000, 1, mode(state)));
    }
    state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}
BENCHMARK(BM_MonteCarlo)->Arg(0)->Arg(1)->UseRealTime()->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
