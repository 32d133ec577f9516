#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "oadesign/errors.hpp"

using namespace oadesign;

namespace {

std::vector<Factor> two_level(int f)
{
    std::vector<Factor> out;
    for (int i = 0; i < f; ++i) {
        out.push_back({"a" + std::to_string(i + 1), {-1.0, 1.0}});
    }
    return out;
}

} // namespace

TEST(FullFactorial, ThreeTwoLevelFactorsMatchTheCandidateMatrix)
{
    const auto c = enumerate_full_factorial(two_level(3));
    Eigen::MatrixXd expected(3, 8);
    expected << -1, -1, -1, -1, 1, 1, 1, 1,
                -1, -1, 1, 1, -1, -1, 1, 1,
                -1, 1, -1, 1, -1, 1, -1, 1;
    EXPECT_EQ(c.points, expected);
}

TEST(FullFactorial, SingleFactor)
{
    const auto c = enumerate_full_factorial({{"x", {0.0, 1.0}}});
    ASSERT_EQ(c.size(), 2);
    EXPECT_EQ(c.points(0, 0), 0.0);
    EXPECT_EQ(c.points(0, 1), 1.0);
}

TEST(FullFactorial, MixedLevelsAreDistinct)
{
    const auto c = enumerate_full_factorial({{"a", {0, 1}}, {"b", {-1, 0, 1}}});
    ASSERT_EQ(c.size(), 6);
    std::set<std::pair<double, double>> seen;
    for (Index g = 0; g < c.size(); ++g) {
        seen.insert({c.points(0, g), c.points(1, g)});
    }
    EXPECT_EQ(seen.size(), 6u);
}

TEST(EvaluateTerm, Examples)
{
    EXPECT_EQ(evaluate_term(Eigen::Vector3d(-1, -1, -1), {{1, 0, 0}}), -1.0);
    EXPECT_EQ(evaluate_term(Eigen::Vector3d(0.5, 7, -3), {{0, 0, 0}}), 1.0);
    EXPECT_EQ(evaluate_term(Eigen::Vector3d(-1, 1, -1), {{1, 0, 1}}), 1.0);
    EXPECT_EQ(evaluate_term(Eigen::Vector3d(0, 2, 1), {{0, 2, 0}}), 4.0);
}

TEST(ModelMatrix, MainEffectModelOnThreeFactors)
{
    const auto ex = fixtures::example(4);
    Eigen::MatrixXd expected(4, 8);
    expected << 1, 1, 1, 1, 1, 1, 1, 1,
                -1, -1, -1, -1, 1, 1, 1, 1,
                -1, -1, 1, 1, -1, -1, 1, 1,
                -1, 1, -1, 1, -1, 1, -1, 1;
    EXPECT_EQ(ex.model.values, expected);
}

TEST(ModelMatrix, InterceptOnly)
{
    const auto f = two_level(3);
    const ModelSpec spec(f, {{{0, 0, 0}}}, {0});
    const auto m = build_model_matrix(enumerate_full_factorial(f), spec);
    EXPECT_TRUE((m.values.array() == 1.0).all());
}

TEST(ModelMatrix, AllOnesPointGivesAllOnesColumn)
{
    const auto ex = fixtures::example(5);
    const Index g = find_candidate(ex.candidates, Eigen::Vector4d(1, 1, 1, 1));
    ASSERT_GE(g, 0);
    EXPECT_TRUE((ex.model.values.col(g).array() == 1.0).all());
}

TEST(ModelMatrix, RowsOrthogonalWithNormG)
{
    for (int n : {4, 5, 6}) {
        const auto ex = fixtures::example(n);
        const Eigen::MatrixXd gram = ex.model.values * ex.model.values.transpose();
        const double g = static_cast<double>(ex.candidates.size());
        EXPECT_TRUE(gram.isApprox(g * Eigen::MatrixXd::Identity(gram.rows(), gram.cols()))) << "example " << n;
    }
}

TEST(ModelMatrix, CommutesWithColumnPermutation)
{
    const auto ex = fixtures::example(6);
    std::vector<Index> perm(static_cast<std::size_t>(ex.candidates.size()));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(7));
    CandidateSet shuffled{Eigen::MatrixXd(ex.candidates.points.rows(), ex.candidates.size())};
    for (std::size_t i = 0; i < perm.size(); ++i) {
        shuffled.points.col(static_cast<Index>(i)) = ex.candidates.points.col(perm[i]);
    }
    const auto m = build_model_matrix(shuffled, ex.spec);
    for (std::size_t i = 0; i < perm.size(); ++i) {
        EXPECT_EQ(m.values.col(static_cast<Index>(i)), ex.model.values.col(perm[i]));
    }
}

TEST(ModelMatrix, SerialAndParallelAgree)
{
    const auto f = two_level(8);
    std::vector<ModelTerm> terms{{std::vector<int>(8, 0)}};
    for (int i = 0; i < 8; ++i) {
        for (int k = i; k < 8; ++k) {
            std::vector<int> e(8, 0);
            e[static_cast<std::size_t>(i)] += 1;
            e[static_cast<std::size_t>(k)] += 1;
            terms.push_back({e});
        }
    }
    const ModelSpec spec(f, terms, {1});
    const auto c = enumerate_full_factorial(f);
    EXPECT_EQ(build_model_matrix(c, spec, Execution::serial).values,
              build_model_matrix(c, spec, Execution::parallel).values);
}

TEST(ModelMatrix, DimensionMismatchThrows)
{
    const ModelSpec spec(two_level(3), {{{1, 0, 0}}}, {0});
    const auto c = enumerate_full_factorial(two_level(2));
    EXPECT_THROW(build_model_matrix(c, spec), SpecificationError);
}

TEST(DuplicateColumns, Examples)
{
    const auto c = enumerate_full_factorial(two_level(3));
    EXPECT_EQ(duplicate_columns(c, std::vector<int>(8, 1)).points, c.points);
    EXPECT_EQ(duplicate_columns(c, std::vector<int>(8, 2)).size(), 16);

    const auto two = enumerate_full_factorial(two_level(1));
    const auto d = duplicate_columns(two, {2, 1});
    ASSERT_EQ(d.size(), 3);
    EXPECT_EQ(d.points(0, 0), -1.0);
    EXPECT_EQ(d.points(0, 1), -1.0);
    EXPECT_EQ(d.points(0, 2), 1.0);
    EXPECT_THROW(duplicate_columns(two, {1, 0}), SpecificationError);
    EXPECT_THROW(duplicate_columns(two, {1}), SpecificationError);
}

TEST(ModelSpec, RejectsInvalidInput)
{
    const auto f = two_level(2);
    EXPECT_THROW(ModelSpec({}, {}, {}), SpecificationError);
    EXPECT_THROW(ModelSpec(f, {{{1, 0}}, {{1, 0}}}, {0}), SpecificationError);
    EXPECT_THROW(ModelSpec(f, {{{1, 0}}}, {}), SpecificationError);
    EXPECT_THROW(ModelSpec(f, {{{1, 0}}}, {1}), SpecificationError);
    EXPECT_THROW(ModelSpec(f, {{{1, 0, 0}}}, {0}), SpecificationError);
    EXPECT_THROW(ModelSpec(f, {{{-1, 0}}}, {0}), SpecificationError);
    EXPECT_THROW(ModelSpec({{"a", {1.0, 1.0}}}, {{{1}}}, {0}), SpecificationError);
}

TEST(ModelSpec, TermLabels)
{
    const ModelSpec spec(two_level(3), {{{0, 0, 0}}, {{1, 0, 0}}, {{1, 0, 1}}, {{0, 2, 0}}}, {1});
    EXPECT_EQ(spec.term_label(0), "1");
    EXPECT_EQ(spec.term_label(1), "a1");
    EXPECT_EQ(spec.term_label(2), "a1*a3");
    EXPECT_EQ(spec.term_label(3), "a2^2");
}

TEST(Candidates, ValidationRejectsUnknownLevels)
{
    CandidateSet c{Eigen::MatrixXd::Constant(2, 1, 0.5)};
    EXPECT_THROW(validate_candidates(c, two_level(2)), SpecificationError);
    EXPECT_NO_THROW(validate_candidates(enumerate_full_factorial(two_level(2)), two_level(2)));
}
