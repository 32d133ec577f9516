#pragma once

#include <vector>

#include <Eigen/Dense>

#include "oadesign/design_core.hpp"
#include "oadesign/pipeline.hpp"
#include "rational_oracle.hpp"

namespace fixtures {

using namespace oadesign;

struct Example
{
    ModelSpec spec;
    CandidateSet candidates;
    ModelMatrix model;
};

inline Example example(int n)
{
    const RunConfig c = builtin_config(n);
    ModelSpec spec = c.model_spec();
    CandidateSet cands = c.candidate_set();
    ModelMatrix m = build_model_matrix(cands, spec, Execution::serial);
    return {std::move(spec), std::move(cands), std::move(m)};
}

inline std::vector<Index> targets(std::initializer_list<Index> t)
{
    return t;
}

/// Estimator block of the L4 support {1,4,6,7}, rows gamma_1..gamma_3.
inline Eigen::MatrixXd l4_block()
{
    Eigen::MatrixXd b(3, 8);
    b << -1, 0, 0, -1, 0, 1, 1, 0,
         -1, 0, 0, 1, 0, -1, 1, 0,
         -1, 0, 0, 1, 0, 1, -1, 0;
    return b / 4.0;
}

/// The mirrored block on support {2,3,5,8}.
inline Eigen::MatrixXd mirrored_block()
{
    Eigen::MatrixXd b(3, 8);
    b << 0, -1, -1, 0, 1, 0, 0, 1,
         0, -1, 1, 0, -1, 0, 0, 1,
         0, 1, -1, 0, -1, 0, 0, 1;
    return b / 4.0;
}

inline std::vector<oracle::Vec> rational_columns(const Eigen::MatrixXd& m, const std::vector<Index>& cols = {})
{
    std::vector<oracle::Vec> out;
    const auto take = [&](Index g) {
        oracle::Vec v;
        for (Index r = 0; r < m.rows(); ++r) {
            v.emplace_back(static_cast<long long>(m(r, g)));
        }
        out.push_back(std::move(v));
    };
    if (cols.empty()) {
        for (Index g = 0; g < m.cols(); ++g) {
            take(g);
        }
    } else {
        for (Index g : cols) {
            take(g);
        }
    }
    return out;
}

} // namespace fixtures
