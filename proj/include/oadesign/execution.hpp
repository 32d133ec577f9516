#pragma once

namespace oadesign {

/// Selects between the OpenMP kernel and its serial reference.
///
/// Both paths partition work identically and combine partial results in a
/// fixed order, so they return bitwise-identical values. The serial path is
/// kept for testing and benchmarking.
enum class Execution
{
    serial,
    parallel
};

int max_threads() noexcept;

} // namespace oadesign
