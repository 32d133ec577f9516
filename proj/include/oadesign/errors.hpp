#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace oadesign {

/// Malformed input: bad dimensions, out-of-range indices, invalid levels.
class SpecificationError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// Some target e_j is not reachable from the candidate (or support) columns.
class InfeasibleError : public std::runtime_error
{
public:
    InfeasibleError(std::size_t target_position, std::size_t term_index, const std::string& what)
        : std::runtime_error(what), target_position_(target_position), term_index_(term_index)
    {}

    /// Position of the offending parameter within the target list (0-based).
    std::size_t target_position() const noexcept { return target_position_; }
    /// Row of the model matrix the parameter refers to (0-based).
    std::size_t term_index() const noexcept { return term_index_; }

private:
    std::size_t target_position_;
    std::size_t term_index_;
};

/// Exhaustive enumeration would exceed the desk-scale guard.
class SizeError : public std::length_error
{
public:
    using std::length_error::length_error;
};

} // namespace oadesign
